#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "mm/errors.hpp"
#include "mm/query.hpp"
#include "support/fixtures.hpp"

using namespace mm;

TEST_CASE("golden suite: valid expressions serialize canonically") {
    static const std::pair<const char*, const char*> cases[] = {
        {"token(\"sad\")", "token(\"sad\")"},
        {"TOKEN(\"Sad\")", "token(\"sad\")"},
        {"ngram(\"panic attack\")", "ngram(\"panic attack\")"},
        {"ngram(\"feel so SAD today\")", "ngram(\"feel so sad today\")"},
        {"lexicon(liwc,negemo)", "lexicon(liwc,negemo)"},
        {"lexicon(\"liwc\", \"negemo\")", "lexicon(liwc,negemo)"},
        {"pronoun(first)", "pronoun(first)"},
        {"pronoun(FIRST)", "pronoun(first)"},
        {"lexicon(liwc,negemo) AND pronoun(first)",
         "AND(lexicon(liwc,negemo),pronoun(first))"},
        {"NOT (token(\"never\") OR token(\"always\"))",
         "NOT(OR(token(\"never\"),token(\"always\")))"},
        {"token(\"a\") AND token(\"b\") AND token(\"c\")",
         "AND(token(\"a\"),token(\"b\"),token(\"c\"))"},
        {"token(\"a\") OR token(\"b\") OR token(\"c\")",
         "OR(token(\"a\"),token(\"b\"),token(\"c\"))"},
        {"token(\"a\") OR token(\"b\") AND token(\"c\")",
         "OR(token(\"a\"),AND(token(\"b\"),token(\"c\")))"},
        {"(token(\"a\") OR token(\"b\")) AND token(\"c\")",
         "AND(OR(token(\"a\"),token(\"b\")),token(\"c\"))"},
        {"NOT NOT token(\"x\")", "NOT(NOT(token(\"x\")))"},
        {"not token(\"x\")", "NOT(token(\"x\"))"},
        {"  token( \"x\" )  ", "token(\"x\")"},
        {"NOT token(\"x\") AND token(\"y\")", "AND(NOT(token(\"x\")),token(\"y\"))"},
        {"lexicon(my-lex,cat_1)", "lexicon(my-lex,cat_1)"},
        {"(((token(\"deep\"))))", "token(\"deep\")"},
    };
    for (const auto& [input, expected] : cases) {
        CAPTURE(input);
        CHECK(parse_query(input).to_string() == expected);
    }
}

TEST_CASE("golden suite: invalid expressions report their position") {
    struct Case {
        const char* input;
        int line;
        int column;
    };
    static const Case cases[] = {
        {"AND token(\"x\")", 1, 1},
        {"token(\"x\") OR", 1, 14},
        {"token()", 1, 7},
        {"token(\"x\"", 1, 10},
        {"foo(\"x\")", 1, 1},
        {"pronoun(second)", 1, 9},
        {"token(\"x\")token(\"y\")", 1, 11},
        {"lexicon(liwc)", 1, 13},
        {"token(\"I'm\")", 1, 7},
        {"NOT", 1, 4},
        {"token(\"\")", 1, 7},
        {"(token(\"x\") OR token(\"y\")", 1, 26},
        {"token(\"a\")\nAND AND token(\"b\")", 2, 5},
    };
    for (const auto& c : cases) {
        CAPTURE(c.input);
        try {
            parse_query(c.input);
            FAIL_CHECK("expected ParseError for: " << c.input);
        } catch (const ParseError& e) {
            CHECK(e.line() == c.line);
            CHECK(e.column() == c.column);
        }
    }
}

TEST_CASE("eval_query matches the hand-evaluated truth table") {
    fixtures::TempDir dir("query");
    LexiconMap lexicons;
    lexicons.emplace("emolex", fixtures::fixture_lexicon(dir));

    struct Row {
        const char* query;
        const char* text;
        bool expected;
    };
    static const Row table[] = {
        {"pronoun(first) AND lexicon(emolex,neg)", "I am worthless", true},
        {"pronoun(first) AND lexicon(emolex,neg)", "He is worthless", false},
        {"pronoun(first) AND lexicon(emolex,neg)", "i feel hopelessness creeping", true},
        {"pronoun(first) AND lexicon(emolex,neg)", "we are fine", false},
        {"NOT token(\"x\")", "", true},
        {"token(\"never\") OR token(\"always\")", "it never ends", true},
        {"token(\"never\") OR token(\"always\")", "it ALWAYS ends", true},
        {"token(\"never\") OR token(\"always\")", "it sometimes ends", false},
        {"ngram(\"panic attack\")", "Panic attack again", true},
        {"ngram(\"panic attack\")", "panic, attack", true},
        {"ngram(\"panic attack\")", "panic and attack", false},
        {"NOT pronoun(first)", "He is ok", true},
        {"NOT pronoun(first)", "I am ok", false},
        {"pronoun(first)", "nothing about myself", true},
        {"lexicon(emolex,sadness) AND NOT token(\"happy\")", "sad but happy", false},
        {"lexicon(emolex,sadness) AND NOT token(\"happy\")", "just sad", true},
    };
    for (const auto& row : table) {
        CAPTURE(row.query);
        CAPTURE(row.text);
        CHECK(eval_query(parse_query(row.query), std::string(row.text), lexicons) == row.expected);
    }
}

TEST_CASE("eval errors on unresolved lexicons") {
    LexiconMap lexicons;
    CHECK_THROWS_AS(eval_query(parse_query("lexicon(nope,cat)"), std::string("text"), lexicons),
                    LookupError);
    fixtures::TempDir dir("query2");
    lexicons.emplace("emolex", fixtures::fixture_lexicon(dir));
    CHECK_THROWS_AS(
        eval_query(parse_query("lexicon(emolex,missing)"), std::string("text"), lexicons),
        LookupError);
}
