#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "mm/core.hpp"
#include "mm/errors.hpp"
#include "mm/text.hpp"
#include "support/fixtures.hpp"

using namespace mm;

TEST_CASE("tokenize applies the lowercase/split rule") {
    CHECK(tokenize("I'm SO tired...") == std::vector<std::string>{"i", "m", "so", "tired"});
    CHECK(tokenize("") == std::vector<std::string>{});
    CHECK(tokenize("abc123 déjà") == std::vector<std::string>{"abc123", "déjà"});
    CHECK(tokenize("DÉJÀ vu") == std::vector<std::string>{"déjà", "vu"});
    CHECK(tokenize("one,two;;three") == std::vector<std::string>{"one", "two", "three"});
    CHECK(tokenize("...!!!") == std::vector<std::string>{});
}

TEST_CASE("tokenize is idempotent on its own joined output") {
    std::mt19937_64 eng(11);
    const std::string alphabet = "abcXYZ019 ,.!?'\"-_éÀ%#@\n\t";
    for (int trial = 0; trial < 200; ++trial) {
        std::string text;
        const std::size_t len = eng() % 60;
        for (std::size_t i = 0; i < len; ++i) text += alphabet[eng() % alphabet.size()];
        const auto once = tokenize(text);
        const auto twice = tokenize(join_tokens(once));
        CHECK(once == twice);
        CHECK(tokenize(text) == once);  // pure
    }
}

TEST_CASE("corpus loading") {
    fixtures::TempDir dir("core");

    SUBCASE("reads records in order") {
        fixtures::write_text(dir.file("c.jsonl"),
                             "{\"id\":\"a\",\"text\":\"hello\"}\n{\"id\":\"b\",\"text\":\"bye\"}\n");
        const Corpus corpus = load_corpus(dir.file("c.jsonl"));
        REQUIRE(corpus.size() == 2);
        CHECK(corpus.utterances[0].id == "a");
        CHECK(corpus.utterances[0].text == "hello");
        CHECK(corpus.utterances[0].index == 0);
        CHECK(corpus.utterances[1].id == "b");
        CHECK(corpus.utterances[1].index == 1);
    }

    SUBCASE("empty file gives an empty corpus") {
        fixtures::write_text(dir.file("empty.jsonl"), "");
        CHECK(load_corpus(dir.file("empty.jsonl")).size() == 0);
    }

    SUBCASE("missing text field is a parse error naming the line") {
        fixtures::write_text(dir.file("bad.jsonl"), "{\"id\":\"a\"}\n");
        try {
            load_corpus(dir.file("bad.jsonl"));
            FAIL("expected ParseError");
        } catch (const ParseError& e) {
            CHECK(e.line() == 1);
        }
    }

    SUBCASE("duplicate id is a validation error") {
        fixtures::write_text(dir.file("dup.jsonl"),
                             "{\"id\":\"a\",\"text\":\"x\"}\n{\"id\":\"a\",\"text\":\"y\"}\n");
        CHECK_THROWS_AS(load_corpus(dir.file("dup.jsonl")), ValidationError);
    }
}

TEST_CASE("instance loading") {
    fixtures::TempDir dir("inst");

    SUBCASE("labeled record") {
        fixtures::write_text(
            dir.file("i.jsonl"),
            R"({"id":"u1","label":"depression","utterances":[{"id":"a","text":"one"},{"id":"b","text":"two"},{"id":"c","text":"three"}]})"
            "\n");
        const auto instances = load_instances(dir.file("i.jsonl"));
        REQUIRE(instances.size() == 1);
        CHECK(instances[0].size() == 3);
        CHECK(instances[0].label == "depression");
        for (std::size_t j = 0; j < 3; ++j) CHECK(instances[0].utterances[j].index == j);
    }

    SUBCASE("missing label is valid for classification inputs") {
        fixtures::write_text(dir.file("i.jsonl"),
                             R"({"id":"u1","utterances":[{"id":"a","text":"one"}]})"
                             "\n");
        CHECK_FALSE(load_instances(dir.file("i.jsonl"))[0].label.has_value());
    }

    SUBCASE("zero utterances violates k >= 1") {
        fixtures::write_text(dir.file("i.jsonl"), R"({"id":"u1","utterances":[]})"
                                                  "\n");
        CHECK_THROWS_AS(load_instances(dir.file("i.jsonl")), ValidationError);
    }

    SUBCASE("non-string label is a parse error") {
        fixtures::write_text(dir.file("i.jsonl"),
                             R"({"id":"u1","label":3,"utterances":[{"id":"a","text":"x"}]})"
                             "\n");
        CHECK_THROWS_AS(load_instances(dir.file("i.jsonl")), ParseError);
    }
}

TEST_CASE("save/load round-trips preserve ids, texts, order, labels") {
    fixtures::TempDir dir("rt");
    std::mt19937_64 eng(5);

    Corpus corpus;
    corpus.id = "c";
    for (int i = 0; i < 40; ++i) {
        Utterance utt;
        utt.id = "u" + std::to_string(i);
        utt.text = fixtures::filler_sentence(eng) + (i % 7 == 0 ? " déjà \"quoted\"" : "");
        utt.index = corpus.utterances.size();
        corpus.utterances.push_back(std::move(utt));
    }
    save_corpus(corpus, dir.file("c.jsonl"));
    const Corpus back = load_corpus(dir.file("c.jsonl"));
    REQUIRE(back.size() == corpus.size());
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        CHECK(back.utterances[i].id == corpus.utterances[i].id);
        CHECK(back.utterances[i].text == corpus.utterances[i].text);
        CHECK(back.utterances[i].index == corpus.utterances[i].index);
    }

    const auto task = fixtures::separable_task(10, 2, 3);
    save_instances(task.train, dir.file("i.jsonl"));
    const auto back_instances = load_instances(dir.file("i.jsonl"));
    REQUIRE(back_instances.size() == task.train.size());
    for (std::size_t i = 0; i < task.train.size(); ++i) {
        CHECK(back_instances[i].id == task.train[i].id);
        CHECK(back_instances[i].label == task.train[i].label);
        REQUIRE(back_instances[i].size() == task.train[i].size());
        for (std::size_t j = 0; j < task.train[i].size(); ++j) {
            CHECK(back_instances[i].utterances[j].text == task.train[i].utterances[j].text);
        }
    }
}

TEST_CASE("lexicon loading and entry matching") {
    fixtures::TempDir dir("lex");
    const Lexicon lex = fixtures::fixture_lexicon(dir);
    CHECK(lex.name == "emolex");
    CHECK(lex.has_category("sadness"));
    CHECK_FALSE(lex.has_category("anger"));

    CHECK(lexicon_entry_matches("hopeless*", "hopelessness"));
    CHECK(lexicon_entry_matches("hopeless*", "hopeless"));
    CHECK_FALSE(lexicon_entry_matches("hopeless*", "hope"));
    CHECK(lexicon_entry_matches("happy", "happy"));
    CHECK_FALSE(lexicon_entry_matches("happy", "unhappy"));

    fixtures::write_text(dir.file("bad.json"), R"({"name":"x","categories":{"empty":[]}})");
    CHECK_THROWS_AS(load_lexicon(dir.file("bad.json")), ValidationError);
}
