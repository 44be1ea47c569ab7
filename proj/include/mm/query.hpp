#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "mm/core.hpp"

namespace mm {

// Boolean expression over lexical predicates:
//   expr := term (OR term)*
//   term := factor (AND factor)*
//   factor := NOT factor | "(" expr ")" | predicate
//   predicate := token("w") | ngram("w1 w2") | lexicon(name, category)
//              | pronoun(first)
// Keywords and predicate names are case-insensitive; arguments may be quoted
// or bare identifiers.
class LexicalQuery {
public:
    enum class Op { And, Or, Not, Token, Ngram, LexiconPred, Pronoun };

    struct Node {
        Op op;
        std::vector<std::unique_ptr<Node>> children;
        std::vector<std::string> tokens;  // token/ngram: the tokenized argument
        std::string lexicon;
        std::string category;
    };

    LexicalQuery() = default;
    explicit LexicalQuery(std::unique_ptr<Node> root) : root_(std::move(root)) {}

    const Node* root() const { return root_.get(); }

    // Canonical functional form, e.g. AND(lexicon(liwc,negemo),pronoun(first)).
    std::string to_string() const;

private:
    std::unique_ptr<Node> root_;
};

// Throws ParseError with 1-based line/column on malformed input.
LexicalQuery parse_query(const std::string& text);

using LexiconMap = std::map<std::string, Lexicon>;

bool eval_query(const LexicalQuery& query, const std::string& text, const LexiconMap& lexicons);
bool eval_query(const LexicalQuery& query, const Utterance& utterance, const LexiconMap& lexicons);

}  // namespace mm
