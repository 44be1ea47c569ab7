#include "mm/query.hpp"

#include <algorithm>
#include <array>

#include "mm/errors.hpp"
#include "mm/text.hpp"

namespace mm {

namespace {

using Node = LexicalQuery::Node;
using Op = LexicalQuery::Op;

std::string ascii_lower(const std::string& s) {
    std::string out = s;
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

struct Token {
    enum class Kind { Ident, String, LParen, RParen, Comma, End };
    Kind kind;
    std::string text;
    int line;
    int column;
};

class Lexer {
public:
    explicit Lexer(const std::string& src) : src_(src) {}

    Token next() {
        skip_space();
        const int line = line_, column = column_;
        if (pos_ >= src_.size()) return {Token::Kind::End, "", line, column};
        const char c = src_[pos_];
        if (c == '(') return advance(), Token{Token::Kind::LParen, "(", line, column};
        if (c == ')') return advance(), Token{Token::Kind::RParen, ")", line, column};
        if (c == ',') return advance(), Token{Token::Kind::Comma, ",", line, column};
        if (c == '"') return read_string(line, column);
        if (std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-') {
            std::string ident;
            while (pos_ < src_.size()) {
                const char d = src_[pos_];
                if (!std::isalnum(static_cast<unsigned char>(d)) && d != '_' && d != '-') break;
                ident.push_back(d);
                advance();
            }
            return {Token::Kind::Ident, ident, line, column};
        }
        throw ParseError(std::string("unexpected character '") + c + "'", line, column);
    }

private:
    void advance() {
        if (pos_ < src_.size() && src_[pos_] == '\n') {
            ++line_;
            column_ = 1;
        } else {
            ++column_;
        }
        ++pos_;
    }

    void skip_space() {
        while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) advance();
    }

    Token read_string(int line, int column) {
        advance();  // opening quote
        std::string value;
        while (pos_ < src_.size() && src_[pos_] != '"') {
            if (src_[pos_] == '\\' && pos_ + 1 < src_.size()) {
                advance();
                value.push_back(src_[pos_]);
            } else {
                value.push_back(src_[pos_]);
            }
            advance();
        }
        if (pos_ >= src_.size()) throw ParseError("unterminated string", line, column);
        advance();  // closing quote
        return {Token::Kind::String, value, line, column};
    }

    const std::string& src_;
    std::size_t pos_ = 0;
    int line_ = 1;
    int column_ = 1;
};

class Parser {
public:
    explicit Parser(const std::string& src) : lexer_(src) { consume(); }

    std::unique_ptr<Node> parse() {
        auto expr = parse_expr();
        if (current_.kind != Token::Kind::End) {
            throw ParseError("unexpected trailing input \"" + current_.text + "\"", current_.line,
                             current_.column);
        }
        return expr;
    }

private:
    void consume() { current_ = lexer_.next(); }

    bool is_keyword(const char* kw) const {
        return current_.kind == Token::Kind::Ident && ascii_lower(current_.text) == kw;
    }

    std::unique_ptr<Node> parse_expr() {
        auto node = parse_term();
        while (is_keyword("or")) {
            consume();
            auto rhs = parse_term();
            if (node->op == Op::Or) {
                node->children.push_back(std::move(rhs));
            } else {
                auto parent = std::make_unique<Node>();
                parent->op = Op::Or;
                parent->children.push_back(std::move(node));
                parent->children.push_back(std::move(rhs));
                node = std::move(parent);
            }
        }
        return node;
    }

    std::unique_ptr<Node> parse_term() {
        auto node = parse_factor();
        while (is_keyword("and")) {
            consume();
            auto rhs = parse_factor();
            if (node->op == Op::And) {
                node->children.push_back(std::move(rhs));
            } else {
                auto parent = std::make_unique<Node>();
                parent->op = Op::And;
                parent->children.push_back(std::move(node));
                parent->children.push_back(std::move(rhs));
                node = std::move(parent);
            }
        }
        return node;
    }

    std::unique_ptr<Node> parse_factor() {
        if (is_keyword("not")) {
            consume();
            auto node = std::make_unique<Node>();
            node->op = Op::Not;
            node->children.push_back(parse_factor());
            return node;
        }
        if (current_.kind == Token::Kind::LParen) {
            consume();
            auto node = parse_expr();
            expect(Token::Kind::RParen, ")");
            return node;
        }
        return parse_predicate();
    }

    std::unique_ptr<Node> parse_predicate() {
        if (current_.kind != Token::Kind::Ident || is_keyword("and") || is_keyword("or")) {
            throw ParseError("expected a predicate", current_.line, current_.column);
        }
        const Token head = current_;
        const std::string name = ascii_lower(head.text);
        consume();
        expect(Token::Kind::LParen, "(");

        auto node = std::make_unique<Node>();
        if (name == "token" || name == "ngram") {
            node->op = name == "token" ? Op::Token : Op::Ngram;
            const Token arg = expect_arg();
            node->tokens = tokenize(arg.text);
            if (node->tokens.empty()) {
                throw ParseError(name + "() argument has no tokens", arg.line, arg.column);
            }
            if (name == "token" && node->tokens.size() != 1) {
                throw ParseError("token() argument must be a single token", arg.line, arg.column);
            }
        } else if (name == "lexicon") {
            node->op = Op::LexiconPred;
            node->lexicon = expect_arg().text;
            expect(Token::Kind::Comma, ",");
            node->category = expect_arg().text;
        } else if (name == "pronoun") {
            node->op = Op::Pronoun;
            const Token arg = expect_arg();
            if (ascii_lower(arg.text) != "first") {
                throw ParseError("unknown pronoun class \"" + arg.text + "\"", arg.line, arg.column);
            }
        } else {
            throw ParseError("unknown predicate \"" + head.text + "\"", head.line, head.column);
        }
        expect(Token::Kind::RParen, ")");
        return node;
    }

    Token expect_arg() {
        if (current_.kind != Token::Kind::Ident && current_.kind != Token::Kind::String) {
            throw ParseError("expected an argument", current_.line, current_.column);
        }
        Token arg = current_;
        consume();
        return arg;
    }

    void expect(Token::Kind kind, const char* what) {
        if (current_.kind != kind) {
            throw ParseError(std::string("expected \"") + what + "\"", current_.line,
                             current_.column);
        }
        consume();
    }

    Lexer lexer_;
    Token current_;
};

constexpr std::array<const char*, 10> kFirstPersonPronouns = {
    "i", "me", "my", "mine", "myself", "we", "us", "our", "ours", "ourselves"};

bool contains_ngram(const std::vector<std::string>& tokens, const std::vector<std::string>& ngram) {
    if (ngram.size() > tokens.size()) return false;
    for (std::size_t start = 0; start + ngram.size() <= tokens.size(); ++start) {
        bool match = true;
        for (std::size_t j = 0; j < ngram.size(); ++j) {
            if (tokens[start + j] != ngram[j]) {
                match = false;
                break;
            }
        }
        if (match) return true;
    }
    return false;
}

bool eval_node(const Node& node, const std::vector<std::string>& tokens,
               const LexiconMap& lexicons) {
    switch (node.op) {
        case Op::And:
            for (const auto& child : node.children) {
                if (!eval_node(*child, tokens, lexicons)) return false;
            }
            return true;
        case Op::Or:
            for (const auto& child : node.children) {
                if (eval_node(*child, tokens, lexicons)) return true;
            }
            return false;
        case Op::Not:
            return !eval_node(*node.children[0], tokens, lexicons);
        case Op::Token:
        case Op::Ngram:
            return contains_ngram(tokens, node.tokens);
        case Op::LexiconPred: {
            auto it = lexicons.find(node.lexicon);
            if (it == lexicons.end()) {
                throw LookupError("query references unknown lexicon \"" + node.lexicon + "\"");
            }
            auto cat = it->second.categories.find(node.category);
            if (cat == it->second.categories.end()) {
                throw LookupError("lexicon \"" + node.lexicon + "\" has no category \"" +
                                  node.category + "\"");
            }
            for (const auto& token : tokens) {
                for (const auto& entry : cat->second) {
                    if (lexicon_entry_matches(entry, token)) return true;
                }
            }
            return false;
        }
        case Op::Pronoun:
            for (const auto& token : tokens) {
                for (const char* p : kFirstPersonPronouns) {
                    if (token == p) return true;
                }
            }
            return false;
    }
    return false;
}

void node_to_string(const Node& node, std::string& out) {
    switch (node.op) {
        case Op::And:
        case Op::Or:
            out += node.op == Op::And ? "AND(" : "OR(";
            for (std::size_t i = 0; i < node.children.size(); ++i) {
                if (i) out.push_back(',');
                node_to_string(*node.children[i], out);
            }
            out.push_back(')');
            return;
        case Op::Not:
            out += "NOT(";
            node_to_string(*node.children[0], out);
            out.push_back(')');
            return;
        case Op::Token:
            out += "token(\"" + node.tokens[0] + "\")";
            return;
        case Op::Ngram:
            out += "ngram(\"" + join_tokens(node.tokens) + "\")";
            return;
        case Op::LexiconPred:
            out += "lexicon(" + node.lexicon + "," + node.category + ")";
            return;
        case Op::Pronoun:
            out += "pronoun(first)";
            return;
    }
}

}  // namespace

std::string LexicalQuery::to_string() const {
    if (!root_) return "";
    std::string out;
    node_to_string(*root_, out);
    return out;
}

LexicalQuery parse_query(const std::string& text) {
    Parser parser(text);
    return LexicalQuery(parser.parse());
}

bool eval_query(const LexicalQuery& query, const std::string& text, const LexiconMap& lexicons) {
    if (!query.root()) throw StateError("evaluating an empty query");
    return eval_node(*query.root(), tokenize(text), lexicons);
}

bool eval_query(const LexicalQuery& query, const Utterance& utterance, const LexiconMap& lexicons) {
    return eval_query(query, utterance.text, lexicons);
}

}  // namespace mm
