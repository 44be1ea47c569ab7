#pragma once

#include <string>
#include <vector>

namespace mm {

// Lowercases the text and splits it on every maximal run of non-alphanumeric
// characters. UTF-8 aware: Latin-1/Latin-Extended/Greek/Cyrillic letters are
// kept and case-folded, punctuation and symbols separate. Deterministic and
// idempotent on its own space-joined output.
std::vector<std::string> tokenize(const std::string& text);

// Tokens joined by single spaces.
std::string join_tokens(const std::vector<std::string>& tokens);

// 64-bit FNV-1a over raw bytes.
std::uint64_t fnv1a64(const void* data, std::size_t len);
std::uint64_t fnv1a64(const std::string& s);

}  // namespace mm
