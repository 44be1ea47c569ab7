#include "mm/text.hpp"

#include <cstdint>

namespace mm {

namespace {

// Decodes one UTF-8 codepoint starting at s[i]; advances i. Invalid bytes
// decode as U+FFFD and consume one byte, so they act as separators.
char32_t decode_utf8(const std::string& s, std::size_t& i) {
    const auto b0 = static_cast<unsigned char>(s[i]);
    if (b0 < 0x80) {
        ++i;
        return b0;
    }
    int extra;
    char32_t cp;
    if ((b0 & 0xE0) == 0xC0) {
        extra = 1;
        cp = b0 & 0x1F;
    } else if ((b0 & 0xF0) == 0xE0) {
        extra = 2;
        cp = b0 & 0x0F;
    } else if ((b0 & 0xF8) == 0xF0) {
        extra = 3;
        cp = b0 & 0x07;
    } else {
        ++i;
        return 0xFFFD;
    }
    if (i + static_cast<std::size_t>(extra) >= s.size()) {
        ++i;
        return 0xFFFD;
    }
    char32_t out = cp;
    for (int k = 1; k <= extra; ++k) {
        const auto b = static_cast<unsigned char>(s[i + k]);
        if ((b & 0xC0) != 0x80) {
            ++i;
            return 0xFFFD;
        }
        out = (out << 6) | (b & 0x3F);
    }
    i += 1 + extra;
    return out;
}

void encode_utf8(char32_t cp, std::string& out) {
    if (cp < 0x80) {
        out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
        out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
        out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
        out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
}

bool in(char32_t cp, char32_t lo, char32_t hi) { return cp >= lo && cp <= hi; }

// Non-ASCII codepoints count as word characters unless they fall in a known
// punctuation/symbol/space block.
bool is_word_cp(char32_t cp) {
    if (cp < 0x80) {
        return (cp >= '0' && cp <= '9') || (cp >= 'a' && cp <= 'z') || (cp >= 'A' && cp <= 'Z');
    }
    if (cp == 0xA0 || cp == 0xA1 || cp == 0xAB || cp == 0xBB || cp == 0xBF) return false;
    if (cp == 0xD7 || cp == 0xF7) return false;
    if (in(cp, 0xA2, 0xA9) || in(cp, 0xAC, 0xB1) || cp == 0xB4 || cp == 0xB6 || cp == 0xB7 || cp == 0xB8) return false;
    if (cp == 0x37E || cp == 0x387) return false;
    if (in(cp, 0x2000, 0x206F)) return false;   // general punctuation, zero-width chars
    if (in(cp, 0x2070, 0x209F)) return false;   // super/subscripts
    if (in(cp, 0x20A0, 0x20CF)) return false;   // currency
    if (in(cp, 0x2100, 0x2BFF)) return false;   // letterlike symbols, arrows, math, box drawing
    if (in(cp, 0x3000, 0x303F)) return false;   // CJK punctuation
    if (in(cp, 0xFE00, 0xFE0F)) return false;   // variation selectors
    if (in(cp, 0xFF01, 0xFF0F) || in(cp, 0xFF1A, 0xFF20) || in(cp, 0xFF3B, 0xFF40) || in(cp, 0xFF5B, 0xFF65)) return false;
    if (in(cp, 0x1F000, 0x1FFFF)) return false; // emoji and pictographs
    if (cp == 0xFFFD) return false;
    return true;
}

char32_t lower_cp(char32_t cp) {
    if (cp >= 'A' && cp <= 'Z') return cp + 0x20;
    if (in(cp, 0xC0, 0xDE) && cp != 0xD7) return cp + 0x20;          // Latin-1
    if (in(cp, 0x100, 0x137) && (cp % 2) == 0) return cp + 1;        // Latin Extended-A pairs
    if (in(cp, 0x139, 0x148) && (cp % 2) == 1) return cp + 1;
    if (in(cp, 0x14A, 0x177) && (cp % 2) == 0) return cp + 1;
    if (cp == 0x178) return 0xFF;
    if (in(cp, 0x179, 0x17E) && (cp % 2) == 1) return cp + 1;
    if (in(cp, 0x391, 0x3AB) && cp != 0x3A2) return cp + 0x20;       // Greek
    if (in(cp, 0x410, 0x42F)) return cp + 0x20;                      // Cyrillic
    if (in(cp, 0x400, 0x40F)) return cp + 0x50;
    return cp;
}

}  // namespace

std::vector<std::string> tokenize(const std::string& text) {
    std::vector<std::string> tokens;
    std::string current;
    std::size_t i = 0;
    while (i < text.size()) {
        const char32_t cp = decode_utf8(text, i);
        if (is_word_cp(cp)) {
            encode_utf8(lower_cp(cp), current);
        } else if (!current.empty()) {
            tokens.push_back(std::move(current));
            current.clear();
        }
    }
    if (!current.empty()) tokens.push_back(std::move(current));
    return tokens;
}

std::string join_tokens(const std::vector<std::string>& tokens) {
    std::string out;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (i) out.push_back(' ');
        out += tokens[i];
    }
    return out;
}

std::uint64_t fnv1a64(const void* data, std::size_t len) {
    const auto* p = static_cast<const unsigned char*>(data);
    std::uint64_t h = 14695981039346656037ULL;
    for (std::size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 1099511628211ULL;
    }
    return h;
}

std::uint64_t fnv1a64(const std::string& s) { return fnv1a64(s.data(), s.size()); }

}  // namespace mm
