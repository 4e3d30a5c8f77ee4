#include "graphqa/text.hpp"

#include <algorithm>
#include <array>

namespace graphqa {

namespace {

constexpr char32_t kReplacement = 0xFFFD;

// Decodes one code point starting at s[i], advancing i. Invalid sequences
// consume one byte and yield U+FFFD.
char32_t decode_one(std::string_view s, std::size_t& i) {
    const auto b0 = static_cast<unsigned char>(s[i]);
    if (b0 < 0x80) {
        ++i;
        return b0;
    }
    int len = 0;
    char32_t cp = 0;
    if ((b0 & 0xE0) == 0xC0) {
        len = 2;
        cp = b0 & 0x1F;
    } else if ((b0 & 0xF0) == 0xE0) {
        len = 3;
        cp = b0 & 0x0F;
    } else if ((b0 & 0xF8) == 0xF0) {
        len = 4;
        cp = b0 & 0x07;
    } else {
        ++i;
        return kReplacement;
    }
    if (i + len > s.size()) {
        ++i;
        return kReplacement;
    }
    for (int k = 1; k < len; ++k) {
        const auto b = static_cast<unsigned char>(s[i + k]);
        if ((b & 0xC0) != 0x80) {
            ++i;
            return kReplacement;
        }
        cp = (cp << 6) | (b & 0x3F);
    }
    // Reject overlong encodings and out-of-range values.
    if ((len == 2 && cp < 0x80) || (len == 3 && cp < 0x800) ||
        (len == 4 && cp < 0x10000) || cp > 0x10FFFF) {
        ++i;
        return kReplacement;
    }
    i += len;
    return cp;
}

}  // namespace

std::vector<char32_t> utf8_decode(std::string_view s) {
    std::vector<char32_t> out;
    out.reserve(s.size());
    std::size_t i = 0;
    while (i < s.size()) out.push_back(decode_one(s, i));
    return out;
}

void utf8_append(std::string& out, char32_t cp) {
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

std::string utf8_encode(const std::vector<char32_t>& cps) {
    std::string out;
    out.reserve(cps.size() * 3);
    for (char32_t cp : cps) utf8_append(out, cp);
    return out;
}

std::size_t codepoint_count(std::string_view s) {
    std::size_t n = 0, i = 0;
    while (i < s.size()) {
        decode_one(s, i);
        ++n;
    }
    return n;
}

std::string truncate_codepoints(std::string_view s, std::size_t max_cps) {
    std::size_t n = 0, i = 0;
    while (i < s.size() && n < max_cps) {
        decode_one(s, i);
        ++n;
    }
    return std::string(s.substr(0, i));
}

bool is_cjk(char32_t cp) {
    return (cp >= 0x3040 && cp <= 0x30FF)    // hiragana + katakana
           || (cp >= 0x31F0 && cp <= 0x31FF) // katakana phonetic extensions
           || (cp >= 0x3400 && cp <= 0x4DBF) // CJK extension A
           || (cp >= 0x4E00 && cp <= 0x9FFF) // CJK unified ideographs
           || (cp >= 0xF900 && cp <= 0xFAFF) // compatibility ideographs
           || (cp >= 0xFF66 && cp <= 0xFF9D) // halfwidth katakana
           || (cp >= 0xAC00 && cp <= 0xD7AF) // hangul syllables
           || cp == 0x3005;                  // ideographic iteration mark
}

bool is_word_char(char32_t cp) {
    return (cp >= '0' && cp <= '9') || (cp >= 'A' && cp <= 'Z') ||
           (cp >= 'a' && cp <= 'z');
}

std::string fold_lower(std::string_view s) {
    std::string out(s);
    for (char& c : out) {
        if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    }
    return out;
}

std::vector<std::string> analyze_tokens(std::string_view text) {
    std::vector<std::string> tokens;
    const auto cps = utf8_decode(text);
    std::size_t i = 0;
    const std::size_t n = cps.size();
    while (i < n) {
        if (is_cjk(cps[i])) {
            std::size_t j = i;
            while (j < n && is_cjk(cps[j])) ++j;
            for (std::size_t k = i; k + 1 < j; ++k) {
                std::string tok;
                utf8_append(tok, cps[k]);
                utf8_append(tok, cps[k + 1]);
                tokens.push_back(std::move(tok));
            }
            i = j;
        } else if (is_word_char(cps[i])) {
            std::size_t j = i;
            std::string tok;
            while (j < n && is_word_char(cps[j])) {
                char32_t c = cps[j];
                if (c >= 'A' && c <= 'Z') c = c - 'A' + 'a';
                utf8_append(tok, c);
                ++j;
            }
            tokens.push_back(std::move(tok));
            i = j;
        } else {
            ++i;
        }
    }
    return tokens;
}

const std::vector<std::string>& fallback_stopwords() {
    static const std::vector<std::string> kStopwords = {
        // English function words.
        "a", "an", "the", "of", "to", "in", "on", "for", "and", "or", "is",
        "are", "what", "which", "how", "about", "with",
        // Japanese auxiliary bigrams common in question phrasing.
        "です", "ます", "とは", "この", "その", "など", "ください",
    };
    return kStopwords;
}

std::vector<std::string> fallback_tokens(std::string_view text) {
    const auto& stop = fallback_stopwords();
    std::vector<std::string> out;
    for (auto& tok : analyze_tokens(text)) {
        if (std::find(stop.begin(), stop.end(), tok) != stop.end()) continue;
        if (std::find(out.begin(), out.end(), tok) != out.end()) continue;
        out.push_back(tok);
    }
    return out;
}

BigramProfile BigramProfile::of(std::string_view s) {
    BigramProfile p;
    p.text = std::string(s);
    const auto cps = utf8_decode(s);
    if (cps.size() >= 2) {
        p.bigrams.reserve(cps.size() - 1);
        for (std::size_t i = 0; i + 1 < cps.size(); ++i) {
            p.bigrams.push_back((static_cast<std::uint64_t>(cps[i]) << 32) |
                                static_cast<std::uint64_t>(cps[i + 1]));
        }
    }
    std::sort(p.bigrams.begin(), p.bigrams.end());
    return p;
}

double bigram_jaccard(const BigramProfile& a, const BigramProfile& b) {
    const auto& ba = a.bigrams;
    const auto& bb = b.bigrams;
    if (ba.empty() && bb.empty()) return a.text == b.text ? 1.0 : 0.0;

    // Multiset intersection size via merge walk over the sorted bigram lists.
    std::size_t inter = 0, i = 0, j = 0;
    while (i < ba.size() && j < bb.size()) {
        if (ba[i] < bb[j]) {
            ++i;
        } else if (bb[j] < ba[i]) {
            ++j;
        } else {
            ++inter;
            ++i;
            ++j;
        }
    }
    const std::size_t uni = ba.size() + bb.size() - inter;
    return static_cast<double>(inter) / static_cast<double>(uni);
}

double bigram_jaccard(std::string_view a, std::string_view b) {
    return bigram_jaccard(BigramProfile::of(a), BigramProfile::of(b));
}

}  // namespace graphqa
