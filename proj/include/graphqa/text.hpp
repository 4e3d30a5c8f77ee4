#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace graphqa {

// --- UTF-8 <-> code point helpers -------------------------------------------
//
// All character-level semantics in this project (bigrams, context caps,
// answer lengths) are defined over Unicode code points, not bytes.

std::vector<char32_t> utf8_decode(std::string_view s);
void utf8_append(std::string& out, char32_t cp);
std::string utf8_encode(const std::vector<char32_t>& cps);

std::size_t codepoint_count(std::string_view s);

// Hard truncation at a code-point boundary, never mid-character.
std::string truncate_codepoints(std::string_view s, std::size_t max_cps);

// --- Script classification ---------------------------------------------------

// Han, kana, halfwidth katakana and hangul; the scripts indexed as bigrams.
bool is_cjk(char32_t cp);

// ASCII letters and digits; the scripts indexed as whole lowercased words.
bool is_word_char(char32_t cp);

// Byte-wise ASCII lowercase. CJK and other multibyte content is unaffected,
// which makes the fold safe on UTF-8 without full casefolding tables.
std::string fold_lower(std::string_view s);

// --- Analyzer ----------------------------------------------------------------
//
// Tokenization used by the fulltext index and the keyword fallback path:
// contiguous CJK runs emit character bigrams, ASCII alnum runs emit the whole
// word lowercased, everything else separates runs. A 1-character CJK run has
// no bigram and is dropped.
std::vector<std::string> analyze_tokens(std::string_view text);

// Stopword list applied only on the keyword fallback path.
const std::vector<std::string>& fallback_stopwords();

// analyze_tokens minus stopwords, deduplicated preserving first occurrence.
std::vector<std::string> fallback_tokens(std::string_view text);

// --- Bigram Jaccard ----------------------------------------------------------
//
// Multiset Jaccard over character bigrams of the raw strings (all code points,
// no normalization). When both strings are shorter than 2 code points the
// bigram multisets are empty; equal strings then compare as 1.0, others 0.0.
double bigram_jaccard(std::string_view a, std::string_view b);

// Precomputed form for repeated comparisons (dedup scans are quadratic).
struct BigramProfile {
    std::string text;
    std::vector<std::uint64_t> bigrams;  // packed code-point pairs, sorted

    static BigramProfile of(std::string_view s);
};

double bigram_jaccard(const BigramProfile& a, const BigramProfile& b);

}  // namespace graphqa
