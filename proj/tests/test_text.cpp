#include <doctest.h>

#include <map>
#include <random>

#include "graphqa/text.hpp"

using namespace graphqa;

TEST_CASE("utf8 decode/encode round trip") {
    const std::string s = "SaboDam 砂防堰堤 ダム 01";
    const auto cps = utf8_decode(s);
    CHECK(utf8_encode(cps) == s);
    CHECK(codepoint_count(s) == cps.size());
    CHECK(codepoint_count("abc") == 3);
    CHECK(codepoint_count("砂防堰堤") == 4);
}

TEST_CASE("utf8 invalid bytes decode to replacement, never crash") {
    const std::string bad = "a\xC3(b\xE3\x81";
    const auto cps = utf8_decode(bad);
    CHECK(cps.size() >= 3);
    CHECK(cps[0] == U'a');
}

TEST_CASE("truncate_codepoints cuts at code-point boundaries") {
    const std::string s = "安定計算";  // 4 code points, 12 bytes
    CHECK(truncate_codepoints(s, 2) == "安定");
    CHECK(truncate_codepoints(s, 4) == s);
    CHECK(truncate_codepoints(s, 99) == s);
    CHECK(truncate_codepoints(s, 0) == "");
    CHECK(codepoint_count(truncate_codepoints(s, 3)) == 3);
}

TEST_CASE("analyze_tokens: CJK bigrams and lowercased words") {
    CHECK(analyze_tokens("SaboDam 安定計算") ==
          std::vector<std::string>{"sabodam", "安定", "定計", "計算"});
    CHECK(analyze_tokens("alpha 01 点検") ==
          std::vector<std::string>{"alpha", "01", "点検"});
    // A 1-character CJK run has no bigram.
    CHECK(analyze_tokens("堤 abc") == std::vector<std::string>{"abc"});
    CHECK(analyze_tokens("...!?") == std::vector<std::string>{});
    // Mixed scripts split runs.
    CHECK(analyze_tokens("Damの点検") ==
          std::vector<std::string>{"dam", "の点", "点検"});
}

TEST_CASE("fallback_tokens removes stopwords and duplicates") {
    const auto toks = fallback_tokens("what is the alpha alpha of 点検です");
    CHECK(std::find(toks.begin(), toks.end(), "the") == toks.end());
    CHECK(std::find(toks.begin(), toks.end(), "what") == toks.end());
    CHECK(std::count(toks.begin(), toks.end(), "alpha") == 1);
    CHECK(std::find(toks.begin(), toks.end(), "点検") != toks.end());
    // "です" is a stopword bigram.
    CHECK(std::find(toks.begin(), toks.end(), "です") == toks.end());
}

TEST_CASE("bigram_jaccard basics") {
    CHECK(bigram_jaccard("abcd", "abcd") == 1.0);
    CHECK(bigram_jaccard("abcd", "wxyz") == 0.0);
    // Hand-enumerated multisets: min-counts 2, max-counts 4.
    CHECK(bigram_jaccard("abab", "abba") == 0.5);
}

TEST_CASE("bigram_jaccard short-string edge cases") {
    CHECK(bigram_jaccard("", "") == 1.0);
    CHECK(bigram_jaccard("a", "a") == 1.0);
    CHECK(bigram_jaccard("a", "b") == 0.0);
    CHECK(bigram_jaccard("", "a") == 0.0);
    CHECK(bigram_jaccard("a", "ab") == 0.0);
    CHECK(bigram_jaccard("砂", "砂") == 1.0);
}

namespace {

// Independent reference: multiset Jaccard via explicit bigram count maps.
double jaccard_oracle(const std::string& a, const std::string& b) {
    auto counts = [](const std::string& s) {
        std::map<std::pair<char32_t, char32_t>, int> m;
        const auto cps = utf8_decode(s);
        for (std::size_t i = 0; i + 1 < cps.size(); ++i) {
            ++m[{cps[i], cps[i + 1]}];
        }
        return m;
    };
    const auto ca = counts(a);
    const auto cb = counts(b);
    if (ca.empty() && cb.empty()) return a == b ? 1.0 : 0.0;
    long inter = 0, uni = 0;
    for (const auto& [bg, n] : ca) {
        auto it = cb.find(bg);
        const int other = it == cb.end() ? 0 : it->second;
        inter += std::min(n, other);
        uni += std::max(n, other);
    }
    for (const auto& [bg, n] : cb) {
        if (!ca.count(bg)) uni += n;
    }
    return static_cast<double>(inter) / static_cast<double>(uni);
}

std::string random_string(std::mt19937_64& rng, std::size_t max_len) {
    static const std::vector<char32_t> alphabet = {
        U'a', U'b', U'c', U'd', U' ', U'1', U'砂', U'防', U'堰', U'堤', U'点', U'検',
    };
    const std::size_t len = rng() % (max_len + 1);
    std::string out;
    for (std::size_t i = 0; i < len; ++i) {
        utf8_append(out, alphabet[rng() % alphabet.size()]);
    }
    return out;
}

}  // namespace

TEST_CASE("bigram_jaccard properties on random strings") {
    std::mt19937_64 rng(7);
    for (int i = 0; i < 500; ++i) {
        const std::string a = random_string(rng, 12);
        const std::string b = random_string(rng, 12);
        const double jab = bigram_jaccard(a, b);
        CHECK(jab == bigram_jaccard(b, a));
        CHECK(jab >= 0.0);
        CHECK(jab <= 1.0);
        // Exact: both sides divide the same integer counts.
        CHECK(jab == jaccard_oracle(a, b));
        if (codepoint_count(a) >= 2) CHECK(bigram_jaccard(a, a) == 1.0);
    }
}

TEST_CASE("fold_lower folds ASCII only") {
    CHECK(fold_lower("SaboDam X1") == "sabodam x1");
    CHECK(fold_lower("砂防ダム") == "砂防ダム");
}
