// Independent brute-force oracles for the similarity metrics. These are
// intentionally written against the plain definitions (explicit count maps,
// full-matrix DP, per-n-gram scan) and share no code with the library path
// they check.
#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <string>
#include <vector>

namespace oracles {

using Tokens = std::vector<std::string>;

// word F1 from explicit token-count maps.
inline double word_f1_bruteforce(const Tokens& a, const Tokens& b) {
    if (a.empty() || b.empty()) return 0.0;
    std::map<std::string, int> ca, cb;
    for (const auto& t : a) ca[t]++;
    for (const auto& t : b) cb[t]++;
    int overlap = 0;
    for (const auto& [token, count] : ca) {
        auto it = cb.find(token);
        if (it != cb.end()) overlap += std::min(count, it->second);
    }
    if (overlap == 0) return 0.0;
    double precision = double(overlap) / double(a.size());
    double recall = double(overlap) / double(b.size());
    return 2.0 * precision * recall / (precision + recall);
}

// full-matrix quadratic LCS.
inline double rouge_l_dp(const Tokens& cand, const Tokens& ref) {
    if (cand.empty() || ref.empty()) return 0.0;
    std::vector<std::vector<int>> dp(cand.size() + 1,
                                     std::vector<int>(ref.size() + 1, 0));
    for (size_t i = 1; i <= cand.size(); ++i) {
        for (size_t j = 1; j <= ref.size(); ++j) {
            dp[i][j] = cand[i - 1] == ref[j - 1]
                           ? dp[i - 1][j - 1] + 1
                           : std::max(dp[i - 1][j], dp[i][j - 1]);
        }
    }
    int lcs = dp[cand.size()][ref.size()];
    if (lcs == 0) return 0.0;
    double precision = double(lcs) / double(cand.size());
    double recall = double(lcs) / double(ref.size());
    return 2.0 * precision * recall / (precision + recall);
}

// Reference BLEU: 4-gram, no brevity penalty, order truncated to the
// candidate length. Clipping is done by scanning the reference per n-gram
// instead of building count maps.
inline double bleu4_reference(const Tokens& cand, const Tokens& ref) {
    if (cand.empty()) return 0.0;
    size_t max_n = std::min<size_t>(4, cand.size());
    double product = 1.0;
    for (size_t n = 1; n <= max_n; ++n) {
        size_t total = cand.size() - n + 1;
        std::vector<bool> counted(total, false);
        size_t clipped = 0;
        // For every distinct n-gram in the candidate, count occurrences on
        // both sides by direct scan and clip.
        for (size_t i = 0; i < total; ++i) {
            if (counted[i]) continue;
            size_t cand_occurrences = 0;
            for (size_t k = i; k < total; ++k) {
                if (std::equal(cand.begin() + i, cand.begin() + i + n,
                               cand.begin() + k)) {
                    cand_occurrences++;
                    counted[k] = true;
                }
            }
            size_t ref_occurrences = 0;
            if (ref.size() >= n) {
                for (size_t k = 0; k + n <= ref.size(); ++k) {
                    if (std::equal(cand.begin() + i, cand.begin() + i + n,
                                   ref.begin() + k)) {
                        ref_occurrences++;
                    }
                }
            }
            clipped += std::min(cand_occurrences, ref_occurrences);
        }
        if (clipped == 0) return 0.0;
        product *= double(clipped) / double(total);
    }
    return std::pow(product, 1.0 / double(max_n));
}

// Random token sequences over a small vocabulary so overlaps are common.
inline Tokens random_tokens(std::mt19937_64& rng, int max_len,
                            int vocab_size = 18) {
    static const char* vocab[] = {
        "alpha", "bravo", "carol", "delta", "echo",  "fox",   "golf",
        "hotel", "india", "jazz",  "kilo",  "lima",  "mike",  "nova",
        "oscar", "papa",  "quebec", "romeo", "sierra", "tango"};
    std::uniform_int_distribution<int> len(0, max_len);
    std::uniform_int_distribution<int> pick(0, vocab_size - 1);
    Tokens out(len(rng));
    for (auto& t : out) t = vocab[pick(rng)];
    return out;
}

}  // namespace oracles
