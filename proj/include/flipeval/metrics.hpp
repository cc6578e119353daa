#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace flipeval {

/// Ordered word tokens produced by normalize_tokens. Tokens are non-empty
/// and contain no whitespace.
using TokenSequence = std::vector<std::string>;

enum class MetricKind {
    word_f1,
    bleu4,
    rouge_l,
    f1_of_bleu_rouge,
    lm_judge_similarity,
};

/// Lowercase (ASCII + Latin-1 simple fold), split on whitespace, strip
/// leading/trailing punctuation from each chunk, drop chunks that become
/// empty. Deterministic; empty input yields an empty sequence.
TokenSequence normalize_tokens(std::string_view text);

/// Remove standalone English articles ("a", "an", "the"). Combined with
/// normalize_tokens this is the extractive-QA answer normalization used for
/// instruction-to-instruction comparison.
TokenSequence drop_articles(TokenSequence tokens);

/// Harmonic mean of multiset token precision and recall (counts clipped per
/// token type). 0 when either side is empty or there is no overlap.
double word_f1(const TokenSequence& a, const TokenSequence& b);

/// Geometric mean of clipped n-gram precisions for n = 1..min(4, |candidate|),
/// no brevity penalty. 0 if the candidate is empty or any included precision
/// is 0. Not symmetric.
double bleu4(const TokenSequence& candidate, const TokenSequence& reference);

/// F1 over longest-common-subsequence precision and recall.
double rouge_l(const TokenSequence& candidate, const TokenSequence& reference);

/// 2ab/(a+b); 0 when a+b == 0.
double harmonic_mean(double a, double b);

/// Normalize both texts with normalize_tokens and dispatch on kind.
/// Throws std::invalid_argument for lm_judge_similarity, which needs a
/// backend and lives in the flip scorer.
double similarity(MetricKind kind, std::string_view x, std::string_view x_prime);

/// Instruction-to-instruction similarity: like similarity() but with
/// articles dropped after normalization (QA-style answer matching).
double instruction_similarity(MetricKind kind, std::string_view x,
                              std::string_view x_prime);

MetricKind metric_kind_from_string(const std::string& name);
std::string to_string(MetricKind kind);

}  // namespace flipeval
