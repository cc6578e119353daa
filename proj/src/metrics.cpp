#include "flipeval/metrics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <unordered_map>

namespace flipeval {

namespace {

// Minimal UTF-8 walker. Invalid bytes pass through as single code points so
// normalization never throws on arbitrary model output.
struct Utf8Cursor {
    std::string_view text;
    size_t pos = 0;

    bool done() const { return pos >= text.size(); }

    char32_t next() {
        unsigned char c = static_cast<unsigned char>(text[pos]);
        size_t len = 1;
        char32_t cp = c;
        if (c >= 0xF0) len = 4;
        else if (c >= 0xE0) len = 3;
        else if (c >= 0xC0) len = 2;
        if (len > 1 && pos + len <= text.size()) {
            cp = c & (0x7F >> len);
            bool valid = true;
            for (size_t i = 1; i < len; ++i) {
                unsigned char cc = static_cast<unsigned char>(text[pos + i]);
                if ((cc & 0xC0) != 0x80) { valid = false; break; }
                cp = (cp << 6) | (cc & 0x3F);
            }
            if (!valid) { cp = c; len = 1; }
        } else if (len > 1) {
            len = 1;
        }
        pos += len;
        return cp;
    }
};

void append_utf8(std::string& out, char32_t cp) {
    if (cp < 0x80) {
        out += static_cast<char>(cp);
    } else if (cp < 0x800) {
        out += static_cast<char>(0xC0 | (cp >> 6));
        out += static_cast<char>(0x80 | (cp & 0x3F));
    } else if (cp < 0x10000) {
        out += static_cast<char>(0xE0 | (cp >> 12));
        out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
        out += static_cast<char>(0x80 | (cp & 0x3F));
    } else {
        out += static_cast<char>(0xF0 | (cp >> 18));
        out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
        out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
        out += static_cast<char>(0x80 | (cp & 0x3F));
    }
}

bool is_space_cp(char32_t cp) {
    switch (cp) {
        case U' ': case U'\t': case U'\n': case U'\r': case U'\f': case U'\v':
        case 0x00A0: case 0x2028: case 0x2029: case 0x3000: case 0x200B:
            return true;
        default:
            return cp >= 0x2000 && cp <= 0x200A;
    }
}

bool is_punct_cp(char32_t cp) {
    if (cp < 0x80) {
        return (cp >= '!' && cp <= '/') || (cp >= ':' && cp <= '@') ||
               (cp >= '[' && cp <= '`') || (cp >= '{' && cp <= '~');
    }
    switch (cp) {
        case 0x00A1: case 0x00BF: case 0x00AB: case 0x00BB: case 0x00B7:
        case 0x2018: case 0x2019: case 0x201A: case 0x201B:
        case 0x201C: case 0x201D: case 0x201E:
        case 0x2013: case 0x2014: case 0x2026: case 0x2022:
        case 0x2039: case 0x203A:
        case 0x3001: case 0x3002: case 0x300C: case 0x300D:
        case 0x3010: case 0x3011:
        case 0xFF01: case 0xFF08: case 0xFF09: case 0xFF0C:
        case 0xFF1A: case 0xFF1B: case 0xFF1F:
            return true;
        default:
            return false;
    }
}

char32_t fold_cp(char32_t cp) {
    if (cp >= U'A' && cp <= U'Z') return cp + 0x20;
    // Latin-1 uppercase block, excluding the multiplication sign.
    if ((cp >= 0x00C0 && cp <= 0x00D6) || (cp >= 0x00D8 && cp <= 0x00DE)) {
        return cp + 0x20;
    }
    return cp;
}

std::string strip_edges(const std::vector<char32_t>& chunk) {
    size_t begin = 0;
    size_t end = chunk.size();
    while (begin < end && is_punct_cp(chunk[begin])) ++begin;
    while (end > begin && is_punct_cp(chunk[end - 1])) --end;
    std::string out;
    for (size_t i = begin; i < end; ++i) append_utf8(out, chunk[i]);
    return out;
}

// Clipped-count multiset overlap.
size_t overlap_count(const TokenSequence& a, const TokenSequence& b) {
    std::unordered_map<std::string, int> counts;
    counts.reserve(a.size());
    for (const auto& t : a) ++counts[t];
    size_t overlap = 0;
    for (const auto& t : b) {
        auto it = counts.find(t);
        if (it != counts.end() && it->second > 0) {
            --it->second;
            ++overlap;
        }
    }
    return overlap;
}

}  // namespace

TokenSequence normalize_tokens(std::string_view text) {
    TokenSequence tokens;
    std::vector<char32_t> chunk;
    Utf8Cursor cur{text};
    auto flush = [&] {
        if (chunk.empty()) return;
        std::string token = strip_edges(chunk);
        if (!token.empty()) tokens.push_back(std::move(token));
        chunk.clear();
    };
    while (!cur.done()) {
        char32_t cp = cur.next();
        if (is_space_cp(cp)) {
            flush();
        } else {
            chunk.push_back(fold_cp(cp));
        }
    }
    flush();
    return tokens;
}

TokenSequence drop_articles(TokenSequence tokens) {
    std::erase_if(tokens, [](const std::string& t) {
        return t == "a" || t == "an" || t == "the";
    });
    return tokens;
}

double word_f1(const TokenSequence& a, const TokenSequence& b) {
    if (a.empty() || b.empty()) return 0.0;
    size_t overlap = overlap_count(a, b);
    if (overlap == 0) return 0.0;
    // precision = overlap/|a|, recall = overlap/|b|; F1 collapses to this.
    return 2.0 * static_cast<double>(overlap) /
           static_cast<double>(a.size() + b.size());
}

double bleu4(const TokenSequence& candidate, const TokenSequence& reference) {
    if (candidate.empty()) return 0.0;
    size_t max_n = std::min<size_t>(4, candidate.size());
    double log_sum = 0.0;
    for (size_t n = 1; n <= max_n; ++n) {
        std::map<std::vector<std::string>, int> ref_counts;
        if (reference.size() >= n) {
            for (size_t i = 0; i + n <= reference.size(); ++i) {
                ++ref_counts[{reference.begin() + i, reference.begin() + i + n}];
            }
        }
        std::map<std::vector<std::string>, int> cand_counts;
        for (size_t i = 0; i + n <= candidate.size(); ++i) {
            ++cand_counts[{candidate.begin() + i, candidate.begin() + i + n}];
        }
        size_t total = candidate.size() - n + 1;
        size_t clipped = 0;
        for (const auto& [gram, count] : cand_counts) {
            auto it = ref_counts.find(gram);
            if (it != ref_counts.end()) {
                clipped += std::min(count, it->second);
            }
        }
        if (clipped == 0) return 0.0;  // no smoothing
        log_sum += std::log(static_cast<double>(clipped) /
                            static_cast<double>(total));
    }
    return std::exp(log_sum / static_cast<double>(max_n));
}

double rouge_l(const TokenSequence& candidate, const TokenSequence& reference) {
    if (candidate.empty() || reference.empty()) return 0.0;
    std::vector<size_t> prev(reference.size() + 1, 0);
    std::vector<size_t> row(reference.size() + 1, 0);
    for (size_t i = 1; i <= candidate.size(); ++i) {
        for (size_t j = 1; j <= reference.size(); ++j) {
            if (candidate[i - 1] == reference[j - 1]) {
                row[j] = prev[j - 1] + 1;
            } else {
                row[j] = std::max(prev[j], row[j - 1]);
            }
        }
        std::swap(prev, row);
    }
    size_t lcs = prev[reference.size()];
    if (lcs == 0) return 0.0;
    return 2.0 * static_cast<double>(lcs) /
           static_cast<double>(candidate.size() + reference.size());
}

double harmonic_mean(double a, double b) {
    if (a + b <= 0.0) return 0.0;
    return 2.0 * a * b / (a + b);
}

namespace {

double dispatch(MetricKind kind, const TokenSequence& x, const TokenSequence& x_prime) {
    switch (kind) {
        case MetricKind::word_f1:
            return word_f1(x, x_prime);
        case MetricKind::bleu4:
            return bleu4(x_prime, x);
        case MetricKind::rouge_l:
            return rouge_l(x_prime, x);
        case MetricKind::f1_of_bleu_rouge:
            return harmonic_mean(bleu4(x_prime, x), rouge_l(x_prime, x));
        case MetricKind::lm_judge_similarity:
            break;
    }
    throw std::invalid_argument(
        "lm_judge_similarity requires a backend; use the flip scorer");
}

}  // namespace

double similarity(MetricKind kind, std::string_view x, std::string_view x_prime) {
    return dispatch(kind, normalize_tokens(x), normalize_tokens(x_prime));
}

double instruction_similarity(MetricKind kind, std::string_view x,
                              std::string_view x_prime) {
    return dispatch(kind, drop_articles(normalize_tokens(x)),
                    drop_articles(normalize_tokens(x_prime)));
}

MetricKind metric_kind_from_string(const std::string& name) {
    if (name == "word_f1") return MetricKind::word_f1;
    if (name == "bleu4") return MetricKind::bleu4;
    if (name == "rouge_l") return MetricKind::rouge_l;
    if (name == "f1_of_bleu_rouge") return MetricKind::f1_of_bleu_rouge;
    if (name == "lm_judge_similarity") return MetricKind::lm_judge_similarity;
    throw std::invalid_argument("unknown metric kind: " + name);
}

std::string to_string(MetricKind kind) {
    switch (kind) {
        case MetricKind::word_f1: return "word_f1";
        case MetricKind::bleu4: return "bleu4";
        case MetricKind::rouge_l: return "rouge_l";
        case MetricKind::f1_of_bleu_rouge: return "f1_of_bleu_rouge";
        case MetricKind::lm_judge_similarity: return "lm_judge_similarity";
    }
    return "?";
}

}  // namespace flipeval
