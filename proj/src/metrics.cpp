/// @file metrics.cpp
/// @brief Rank correlations, agreement statistics and diversity measures.

#include "mole/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_map>

#include "mole/text.hpp"

namespace mole::metrics {

using nlohmann::json;

namespace {

template <typename T>
void check_paired(const char* metric, std::span<const T> gold, std::span<const T> pred, std::size_t min_len) {
    if (gold.size() != pred.size()) {
        throw MetricError(metric, "gold has " + std::to_string(gold.size()) + " items, pred has " +
                                      std::to_string(pred.size()));
    }
    if (gold.size() < min_len) {
        throw MetricError(metric, "needs at least " + std::to_string(min_len) + " items");
    }
    if constexpr (std::is_floating_point_v<T>) {
        for (std::size_t i = 0; i < gold.size(); ++i) {
            if (!std::isfinite(gold[i]) || !std::isfinite(pred[i])) throw MetricError(metric, "non-finite score");
        }
    }
}

void check_grades(const char* metric, std::span<const int> grades, int num_classes) {
    for (int g : grades) {
        if (g < 0 || g >= num_classes) {
            throw MetricError(metric, "grade " + std::to_string(g) + " outside [0," + std::to_string(num_classes) + ")");
        }
    }
}

/// 1-based ranks; tied values share the mean of the ranks they span.
std::vector<double> average_ranks(std::span<const double> xs) {
    std::vector<std::size_t> idx(xs.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return xs[a] < xs[b]; });
    std::vector<double> ranks(xs.size());
    for (std::size_t i = 0; i < idx.size();) {
        std::size_t j = i;
        while (j < idx.size() && xs[idx[j]] == xs[idx[i]]) ++j;
        const double r = 0.5 * static_cast<double>(i + 1 + j);
        for (std::size_t k = i; k < j; ++k) ranks[idx[k]] = r;
        i = j;
    }
    return ranks;
}

/// Sum of t(t-1)/2 over runs of equal values in a sorted range.
template <typename It, typename Eq>
std::uint64_t tied_pairs(It first, It last, Eq eq) {
    std::uint64_t total = 0;
    while (first != last) {
        auto run_end = std::find_if_not(first, last, [&](const auto& v) { return eq(v, *first); });
        auto t = static_cast<std::uint64_t>(std::distance(first, run_end));
        total += t * (t - 1) / 2;
        first = run_end;
    }
    return total;
}

/// Stable merge sort of `ys`, returning the number of strict inversions.
std::uint64_t sort_count_inversions(std::vector<double>& ys, std::vector<double>& buf, std::size_t lo, std::size_t hi) {
    if (hi - lo < 2) return 0;
    const std::size_t mid = lo + (hi - lo) / 2;
    std::uint64_t swaps = sort_count_inversions(ys, buf, lo, mid) + sort_count_inversions(ys, buf, mid, hi);
    std::size_t i = lo, j = mid, k = lo;
    while (i < mid && j < hi) {
        if (ys[j] < ys[i]) {
            swaps += mid - i;
            buf[k++] = ys[j++];
        } else {
            buf[k++] = ys[i++];
        }
    }
    while (i < mid) buf[k++] = ys[i++];
    while (j < hi) buf[k++] = ys[j++];
    std::copy(buf.begin() + static_cast<std::ptrdiff_t>(lo), buf.begin() + static_cast<std::ptrdiff_t>(hi),
              ys.begin() + static_cast<std::ptrdiff_t>(lo));
    return swaps;
}

}  // namespace

// -----------------------------------------------------------------------------
// Correlations
// -----------------------------------------------------------------------------

double spearman(std::span<const double> gold, std::span<const double> pred) {
    check_paired("spearman", gold, pred, 2);
    const auto rg = average_ranks(gold);
    const auto rp = average_ranks(pred);
    const double n = static_cast<double>(rg.size());
    const double mean = (n + 1.0) / 2.0;  // mean of any average-rank vector
    double cov = 0.0, vg = 0.0, vp = 0.0;
    for (std::size_t i = 0; i < rg.size(); ++i) {
        const double a = rg[i] - mean;
        const double b = rp[i] - mean;
        cov += a * b;
        vg += a * a;
        vp += b * b;
    }
    if (vg == 0.0 || vp == 0.0) throw UndefinedMetric("spearman", "one side is constant");
    return std::clamp(cov / std::sqrt(vg * vp), -1.0, 1.0);
}

double kendall_tau(std::span<const double> gold, std::span<const double> pred) {
    check_paired("kendall", gold, pred, 2);
    const std::size_t n = gold.size();
    std::vector<std::pair<double, double>> xy(n);
    for (std::size_t i = 0; i < n; ++i) xy[i] = {gold[i], pred[i]};
    std::sort(xy.begin(), xy.end());

    const std::uint64_t n0 = static_cast<std::uint64_t>(n) * (n - 1) / 2;
    const std::uint64_t n1 = tied_pairs(xy.begin(), xy.end(), [](const auto& a, const auto& b) { return a.first == b.first; });
    const std::uint64_t n3 = tied_pairs(xy.begin(), xy.end(), [](const auto& a, const auto& b) { return a == b; });

    std::vector<double> ys(n), buf(n);
    for (std::size_t i = 0; i < n; ++i) ys[i] = xy[i].second;
    const std::uint64_t swaps = sort_count_inversions(ys, buf, 0, n);
    const std::uint64_t n2 = tied_pairs(ys.begin(), ys.end(), [](double a, double b) { return a == b; });

    if (n0 == n1 || n0 == n2) throw UndefinedMetric("kendall", "all pairs are tied on one side");
    const double s = static_cast<double>(n0) - static_cast<double>(n1) - static_cast<double>(n2) +
                     static_cast<double>(n3) - 2.0 * static_cast<double>(swaps);
    const double denom = std::sqrt(static_cast<double>(n0 - n1) * static_cast<double>(n0 - n2));
    return std::clamp(s / denom, -1.0, 1.0);
}

// -----------------------------------------------------------------------------
// Agreement
// -----------------------------------------------------------------------------

double qwk(std::span<const int> gold, std::span<const int> pred, int num_classes) {
    check_paired("qwk", gold, pred, 1);
    if (num_classes < 2) throw MetricError("qwk", "needs at least 2 classes");
    check_grades("qwk", gold, num_classes);
    check_grades("qwk", pred, num_classes);

    const auto k = static_cast<std::size_t>(num_classes);
    std::vector<double> observed(k * k, 0.0), hist_gold(k, 0.0), hist_pred(k, 0.0);
    for (std::size_t i = 0; i < gold.size(); ++i) {
        observed[static_cast<std::size_t>(gold[i]) * k + static_cast<std::size_t>(pred[i])] += 1.0;
        hist_gold[static_cast<std::size_t>(gold[i])] += 1.0;
        hist_pred[static_cast<std::size_t>(pred[i])] += 1.0;
    }
    const double n = static_cast<double>(gold.size());
    const double norm = static_cast<double>((k - 1) * (k - 1));
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = 0; j < k; ++j) {
            const double diff = static_cast<double>(i) - static_cast<double>(j);
            const double w = diff * diff / norm;
            num += w * observed[i * k + j];
            den += w * hist_gold[i] * hist_pred[j] / n;
        }
    }
    if (den == 0.0) throw UndefinedMetric("qwk", "expected disagreement is zero (single class on both sides)");
    return 1.0 - num / den;
}

double accuracy(std::span<const int> gold, std::span<const int> pred) {
    check_paired("accuracy", gold, pred, 1);
    std::size_t hits = 0;
    for (std::size_t i = 0; i < gold.size(); ++i) hits += gold[i] == pred[i];
    return static_cast<double>(hits) / static_cast<double>(gold.size());
}

F1Scores f1_scores(std::span<const int> gold, std::span<const int> pred, int num_classes) {
    check_paired("f1", gold, pred, 1);
    if (num_classes < 1) throw MetricError("f1", "needs at least 1 class");
    check_grades("f1", gold, num_classes);
    check_grades("f1", pred, num_classes);

    const auto k = static_cast<std::size_t>(num_classes);
    std::vector<double> tp(k, 0.0), fp(k, 0.0), fn(k, 0.0);
    for (std::size_t i = 0; i < gold.size(); ++i) {
        const auto g = static_cast<std::size_t>(gold[i]);
        const auto p = static_cast<std::size_t>(pred[i]);
        if (g == p) {
            tp[g] += 1.0;
        } else {
            fp[p] += 1.0;
            fn[g] += 1.0;
        }
    }
    F1Scores out;
    out.per_class.resize(k);
    for (std::size_t c = 0; c < k; ++c) {
        const double denom = 2.0 * tp[c] + fp[c] + fn[c];
        out.per_class[c] = denom == 0.0 ? 0.0 : 2.0 * tp[c] / denom;
    }
    out.macro = std::accumulate(out.per_class.begin(), out.per_class.end(), 0.0) / static_cast<double>(k);
    return out;
}

// -----------------------------------------------------------------------------
// Diversity
// -----------------------------------------------------------------------------

double ttr(std::string_view text) {
    auto tokens = text::word_tokens(text);
    if (tokens.empty()) throw MetricError("ttr", "text has no tokens");
    const auto total = tokens.size();
    std::sort(tokens.begin(), tokens.end());
    const auto distinct = static_cast<std::size_t>(std::distance(tokens.begin(), std::unique(tokens.begin(), tokens.end())));
    return static_cast<double>(distinct) / static_cast<double>(total);
}

double self_bleu(std::span<const std::string> documents, int max_n) {
    if (documents.size() < 2) throw MetricError("self_bleu", "needs at least 2 documents");
    if (max_n < 1) throw MetricError("self_bleu", "max_n must be >= 1");

    const std::size_t m = documents.size();
    std::vector<std::vector<std::string>> tokens(m);
    for (std::size_t i = 0; i < m; ++i) tokens[i] = text::word_tokens(documents[i]);

    // For each n-gram order: per-document counts, and the two largest counts
    // across documents (with the owner of the largest) so the best count
    // among "all other documents" is O(1) per lookup.
    struct Top2 {
        std::size_t first = 0;
        std::size_t owner = SIZE_MAX;
        std::size_t second = 0;
    };
    using Counts = std::unordered_map<std::string, std::size_t>;
    auto ngram_counts = [](const std::vector<std::string>& toks, std::size_t n) {
        Counts counts;
        for (std::size_t s = 0; s + n <= toks.size(); ++s) {
            std::string key;
            for (std::size_t t = 0; t < n; ++t) {
                if (t) key.push_back('\x1f');
                key += toks[s + t];
            }
            ++counts[key];
        }
        return counts;
    };

    std::vector<double> log_precision_sum(m, 0.0);
    for (std::size_t n = 1; n <= static_cast<std::size_t>(max_n); ++n) {
        std::vector<Counts> counts(m);
        std::unordered_map<std::string, Top2> best;
        for (std::size_t i = 0; i < m; ++i) {
            counts[i] = ngram_counts(tokens[i], n);
            for (const auto& [gram, c] : counts[i]) {
                auto& b = best[gram];
                if (c > b.first) {
                    b.second = b.first;
                    b.first = c;
                    b.owner = i;
                } else if (c > b.second) {
                    b.second = c;
                }
            }
        }
        for (std::size_t i = 0; i < m; ++i) {
            std::size_t clipped = 0;
            for (const auto& [gram, c] : counts[i]) {
                const auto& b = best.at(gram);
                const std::size_t ref = b.owner == i ? b.second : b.first;
                clipped += std::min(c, ref);
            }
            const std::size_t total = tokens[i].size() >= n ? tokens[i].size() - n + 1 : 0;
            log_precision_sum[i] += std::log((static_cast<double>(clipped) + 1.0) / (static_cast<double>(total) + 1.0));
        }
    }

    double sum = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        const double c = static_cast<double>(tokens[i].size());
        // Closest reference length; ties go to the shorter reference.
        double r = -1.0;
        for (std::size_t j = 0; j < m; ++j) {
            if (j == i) continue;
            const double len = static_cast<double>(tokens[j].size());
            if (r < 0.0 || std::abs(len - c) < std::abs(r - c) || (std::abs(len - c) == std::abs(r - c) && len < r)) {
                r = len;
            }
        }
        double bp = 1.0;
        if (c == 0.0) {
            bp = r > 0.0 ? 0.0 : 1.0;
        } else if (c < r) {
            bp = std::exp(1.0 - r / c);
        }
        sum += bp * std::exp(log_precision_sum[i] / static_cast<double>(max_n));
    }
    return sum / static_cast<double>(m);
}

// -----------------------------------------------------------------------------
// Report
// -----------------------------------------------------------------------------

json EvalReport::to_json() const {
    auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
    return json{{"spearman", opt(spearman)},
                {"kendall", opt(kendall)},
                {"qwk", opt(qwk)},
                {"accuracy", accuracy},
                {"accuracy_percent", 100.0 * accuracy},
                {"f1_per_class", f1_per_class},
                {"macro_f1", macro_f1}};
}

EvalReport EvalReport::from_json(const json& j) {
    auto opt = [&](const char* key) -> std::optional<double> {
        const auto& v = j.at(key);
        if (v.is_null()) return std::nullopt;
        return v.get<double>();
    };
    EvalReport r;
    r.spearman = opt("spearman");
    r.kendall = opt("kendall");
    r.qwk = opt("qwk");
    r.accuracy = j.at("accuracy").get<double>();
    r.f1_per_class = j.at("f1_per_class").get<std::vector<double>>();
    r.macro_f1 = j.at("macro_f1").get<double>();
    return r;
}

EvalReport evaluate(std::span<const int> gold, std::span<const int> pred, int num_classes) {
    check_paired("evaluate", gold, pred, 1);
    std::vector<double> g(gold.begin(), gold.end());
    std::vector<double> p(pred.begin(), pred.end());

    auto guarded = [](const char* name, auto&& fn) -> decltype(fn()) {
        try {
            return fn();
        } catch (const MetricError&) {
            throw;
        } catch (const std::exception& e) {
            throw MetricError(name, e.what());
        }
    };
    auto optional_metric = [&](const char* name, auto&& fn) -> std::optional<double> {
        try {
            return guarded(name, fn);
        } catch (const UndefinedMetric&) {
            return std::nullopt;
        }
    };

    EvalReport r;
    r.spearman = optional_metric("spearman", [&] { return spearman(g, p); });
    r.kendall = optional_metric("kendall", [&] { return kendall_tau(g, p); });
    r.qwk = optional_metric("qwk", [&] { return qwk(gold, pred, num_classes); });
    r.accuracy = guarded("accuracy", [&] { return accuracy(gold, pred); });
    auto f1 = guarded("f1", [&] { return f1_scores(gold, pred, num_classes); });
    r.f1_per_class = std::move(f1.per_class);
    r.macro_f1 = f1.macro;
    return r;
}

}  // namespace mole::metrics
