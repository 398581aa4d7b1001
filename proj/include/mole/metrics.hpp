/// @file metrics.hpp
/// @brief Agreement and diversity statistics: Spearman, Kendall tau-b,
/// quadratic weighted kappa, accuracy, per-class/macro F1, TTR, Self-BLEU.

#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "mole/corpus.hpp"
#include "mole/error.hpp"

namespace mole::metrics {

class MetricError : public Error {
public:
    MetricError(std::string metric, const std::string& what)
        : Error(metric + ": " + what), metric_(std::move(metric)) {}
    const std::string& metric() const { return metric_; }

private:
    std::string metric_;
};

/// The statistic is mathematically undefined for this input (constant side,
/// degenerate expected-agreement matrix).
class UndefinedMetric : public MetricError {
public:
    using MetricError::MetricError;
};

/// Pearson correlation of average ranks.
double spearman(std::span<const double> gold, std::span<const double> pred);

/// Tau-b, O(n log n).
double kendall_tau(std::span<const double> gold, std::span<const double> pred);

double qwk(std::span<const int> gold, std::span<const int> pred, int num_classes = kNumGrades);

double accuracy(std::span<const int> gold, std::span<const int> pred);

struct F1Scores {
    std::vector<double> per_class;
    double macro = 0.0;
};

/// A class absent from both gold and pred scores 0.
F1Scores f1_scores(std::span<const int> gold, std::span<const int> pred, int num_classes = kNumGrades);

/// Distinct / total word tokens.
double ttr(std::string_view text);

/// Mean BLEU of each document against all others as references. Uniform
/// weights up to max_n, add-one smoothed modified precisions, brevity
/// penalty against the closest reference length.
double self_bleu(std::span<const std::string> documents, int max_n = 4);

// -----------------------------------------------------------------------------
// Report
// -----------------------------------------------------------------------------

struct EvalReport {
    std::optional<double> spearman;  ///< nullopt = undefined
    std::optional<double> kendall;
    std::optional<double> qwk;
    double accuracy = 0.0;
    std::vector<double> f1_per_class;
    double macro_f1 = 0.0;

    /// {spearman, kendall, qwk, accuracy, accuracy_percent, f1_per_class,
    /// macro_f1}; undefined values are null.
    nlohmann::json to_json() const;
    static EvalReport from_json(const nlohmann::json& j);

    bool operator==(const EvalReport&) const = default;
};

/// Undefined correlations are recorded as nullopt; every other failure is
/// rethrown as MetricError naming the metric.
EvalReport evaluate(std::span<const int> gold, std::span<const int> pred, int num_classes = kNumGrades);

}  // namespace mole::metrics
