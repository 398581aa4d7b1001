/// @file evaluator_internal.hpp
/// @brief Forward/backward building blocks shared by evaluator.cpp and training.cpp.

#pragma once

#include <span>
#include <vector>

#include "mole/evaluator.hpp"

namespace mole::evaluator::detail {

/// Forward state of one document, grouped by distinct token id.
struct DocForward {
    std::vector<std::uint32_t> ids;  ///< distinct ids, ascending
    std::vector<double> weights;     ///< occurrences / sequence length
    std::vector<double> act;         ///< ids.size() x dim activations
    std::vector<double> hidden;      ///< pooled representation
};

DocForward forward(const TokenSequence& tokens, const ModelParams& params);

void backward_doc(const DocForward& f, std::span<const double> grad_hidden, const ModelParams& params,
                  ModelParams& grad);

/// Loss over the batches; accumulates gradients into `grad` when non-null.
LossBreakdown accumulate(std::span<const LabeledExample* const> labeled, std::span<const PairExample* const> pairs,
                         const ModelParams& params, double C, ModelParams* grad);

void check_finite(const ModelParams& grad);

}  // namespace mole::evaluator::detail
