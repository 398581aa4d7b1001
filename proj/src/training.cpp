/// @file training.cpp
/// @brief Mini-batch gradient descent on the joint loss.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "evaluator_internal.hpp"
#include "mole/evaluator.hpp"

namespace mole::evaluator {

namespace {

void validate(const TrainConfig& c) {
    if (!std::isfinite(c.C) || c.C < 0.0) throw Error("C must be finite and >= 0");
    if (!(c.learning_rate > 0.0) || !std::isfinite(c.learning_rate)) throw Error("learning rate must be positive");
    if (c.epochs < 1) throw Error("epochs must be >= 1");
    if (c.batch_size < 1) throw Error("batch size must be >= 1");
    if (c.shape.dim < 1 || c.shape.vocab_size < 2) throw Error("model needs dim >= 1 and vocab_size >= 2");
    if (c.optimizer == Optimizer::momentum && (c.momentum < 0.0 || c.momentum >= 1.0)) {
        throw Error("momentum must lie in [0,1)");
    }
}

std::mt19937_64 stream(std::int64_t seed, std::uint32_t id) {
    std::seed_seq seq{static_cast<std::uint32_t>(static_cast<std::uint64_t>(seed) & 0xffffffffu),
                      static_cast<std::uint32_t>(static_cast<std::uint64_t>(seed) >> 32), id};
    return std::mt19937_64(seq);
}

template <typename T>
std::vector<const T*> all(std::span<const T> xs) {
    std::vector<const T*> out;
    for (const auto& x : xs) out.push_back(&x);
    return out;
}

EpochLog full_loss(int epoch, std::span<const LabeledExample> labeled, std::span<const PairExample> pairs,
                   const ModelParams& params, double C) {
    auto l = all(labeled);
    auto p = all(pairs);
    auto loss = detail::accumulate(l, p, params, C, nullptr);
    return EpochLog{epoch, loss.cls, loss.ctr, loss.total};
}

}  // namespace

TrainResult train(std::span<const LabeledExample> labeled, std::span<const PairExample> pairs,
                  const TrainConfig& config) {
    validate(config);
    if (labeled.empty()) throw Error("training needs a non-empty labeled corpus");

    TrainResult result;
    auto& params = result.params;
    params = ModelParams::random(config.shape, static_cast<std::uint64_t>(config.seed), config.init_scale);

    auto labeled_rng = stream(config.seed, 1);
    auto pair_rng = stream(config.seed, 2);

    std::vector<std::size_t> order(labeled.size());
    std::iota(order.begin(), order.end(), 0);
    std::vector<std::size_t> pair_order(pairs.size());
    std::iota(pair_order.begin(), pair_order.end(), 0);
    std::size_t pair_cursor = pair_order.size();

    ModelParams velocity;
    if (config.optimizer == Optimizer::momentum) velocity = ModelParams::zeros(config.shape);

    result.log.push_back(full_loss(0, labeled, pairs, params, config.C));
    if (!std::isfinite(result.log.back().total)) throw DivergenceError("initial loss is not finite", 0);

    const auto batch = static_cast<std::size_t>(config.batch_size);
    std::vector<const LabeledExample*> lbatch;
    std::vector<const PairExample*> pbatch;
    for (int epoch = 1; epoch <= config.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), labeled_rng);
        for (std::size_t start = 0; start < order.size(); start += batch) {
            lbatch.clear();
            for (std::size_t i = start; i < std::min(start + batch, order.size()); ++i) {
                lbatch.push_back(&labeled[order[i]]);
            }
            pbatch.clear();
            for (std::size_t i = 0; i < batch && !pair_order.empty(); ++i) {
                if (pair_cursor == pair_order.size()) {
                    std::shuffle(pair_order.begin(), pair_order.end(), pair_rng);
                    pair_cursor = 0;
                }
                pbatch.push_back(&pairs[pair_order[pair_cursor++]]);
            }

            auto grad = ModelParams::zeros(config.shape);
            try {
                detail::accumulate(lbatch, pbatch, params, config.C, &grad);
                detail::check_finite(grad);
            } catch (const NonFiniteError& e) {
                throw DivergenceError(std::string("diverged: ") + e.what(), epoch);
            }

            auto pb = params.blocks();
            auto gb = grad.blocks();
            if (config.optimizer == Optimizer::momentum) {
                auto vb = velocity.blocks();
                for (std::size_t b = 0; b < pb.size(); ++b) {
                    for (std::size_t i = 0; i < pb[b].values.size(); ++i) {
                        vb[b].values[i] = config.momentum * vb[b].values[i] + gb[b].values[i];
                        pb[b].values[i] -= config.learning_rate * vb[b].values[i];
                    }
                }
            } else {
                for (std::size_t b = 0; b < pb.size(); ++b) {
                    for (std::size_t i = 0; i < pb[b].values.size(); ++i) {
                        pb[b].values[i] -= config.learning_rate * gb[b].values[i];
                    }
                }
            }
        }
        try {
            result.log.push_back(full_loss(epoch, labeled, pairs, params, config.C));
        } catch (const NonFiniteError& e) {
            throw DivergenceError(std::string("diverged: ") + e.what(), epoch);
        }
        if (!std::isfinite(result.log.back().total)) {
            throw DivergenceError("loss became non-finite", epoch);
        }
    }
    return result;
}

TrainResult train(std::span<const Document> labeled, std::span<const ContrastivePair> pairs,
                  const TrainConfig& config) {
    if (labeled.empty()) throw Error("training needs a non-empty labeled corpus");
    const auto v = config.shape.vocab_size;
    std::vector<LabeledExample> lex;
    lex.reserve(labeled.size());
    for (const auto& doc : labeled) {
        if (!doc.grade) throw Error("labeled document '" + doc.id + "' has no grade");
        lex.push_back({document_tokens(doc, v), *doc.grade});
    }
    std::vector<PairExample> pex;
    pex.reserve(pairs.size());
    for (const auto& pair : pairs) {
        pex.push_back({document_tokens(pair.higher(), v), document_tokens(pair.lower(), v)});
    }
    return train(std::span<const LabeledExample>(lex), std::span<const PairExample>(pex), config);
}

}  // namespace mole::evaluator
