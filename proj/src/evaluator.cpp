/// @file evaluator.cpp
/// @brief Forward pass, losses and analytic gradients of the evaluator.

#include "mole/evaluator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "evaluator_internal.hpp"
#include "mole/text.hpp"

namespace mole::evaluator {

// -----------------------------------------------------------------------------
// Tokenization
// -----------------------------------------------------------------------------

TokenSequence tokenize(std::string_view text, std::size_t vocab_size) {
    if (vocab_size < 2) throw ShapeError("vocabulary needs at least 2 entries");
    TokenSequence seq;
    for (const auto& tok : text::word_tokens(text)) {
        seq.ids.push_back(static_cast<std::uint32_t>(1 + text::fnv1a64(tok) % (vocab_size - 1)));
    }
    if (seq.ids.empty()) seq.ids.push_back(kEmptyToken);
    return seq;
}

TokenSequence document_tokens(const Document& doc, std::size_t vocab_size) {
    return tokenize(format_qa(doc.title, doc.body), vocab_size);
}

// -----------------------------------------------------------------------------
// ModelParams
// -----------------------------------------------------------------------------

ModelParams ModelParams::zeros(const ModelShape& shape) {
    if (shape.vocab_size < 2 || shape.dim < 1) throw ShapeError("model needs vocab_size >= 2 and dim >= 1");
    const auto v = shape.vocab_size;
    const auto d = shape.dim;
    ModelParams p;
    p.shape = shape;
    p.embedding.assign(v * d, 0.0);
    p.encoder_weight.assign(d * d, 0.0);
    p.encoder_bias.assign(d, 0.0);
    p.class_weight.assign(kNumGrades * d, 0.0);
    p.class_bias.assign(kNumGrades, 0.0);
    p.contrast_weight.assign(d, 0.0);
    p.contrast_bias.assign(1, 0.0);
    return p;
}

ModelParams ModelParams::random(const ModelShape& shape, std::uint64_t seed, double scale) {
    auto p = zeros(shape);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    const double enc_scale = 1.0 / std::sqrt(static_cast<double>(shape.dim));
    for (auto& x : p.embedding) x = scale * normal(rng);
    for (auto& x : p.encoder_weight) x = enc_scale * normal(rng);
    for (auto& x : p.class_weight) x = scale * normal(rng);
    for (auto& x : p.contrast_weight) x = scale * normal(rng);
    return p;
}

std::array<ModelParams::Block, 7> ModelParams::blocks() {
    return {{{"embedding", embedding},
             {"encoder_weight", encoder_weight},
             {"encoder_bias", encoder_bias},
             {"class_weight", class_weight},
             {"class_bias", class_bias},
             {"contrast_weight", contrast_weight},
             {"contrast_bias", contrast_bias}}};
}

std::array<ModelParams::ConstBlock, 7> ModelParams::blocks() const {
    return {{{"embedding", embedding},
             {"encoder_weight", encoder_weight},
             {"encoder_bias", encoder_bias},
             {"class_weight", class_weight},
             {"class_bias", class_bias},
             {"contrast_weight", contrast_weight},
             {"contrast_bias", contrast_bias}}};
}

void ModelParams::check_shapes() const {
    const auto v = shape.vocab_size;
    const auto d = shape.dim;
    const std::array<std::size_t, 7> expected = {v * d, d * d, d, kNumGrades * d, kNumGrades, d, 1};
    auto bs = blocks();
    for (std::size_t i = 0; i < bs.size(); ++i) {
        if (bs[i].values.size() != expected[i]) {
            throw ShapeError(std::string(bs[i].name) + " has " + std::to_string(bs[i].values.size()) +
                             " entries, expected " + std::to_string(expected[i]) + " for vocab_size=" +
                             std::to_string(v) + " dim=" + std::to_string(d));
        }
    }
}

int ClassDistribution::argmax() const {
    int best = 0;
    for (int k = 1; k < kNumGrades; ++k) {
        if (probabilities[k] > probabilities[best]) best = k;
    }
    return best;
}

// -----------------------------------------------------------------------------
// Forward
// -----------------------------------------------------------------------------

namespace detail {

double activate(double z, Activation a) { return a == Activation::tanh ? std::tanh(z) : z; }

/// d act / d z expressed through the activation output.
double activate_grad(double out, Activation a) { return a == Activation::tanh ? 1.0 - out * out : 1.0; }

DocForward forward(const TokenSequence& tokens, const ModelParams& params) {
    const auto d = params.shape.dim;
    const auto v = params.shape.vocab_size;
    if (tokens.ids.empty()) throw ShapeError("token sequence is empty");

    std::vector<std::uint32_t> sorted = tokens.ids;
    std::sort(sorted.begin(), sorted.end());

    DocForward f;
    const double inv_len = 1.0 / static_cast<double>(sorted.size());
    for (std::size_t i = 0; i < sorted.size();) {
        std::size_t j = i;
        while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
        if (sorted[i] >= v) {
            throw ShapeError("token id " + std::to_string(sorted[i]) + " outside vocabulary of " + std::to_string(v));
        }
        f.ids.push_back(sorted[i]);
        f.weights.push_back(static_cast<double>(j - i) * inv_len);
        i = j;
    }

    const std::size_t u = f.ids.size();
    f.act.assign(u * d, 0.0);
    f.hidden.assign(d, 0.0);
    for (std::size_t k = 0; k < u; ++k) {
        const double* e = &params.embedding[f.ids[k] * d];
        double* a = &f.act[k * d];
        for (std::size_t r = 0; r < d; ++r) {
            const double* w = &params.encoder_weight[r * d];
            double z = params.encoder_bias[r];
            for (std::size_t c = 0; c < d; ++c) z += w[c] * e[c];
            a[r] = activate(z, params.shape.activation);
            f.hidden[r] += f.weights[k] * a[r];
        }
    }
    return f;
}

void backward_doc(const DocForward& f, std::span<const double> grad_hidden, const ModelParams& params,
                  ModelParams& grad) {
    const auto d = params.shape.dim;
    std::vector<double> gz(d);
    for (std::size_t k = 0; k < f.ids.size(); ++k) {
        const double* a = &f.act[k * d];
        for (std::size_t r = 0; r < d; ++r) {
            gz[r] = f.weights[k] * grad_hidden[r] * activate_grad(a[r], params.shape.activation);
        }
        const std::size_t row = f.ids[k] * d;
        const double* e = &params.embedding[row];
        double* ge = &grad.embedding[row];
        for (std::size_t r = 0; r < d; ++r) {
            if (gz[r] == 0.0) continue;
            const double* w = &params.encoder_weight[r * d];
            double* gw = &grad.encoder_weight[r * d];
            for (std::size_t c = 0; c < d; ++c) {
                gw[c] += gz[r] * e[c];
                ge[c] += gz[r] * w[c];
            }
            grad.encoder_bias[r] += gz[r];
        }
    }
}

double log_softmax_at(const std::array<double, kNumGrades>& logits, int k) {
    const double m = *std::max_element(logits.begin(), logits.end());
    double s = 0.0;
    for (double l : logits) s += std::exp(l - m);
    return logits[k] - m - std::log(s);
}

/// sigma(x) without overflow.
double sigmoid(double x) {
    if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

LossBreakdown accumulate(std::span<const LabeledExample* const> labeled, std::span<const PairExample* const> pairs,
                         const ModelParams& params, double C, ModelParams* grad) {
    if (labeled.empty() && pairs.empty()) throw Error("joint loss needs a labeled or a pair batch");
    if (!std::isfinite(C) || C < 0.0) throw Error("loss ratio C must be finite and >= 0");
    const auto d = params.shape.dim;
    LossBreakdown loss;

    if (!labeled.empty()) {
        const double scale = 1.0 / static_cast<double>(labeled.size());
        std::vector<double> gh(d);
        for (const auto* ex : labeled) {
            if (ex->grade < kMinGrade || ex->grade > kMaxGrade) {
                throw Error("gold grade " + std::to_string(ex->grade) + " outside [0,4]");
            }
            auto f = forward(ex->tokens, params);
            auto logits = class_logits(f.hidden, params);
            loss.cls -= scale * log_softmax_at(logits, ex->grade);
            if (!grad) continue;

            auto dist = softmax(logits);
            std::fill(gh.begin(), gh.end(), 0.0);
            for (int k = 0; k < kNumGrades; ++k) {
                const double g = scale * (dist.probabilities[k] - (k == ex->grade ? 1.0 : 0.0));
                grad->class_bias[k] += g;
                double* gw = &grad->class_weight[k * d];
                const double* w = &params.class_weight[k * d];
                for (std::size_t c = 0; c < d; ++c) {
                    gw[c] += g * f.hidden[c];
                    gh[c] += g * w[c];
                }
            }
            backward_doc(f, gh, params, *grad);
        }
    }

    // With C == 0 the pair batch cannot influence the gradient; skipping it
    // keeps the update bit-identical to training without pairs.
    const bool pair_grad = grad && C != 0.0;
    if (!pairs.empty() && (!grad || pair_grad)) {
        const double scale = 1.0 / static_cast<double>(pairs.size());
        std::vector<double> gh(d);
        for (const auto* ex : pairs) {
            auto hi = forward(ex->higher, params);
            auto lo = forward(ex->lower, params);
            const double margin = contrast_score(hi.hidden, params) - contrast_score(lo.hidden, params);
            loss.ctr += scale * softplus(-margin);
            if (!pair_grad) continue;

            // d/dmargin softplus(-margin) = -sigmoid(-margin); the bias cancels.
            const double gm = -C * scale * sigmoid(-margin);
            for (std::size_t c = 0; c < d; ++c) {
                grad->contrast_weight[c] += gm * (hi.hidden[c] - lo.hidden[c]);
                gh[c] = gm * params.contrast_weight[c];
            }
            backward_doc(hi, gh, params, *grad);
            for (auto& g : gh) g = -g;
            backward_doc(lo, gh, params, *grad);
        }
    }

    loss.total = loss.cls + C * loss.ctr;
    return loss;
}

void check_finite(const ModelParams& grad) {
    for (const auto& block : grad.blocks()) {
        for (std::size_t i = 0; i < block.values.size(); ++i) {
            if (!std::isfinite(block.values[i])) {
                throw NonFiniteError("non-finite gradient in " + std::string(block.name) + "[" + std::to_string(i) + "]",
                                     std::string(block.name));
            }
        }
    }
}

}  // namespace detail

std::vector<double> encode(const TokenSequence& tokens, const ModelParams& params) {
    return detail::forward(tokens, params).hidden;
}

namespace {

void require_hidden(std::span<const double> hidden, const ModelParams& params, const char* what) {
    if (hidden.size() != params.shape.dim) {
        throw ShapeError(std::string(what) + ": hidden has " + std::to_string(hidden.size()) +
                         " entries, model dim is " + std::to_string(params.shape.dim));
    }
    for (double h : hidden) {
        if (!std::isfinite(h)) throw NonFiniteError(std::string(what) + ": non-finite hidden representation", "hidden");
    }
}

}  // namespace

std::array<double, kNumGrades> class_logits(std::span<const double> hidden, const ModelParams& params) {
    require_hidden(hidden, params, "classify");
    const auto d = params.shape.dim;
    std::array<double, kNumGrades> logits{};
    for (int k = 0; k < kNumGrades; ++k) {
        double z = params.class_bias[k];
        const double* w = &params.class_weight[k * d];
        for (std::size_t c = 0; c < d; ++c) z += w[c] * hidden[c];
        logits[k] = z;
    }
    return logits;
}

ClassDistribution softmax(std::span<const double, kNumGrades> logits) {
    const double m = *std::max_element(logits.begin(), logits.end());
    ClassDistribution dist;
    double s = 0.0;
    for (int k = 0; k < kNumGrades; ++k) {
        dist.probabilities[k] = std::exp(logits[k] - m);
        s += dist.probabilities[k];
    }
    for (auto& p : dist.probabilities) p /= s;
    return dist;
}

ClassDistribution classify(std::span<const double> hidden, const ModelParams& params) {
    auto logits = class_logits(hidden, params);
    return softmax(logits);
}

double contrast_score(std::span<const double> hidden, const ModelParams& params) {
    require_hidden(hidden, params, "contrast_score");
    double s = params.contrast_bias[0];
    for (std::size_t c = 0; c < hidden.size(); ++c) s += params.contrast_weight[c] * hidden[c];
    return s;
}

double cls_loss(const ClassDistribution& dist, int gold) {
    if (gold < kMinGrade || gold > kMaxGrade) {
        throw Error("gold grade " + std::to_string(gold) + " outside [0,4]");
    }
    const double p = dist.probabilities[gold];
    return p >= 1.0 ? 0.0 : -std::log(p);
}

double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

double ctr_loss(double score_hi, double score_lo) {
    if (!std::isfinite(score_hi) || !std::isfinite(score_lo)) throw Error("ctr_loss: non-finite score");
    return softplus(score_lo - score_hi);
}

namespace {

template <typename T>
std::vector<const T*> pointers(std::span<const T> xs) {
    std::vector<const T*> out;
    out.reserve(xs.size());
    for (const auto& x : xs) out.push_back(&x);
    return out;
}

}  // namespace

LossBreakdown joint_loss(std::span<const LabeledExample> labeled, std::span<const PairExample> pairs,
                         const ModelParams& params, double C) {
    auto l = pointers(labeled);
    auto p = pointers(pairs);
    return detail::accumulate(l, p, params, C, nullptr);
}

ModelParams backward(std::span<const LabeledExample> labeled, std::span<const PairExample> pairs,
                     const ModelParams& params, double C, LossBreakdown* loss) {
    auto grad = ModelParams::zeros(params.shape);
    auto l = pointers(labeled);
    auto p = pointers(pairs);
    auto value = detail::accumulate(l, p, params, C, &grad);
    if (!std::isfinite(value.total)) throw NonFiniteError("joint loss is not finite", "loss");
    detail::check_finite(grad);
    if (loss) *loss = value;
    return grad;
}

// -----------------------------------------------------------------------------
// Inference
// -----------------------------------------------------------------------------

Prediction predict_grade(std::string_view text, const ModelParams& params, std::string_view title) {
    auto tokens = tokenize(format_qa(title, text), params.shape.vocab_size);
    auto dist = classify(encode(tokens, params), params);
    return Prediction{dist.argmax(), dist};
}

Prediction predict_grade(const Document& doc, const ModelParams& params) {
    return predict_grade(doc.body, params, doc.title);
}

std::string_view activation_name(Activation a) { return a == Activation::tanh ? "tanh" : "identity"; }

Activation parse_activation(std::string_view name) {
    if (name == "tanh") return Activation::tanh;
    if (name == "identity") return Activation::identity;
    throw Error("unknown activation '" + std::string(name) + "'");
}

}  // namespace mole::evaluator
