/// @file evaluator.hpp
/// @brief Small trainable quality evaluator: hashed-token embeddings, one
/// dense per-position transform with mean pooling, a 5-way grade head, and a
/// scalar contrast head trained with L = L_cls + C * L_ctr.

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mole/corpus.hpp"
#include "mole/error.hpp"

namespace mole::evaluator {

inline constexpr std::size_t kDefaultVocabSize = 4096;
/// Id of the reserved token produced for empty text.
inline constexpr std::uint32_t kEmptyToken = 0;

// -----------------------------------------------------------------------------
// Types
// -----------------------------------------------------------------------------

struct TokenSequence {
    std::vector<std::uint32_t> ids;
    std::size_t length() const { return ids.size(); }
    bool operator==(const TokenSequence&) const = default;
};

enum class Activation { tanh, identity };

struct ModelShape {
    std::size_t vocab_size = kDefaultVocabSize;
    std::size_t dim = 16;
    Activation activation = Activation::tanh;
    bool operator==(const ModelShape&) const = default;
};

/// All trainable parameters. Matrices are row-major. Gradients use the same type.
struct ModelParams {
    ModelShape shape;
    std::vector<double> embedding;        ///< vocab_size x dim
    std::vector<double> encoder_weight;   ///< dim x dim, applied as W * e
    std::vector<double> encoder_bias;     ///< dim
    std::vector<double> class_weight;     ///< 5 x dim
    std::vector<double> class_bias;       ///< 5
    std::vector<double> contrast_weight;  ///< dim
    std::vector<double> contrast_bias;    ///< 1

    static ModelParams zeros(const ModelShape& shape);
    /// Gaussian init with the given scale; encoder weights scaled by 1/sqrt(dim).
    static ModelParams random(const ModelShape& shape, std::uint64_t seed, double scale = 0.1);

    struct Block {
        std::string_view name;
        std::span<double> values;
    };
    struct ConstBlock {
        std::string_view name;
        std::span<const double> values;
    };
    std::array<Block, 7> blocks();
    std::array<ConstBlock, 7> blocks() const;

    /// Throws ShapeError if any block size disagrees with `shape`.
    void check_shapes() const;

    bool operator==(const ModelParams&) const = default;
};

struct ClassDistribution {
    std::array<double, kNumGrades> probabilities{};
    /// Most probable grade; ties go to the lower grade.
    int argmax() const;
};

struct LabeledExample {
    TokenSequence tokens;
    int grade = 0;
};

/// `higher` is the rewritten document, `lower` the original.
struct PairExample {
    TokenSequence higher;
    TokenSequence lower;
};

struct LossBreakdown {
    double cls = 0.0;    ///< mean cross-entropy over the labeled batch (0 if empty)
    double ctr = 0.0;    ///< mean pairwise loss over the pair batch (0 if empty)
    double total = 0.0;  ///< cls + C * ctr
};

// -----------------------------------------------------------------------------
// Errors
// -----------------------------------------------------------------------------

class ShapeError : public Error {
public:
    using Error::Error;
};

class NonFiniteError : public Error {
public:
    NonFiniteError(const std::string& what, std::string block)
        : Error(what), block_(std::move(block)) {}
    const std::string& block() const { return block_; }

private:
    std::string block_;
};

// -----------------------------------------------------------------------------
// Forward pieces
// -----------------------------------------------------------------------------

TokenSequence tokenize(std::string_view text, std::size_t vocab_size = kDefaultVocabSize);

/// Evaluator input for a document: tokenize(format_qa(title, body)).
TokenSequence document_tokens(const Document& doc, std::size_t vocab_size);

/// Document representation: embed, transform each position, mean-pool.
std::vector<double> encode(const TokenSequence& tokens, const ModelParams& params);

/// Grade-head logits for a representation.
std::array<double, kNumGrades> class_logits(std::span<const double> hidden, const ModelParams& params);

/// Softmax of the grade-head logits (max-subtracted).
ClassDistribution classify(std::span<const double> hidden, const ModelParams& params);
ClassDistribution softmax(std::span<const double, kNumGrades> logits);

/// Contrast head: w . hidden + b.
double contrast_score(std::span<const double> hidden, const ModelParams& params);

/// -log p(gold).
double cls_loss(const ClassDistribution& dist, int gold);

/// softplus(x) = log(1 + e^x) without overflow.
double softplus(double x);

/// -log sigmoid(score_hi - score_lo).
double ctr_loss(double score_hi, double score_lo);

/// Mean cls loss over `labeled` plus C times mean ctr loss over `pairs`.
/// An empty batch contributes zero. With C == 0 the pair term is still
/// reported in `ctr` but adds nothing to `total`.
LossBreakdown joint_loss(std::span<const LabeledExample> labeled, std::span<const PairExample> pairs,
                         const ModelParams& params, double C);

/// Analytic gradient of joint_loss. Throws NonFiniteError naming the first
/// parameter block holding a non-finite entry.
ModelParams backward(std::span<const LabeledExample> labeled, std::span<const PairExample> pairs,
                     const ModelParams& params, double C, LossBreakdown* loss = nullptr);

// -----------------------------------------------------------------------------
// Training
// -----------------------------------------------------------------------------

enum class Optimizer { sgd, momentum };

struct TrainConfig {
    double C = 10.0;
    double learning_rate = 1.0;
    int epochs = 60;
    int batch_size = 16;
    std::int64_t seed = 0;
    ModelShape shape;
    Optimizer optimizer = Optimizer::sgd;
    double momentum = 0.9;
    double init_scale = 0.1;
};

struct EpochLog {
    int epoch = 0;  ///< 0 is the initial state before any update
    double cls = 0.0;
    double ctr = 0.0;
    double total = 0.0;
    bool operator==(const EpochLog&) const = default;
};

struct TrainResult {
    ModelParams params;
    std::vector<EpochLog> log;
};

class DivergenceError : public Error {
public:
    DivergenceError(const std::string& what, int epoch) : Error(what), epoch_(epoch) {}
    int epoch() const { return epoch_; }

private:
    int epoch_;
};

/// Mini-batch training. Each step takes one shuffled labeled batch and an
/// independently drawn pair batch. Losses over the full data are logged
/// before training and after every epoch. Deterministic given config.seed.
TrainResult train(std::span<const LabeledExample> labeled, std::span<const PairExample> pairs,
                  const TrainConfig& config);

/// Tokenizes documents and pairs, then trains. Throws Error if any labeled
/// document lacks a grade or the labeled set is empty.
TrainResult train(std::span<const Document> labeled, std::span<const ContrastivePair> pairs,
                  const TrainConfig& config);

// -----------------------------------------------------------------------------
// Inference
// -----------------------------------------------------------------------------

struct Prediction {
    int grade = 0;
    ClassDistribution distribution;
};

Prediction predict_grade(std::string_view text, const ModelParams& params, std::string_view title = {});
Prediction predict_grade(const Document& doc, const ModelParams& params);

// -----------------------------------------------------------------------------
// Checkpoints
// -----------------------------------------------------------------------------

class CheckpointError : public Error {
public:
    using Error::Error;
};

/// JSON file of named arrays with shape headers plus free-form metadata.
void save_checkpoint(const std::filesystem::path& path, const ModelParams& params,
                     const std::string& metadata_json = "{}");

struct Checkpoint {
    ModelParams params;
    std::string metadata_json;
};

/// Throws CheckpointError on format, tokenizer, or shape mismatch.
Checkpoint load_checkpoint(const std::filesystem::path& path);

std::string_view activation_name(Activation a);
Activation parse_activation(std::string_view name);

}  // namespace mole::evaluator
