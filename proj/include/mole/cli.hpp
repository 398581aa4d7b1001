/// @file cli.hpp
/// @brief Batch subcommands: synth, generate, train, evaluate.

#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "mole/counterfactual.hpp"
#include "mole/evaluator.hpp"
#include "mole/llm_client.hpp"

namespace mole::cli {

struct SynthOptions {
    std::size_t size = 100;
    std::size_t test_size = 0;
    std::int64_t seed = 0;
    std::filesystem::path out;
};

struct GenerateOptions {
    std::filesystem::path corpus;
    std::filesystem::path out;
    bool mock = false;
    std::int64_t seed = 0;
    std::string model = "gpt-3.5-turbo";
    std::string endpoint = "https://api.openai.com/v1/chat/completions";
    std::string api_key_env = "OPENAI_API_KEY";
    double stage_a_temperature = 0.0;
    double stage_b_temperature = 0.7;
    int max_body_tokens = 2048;
    int max_completion_tokens = 2048;
    int parallelism = 4;
    double requests_per_second = 0.0;
    int max_attempts = 3;
    bool use_cache = true;
};

struct TrainOptions {
    std::filesystem::path corpus;
    std::optional<std::filesystem::path> pairs;
    std::filesystem::path out;
    std::optional<std::pair<double, double>> grade_range;
    evaluator::TrainConfig train;
};

struct EvaluateOptions {
    std::vector<std::filesystem::path> checkpoints;
    std::vector<std::filesystem::path> predictions;
    std::filesystem::path test;
    std::filesystem::path out;
    std::optional<std::pair<double, double>> grade_range;
};

/// Default training hyperparameters used by the CLI.
evaluator::TrainConfig default_train_config();

int cmd_synth(const SynthOptions& opts, std::ostream& out);
/// `client` overrides the mock/HTTP client selection when non-null.
int cmd_generate(const GenerateOptions& opts, std::ostream& out,
                 std::shared_ptr<llm::LlmClient> client = nullptr);
int cmd_train(const TrainOptions& opts, std::ostream& out);
int cmd_evaluate(const EvaluateOptions& opts, std::ostream& out);

/// Parses `args` (without the program name) and dispatches. Returns the exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace mole::cli
