/// @file checkpoint.cpp
/// @brief JSON checkpoints: named arrays with shape headers.

#include <fstream>

#include <nlohmann/json.hpp>

#include "mole/evaluator.hpp"

namespace mole::evaluator {

using nlohmann::json;

namespace {

constexpr std::string_view kFormat = "mole-evaluator-checkpoint";
constexpr int kVersion = 1;
constexpr std::string_view kTokenizer = "fnv1a64-hashed-words";
constexpr int kTokenizerVersion = 1;

std::vector<std::size_t> block_shape(std::string_view name, const ModelShape& s) {
    if (name == "embedding") return {s.vocab_size, s.dim};
    if (name == "encoder_weight") return {s.dim, s.dim};
    if (name == "class_weight") return {static_cast<std::size_t>(kNumGrades), s.dim};
    if (name == "class_bias") return {static_cast<std::size_t>(kNumGrades)};
    if (name == "contrast_bias") return {1};
    return {s.dim};
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const ModelParams& params, const std::string& metadata_json) {
    params.check_shapes();
    json arrays = json::object();
    for (const auto& block : params.blocks()) {
        arrays[std::string(block.name)] = json{{"shape", block_shape(block.name, params.shape)},
                                               {"data", std::vector<double>(block.values.begin(), block.values.end())}};
    }
    json j{{"format", kFormat},
           {"version", kVersion},
           {"tokenizer", {{"scheme", kTokenizer}, {"version", kTokenizerVersion}, {"vocab_size", params.shape.vocab_size}}},
           {"model", {{"dim", params.shape.dim}, {"activation", activation_name(params.shape.activation)}}},
           {"arrays", arrays},
           {"metadata", json::parse(metadata_json)}};
    try {
        write_file_atomic(path, j.dump() + "\n");
    } catch (const CorpusError& e) {
        throw CheckpointError(e.what());
    }
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw CheckpointError("cannot open checkpoint " + path.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw CheckpointError("checkpoint " + path.string() + " is not valid JSON: " + e.what());
    }

    Checkpoint ck;
    try {
        if (j.at("format").get<std::string>() != kFormat) throw CheckpointError("not a mole evaluator checkpoint");
        if (j.at("version").get<int>() != kVersion) {
            throw CheckpointError("unsupported checkpoint version " + j.at("version").dump());
        }
        const auto& tok = j.at("tokenizer");
        if (tok.at("scheme").get<std::string>() != kTokenizer || tok.at("version").get<int>() != kTokenizerVersion) {
            throw CheckpointError("checkpoint tokenizer " + tok.dump() + " does not match this build (" +
                                  std::string(kTokenizer) + " v" + std::to_string(kTokenizerVersion) + ")");
        }
        ModelShape shape;
        shape.vocab_size = tok.at("vocab_size").get<std::size_t>();
        shape.dim = j.at("model").at("dim").get<std::size_t>();
        shape.activation = parse_activation(j.at("model").at("activation").get<std::string>());

        ck.params = ModelParams::zeros(shape);
        const auto& arrays = j.at("arrays");
        for (auto& block : ck.params.blocks()) {
            const auto& entry = arrays.at(std::string(block.name));
            auto shape_on_disk = entry.at("shape").get<std::vector<std::size_t>>();
            auto expected = block_shape(block.name, shape);
            if (shape_on_disk != expected) {
                throw CheckpointError("checkpoint " + std::string(block.name) + " shape " + entry.at("shape").dump() +
                                      " does not match vocab_size=" + std::to_string(shape.vocab_size) +
                                      " dim=" + std::to_string(shape.dim));
            }
            auto data = entry.at("data").get<std::vector<double>>();
            if (data.size() != block.values.size()) {
                throw CheckpointError("checkpoint " + std::string(block.name) + " holds " + std::to_string(data.size()) +
                                      " values, shape implies " + std::to_string(block.values.size()));
            }
            std::copy(data.begin(), data.end(), block.values.begin());
        }
        ck.metadata_json = j.value("metadata", json::object()).dump();
    } catch (const json::exception& e) {
        throw CheckpointError("malformed checkpoint " + path.string() + ": " + e.what());
    } catch (const CheckpointError&) {
        throw;
    } catch (const Error& e) {
        throw CheckpointError("checkpoint " + path.string() + ": " + e.what());
    }
    return ck;
}

}  // namespace mole::evaluator
