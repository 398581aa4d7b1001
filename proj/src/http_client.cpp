/// @file http_client.cpp
/// @brief OpenAI-compatible chat-completions transport over cpp-httplib.

#include <cstdlib>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "mole/llm_client.hpp"

namespace mole::llm {

using nlohmann::json;

namespace {

std::string env_or_throw(const std::string& name) {
    const char* value = std::getenv(name.c_str());
    if (value == nullptr || *value == '\0') {
        throw AuthError("environment variable " + name + " is not set");
    }
    return value;
}

}  // namespace

HttpTransport::HttpTransport(HttpConfig config) : HttpTransport(config, env_or_throw(config.api_key_env)) {}

HttpTransport::HttpTransport(HttpConfig config, std::string api_key)
    : config_(std::move(config)), api_key_(std::move(api_key)) {
    const auto& url = config_.endpoint;
    auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) throw LlmError("endpoint must include a scheme: " + url);
    auto path_start = url.find('/', scheme_end + 3);
    scheme_host_port_ = url.substr(0, path_start);
    path_ = path_start == std::string::npos ? "/" : url.substr(path_start);
}

std::string HttpTransport::send(const LlmRequest& request) {
    httplib::Client client(scheme_host_port_);
    client.set_connection_timeout(config_.timeout);
    client.set_read_timeout(config_.timeout);
    client.set_write_timeout(config_.timeout);

    json body{{"model", request.model},
              {"messages", json::array({json{{"role", "user"}, {"content", request.prompt}}})},
              {"temperature", request.temperature},
              {"max_tokens", request.max_tokens}};
    httplib::Headers headers{{"Authorization", "Bearer " + api_key_}};

    auto result = client.Post(path_, headers, body.dump(), "application/json");
    if (!result) {
        throw TransientError("request to " + scheme_host_port_ + " failed: " + httplib::to_string(result.error()));
    }
    const int status = result->status;
    if (status == 401 || status == 403) {
        throw AuthError("endpoint rejected credentials (HTTP " + std::to_string(status) + ")");
    }
    if (status == 408 || status == 429 || status >= 500) {
        throw TransientError("HTTP " + std::to_string(status));
    }
    if (status != 200) {
        throw LlmError("HTTP " + std::to_string(status) + ": " + result->body.substr(0, 200));
    }

    json reply;
    try {
        reply = json::parse(result->body);
    } catch (const json::parse_error&) {
        throw TransientError("endpoint returned malformed JSON");
    }
    try {
        const auto& choice = reply.at("choices").at(0);
        std::string text = choice.at("message").at("content").get<std::string>();
        if (choice.value("finish_reason", "") == "length") {
            throw TruncatedError("completion truncated at max_tokens=" + std::to_string(request.max_tokens));
        }
        return text;
    } catch (const json::exception& e) {
        throw LlmError(std::string("unexpected response shape: ") + e.what());
    }
}

}  // namespace mole::llm
