/// @file llm_client.hpp
/// @brief Chat-completion client: request/response types, retries, on-disk
/// response cache, throttling, and an offline mock.

#pragma once

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <shared_mutex>
#include <string>
#include <vector>

#include "mole/corpus.hpp"
#include "mole/error.hpp"

namespace mole::llm {

struct LlmRequest {
    std::string model;
    std::string prompt;
    double temperature = 0.0;
    int max_tokens = 1024;

    /// Throws LlmError when the prompt is empty, the temperature is negative
    /// or non-finite, or max_tokens is not positive.
    void validate() const;
};

struct LlmResponse {
    std::string text;
    bool cached = false;
    int attempt_count = 1;
    std::string created_at;
};

// -----------------------------------------------------------------------------
// Errors
// -----------------------------------------------------------------------------

class LlmError : public Error {
public:
    using Error::Error;
    virtual bool retryable() const { return false; }
};

/// Network failure, 429, 5xx. Retried.
class TransientError : public LlmError {
public:
    using LlmError::LlmError;
    bool retryable() const override { return true; }
};

/// The completion hit max_tokens. Retried, but kept distinct so callers can
/// tell it apart from transport failures.
class TruncatedError : public LlmError {
public:
    using LlmError::LlmError;
    bool retryable() const override { return true; }
};

/// 401/403. Never retried.
class AuthError : public LlmError {
public:
    using LlmError::LlmError;
};

class RetriesExhausted : public LlmError {
public:
    RetriesExhausted(int attempts, const std::string& last_error)
        : LlmError("gave up after " + std::to_string(attempts) + " attempts: " + last_error),
          attempts_(attempts) {}
    int attempts() const { return attempts_; }

private:
    int attempts_;
};

// -----------------------------------------------------------------------------
// Client interfaces
// -----------------------------------------------------------------------------

class LlmClient {
public:
    virtual ~LlmClient() = default;
    virtual LlmResponse complete(const LlmRequest& request) = 0;
};

/// One attempt against a service. Returns completion text or throws one of
/// the LlmError subclasses above.
class Transport {
public:
    virtual ~Transport() = default;
    virtual std::string send(const LlmRequest& request) = 0;
};

/// Stable cache key: SHA-256 over (model, prompt, temperature, max_tokens).
std::string request_key(const LlmRequest& request);

struct RetryPolicy {
    int max_attempts = 3;
    std::chrono::milliseconds initial_backoff{500};
    double multiplier = 2.0;
    std::chrono::milliseconds max_backoff{8000};

    /// Delay before retry k (k = 1 is the wait after the first failure).
    /// Nondecreasing in k.
    std::chrono::milliseconds backoff(int k) const;
};

/// Token bucket. `rate` tokens per second, holding at most `burst`.
/// A rate of zero disables limiting.
class RateLimiter {
public:
    RateLimiter(double rate, double burst);
    void acquire();

private:
    using Clock = std::chrono::steady_clock;
    double rate_;
    double burst_;
    double tokens_;
    Clock::time_point last_;
    std::mutex mutex_;
};

struct ClientLimits {
    int max_in_flight = 4;
    double requests_per_second = 0.0;
    double burst = 4.0;
};

using Sleeper = std::function<void(std::chrono::milliseconds)>;

/// Retries retryable failures of a Transport with exponential backoff and
/// bounds concurrent attempts.
class RetryingClient : public LlmClient {
public:
    RetryingClient(std::shared_ptr<Transport> transport, RetryPolicy policy,
                   ClientLimits limits = {}, Sleeper sleeper = {});

    LlmResponse complete(const LlmRequest& request) override;

private:
    std::shared_ptr<Transport> transport_;
    RetryPolicy policy_;
    Sleeper sleeper_;
    std::counting_semaphore<> in_flight_;
    RateLimiter limiter_;
};

// -----------------------------------------------------------------------------
// Response cache
// -----------------------------------------------------------------------------

struct CacheEntry {
    std::string text;
    std::string created_at;
    int attempt_count = 1;
};

/// Directory of `<request_key>.json` files. Concurrent readers, serialized writers.
class DiskCache {
public:
    explicit DiskCache(std::filesystem::path dir);

    std::optional<CacheEntry> get(const std::string& key) const;
    void put(const std::string& key, const LlmRequest& request, const CacheEntry& entry);
    const std::filesystem::path& dir() const { return dir_; }

private:
    std::filesystem::path dir_;
    mutable std::shared_mutex mutex_;
};

/// Serves repeated requests from a DiskCache; misses go to the inner client.
class CachingClient : public LlmClient {
public:
    CachingClient(std::shared_ptr<LlmClient> inner, std::shared_ptr<DiskCache> cache);
    LlmResponse complete(const LlmRequest& request) override;

    std::size_t hits() const;
    std::size_t misses() const;

private:
    std::shared_ptr<LlmClient> inner_;
    std::shared_ptr<DiskCache> cache_;
    mutable std::mutex stats_mutex_;
    std::size_t hits_ = 0;
    std::size_t misses_ = 0;
};

// -----------------------------------------------------------------------------
// HTTP
// -----------------------------------------------------------------------------

struct HttpConfig {
    /// Full chat-completions URL, e.g. https://api.openai.com/v1/chat/completions
    std::string endpoint = "https://api.openai.com/v1/chat/completions";
    /// Name of the environment variable holding the bearer token.
    std::string api_key_env = "OPENAI_API_KEY";
    std::chrono::seconds timeout{120};
};

/// OpenAI-compatible chat-completions transport (single user message).
class HttpTransport : public Transport {
public:
    /// Reads the credential from the environment. Throws AuthError if unset.
    explicit HttpTransport(HttpConfig config);
    /// Explicit credential; intended for tests against a local endpoint.
    HttpTransport(HttpConfig config, std::string api_key);

    std::string send(const LlmRequest& request) override;

private:
    HttpConfig config_;
    std::string api_key_;
    std::string scheme_host_port_;
    std::string path_;
};

// -----------------------------------------------------------------------------
// Offline mock
// -----------------------------------------------------------------------------

/// Deterministic, network-free client. A fixed prompt→text mapping takes
/// precedence; otherwise issue-identification and rewrite prompts are
/// recognised and answered with canned issues and mock_rewriter output.
class MockClient : public LlmClient {
public:
    explicit MockClient(std::map<std::string, std::string> fixed = {});
    LlmResponse complete(const LlmRequest& request) override;

    std::size_t call_count() const;

    /// Timestamp stamped on every mock response, so reruns are byte-stable.
    static constexpr std::string_view kCreatedAt = "1970-01-01T00:00:00Z";

private:
    std::map<std::string, std::string> fixed_;
    mutable std::mutex mutex_;
    std::size_t calls_ = 0;
};

/// Facet-specific improvement transform used by the mock: removes sentences
/// carrying the facet's planted flaw markers and appends the facet's repair
/// sentence; coherence additionally sorts sentences into canonical order and
/// informativeness appends a fixed fact-sentence pool. Idempotent. Empty
/// bodies pass through unchanged.
std::string mock_rewriter(Facet facet, const Document& document);

}  // namespace mole::llm
