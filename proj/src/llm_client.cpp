/// @file llm_client.cpp
/// @brief Request keys, retry/backoff, throttling and the on-disk response cache.

#include "mole/llm_client.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <thread>

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "mole/text.hpp"

namespace mole::llm {

using nlohmann::json;

void LlmRequest::validate() const {
    if (prompt.empty()) throw LlmError("request prompt is empty");
    if (!std::isfinite(temperature) || temperature < 0.0) {
        throw LlmError("request temperature must be finite and >= 0");
    }
    if (max_tokens <= 0) throw LlmError("request max_tokens must be positive");
}

std::string request_key(const LlmRequest& request) {
    // Canonical form; json object keys serialize sorted.
    json j{{"model", request.model},
           {"prompt", request.prompt},
           {"temperature", request.temperature},
           {"max_tokens", request.max_tokens}};
    return text::sha256_hex(j.dump());
}

std::chrono::milliseconds RetryPolicy::backoff(int k) const {
    if (k < 1) return std::chrono::milliseconds{0};
    const double base = static_cast<double>(initial_backoff.count());
    const double raw = base * std::pow(std::max(multiplier, 1.0), k - 1);
    const double capped = std::min(raw, static_cast<double>(max_backoff.count()));
    return std::chrono::milliseconds{static_cast<long long>(capped)};
}

// -----------------------------------------------------------------------------
// RateLimiter
// -----------------------------------------------------------------------------

RateLimiter::RateLimiter(double rate, double burst)
    : rate_(rate), burst_(std::max(burst, 1.0)), tokens_(std::max(burst, 1.0)), last_(Clock::now()) {}

void RateLimiter::acquire() {
    if (rate_ <= 0.0) return;
    std::unique_lock lock(mutex_);
    for (;;) {
        auto now = Clock::now();
        std::chrono::duration<double> elapsed = now - last_;
        last_ = now;
        tokens_ = std::min(burst_, tokens_ + elapsed.count() * rate_);
        if (tokens_ >= 1.0) {
            tokens_ -= 1.0;
            return;
        }
        auto wait = std::chrono::duration<double>((1.0 - tokens_) / rate_);
        lock.unlock();
        std::this_thread::sleep_for(wait);
        lock.lock();
    }
}

// -----------------------------------------------------------------------------
// RetryingClient
// -----------------------------------------------------------------------------

RetryingClient::RetryingClient(std::shared_ptr<Transport> transport, RetryPolicy policy,
                               ClientLimits limits, Sleeper sleeper)
    : transport_(std::move(transport)),
      policy_(policy),
      sleeper_(sleeper ? std::move(sleeper)
                       : Sleeper([](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); })),
      in_flight_(std::max(limits.max_in_flight, 1)),
      limiter_(limits.requests_per_second, limits.burst) {
    if (!transport_) throw LlmError("RetryingClient needs a transport");
    if (policy_.max_attempts < 1) throw LlmError("retry cap must be >= 1");
}

LlmResponse RetryingClient::complete(const LlmRequest& request) {
    request.validate();
    std::string last_error;
    for (int attempt = 1; attempt <= policy_.max_attempts; ++attempt) {
        if (attempt > 1) sleeper_(policy_.backoff(attempt - 1));
        limiter_.acquire();
        in_flight_.acquire();
        try {
            std::string text = transport_->send(request);
            in_flight_.release();
            return LlmResponse{std::move(text), false, attempt, text::utc_timestamp()};
        } catch (const LlmError& e) {
            in_flight_.release();
            if (!e.retryable()) throw;
            last_error = e.what();
            spdlog::debug("attempt {}/{} failed: {}", attempt, policy_.max_attempts, last_error);
        } catch (...) {
            in_flight_.release();
            throw;
        }
    }
    throw RetriesExhausted(policy_.max_attempts, last_error);
}

// -----------------------------------------------------------------------------
// DiskCache
// -----------------------------------------------------------------------------

DiskCache::DiskCache(std::filesystem::path dir) : dir_(std::move(dir)) {
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    if (ec) throw LlmError("cannot create cache directory " + dir_.string());
}

std::optional<CacheEntry> DiskCache::get(const std::string& key) const {
    std::shared_lock lock(mutex_);
    std::ifstream in(dir_ / (key + ".json"));
    if (!in) return std::nullopt;
    try {
        json j = json::parse(in);
        return CacheEntry{j.at("text").get<std::string>(), j.at("created_at").get<std::string>(),
                          j.value("attempt_count", 1)};
    } catch (const json::exception& e) {
        spdlog::warn("ignoring unreadable cache entry {}: {}", key, e.what());
        return std::nullopt;
    }
}

void DiskCache::put(const std::string& key, const LlmRequest& request, const CacheEntry& entry) {
    json j{{"key", key},
           {"model", request.model},
           {"temperature", request.temperature},
           {"max_tokens", request.max_tokens},
           {"prompt_sha256", text::sha256_hex(request.prompt)},
           {"text", entry.text},
           {"created_at", entry.created_at},
           {"attempt_count", entry.attempt_count}};
    std::unique_lock lock(mutex_);
    write_file_atomic(dir_ / (key + ".json"), j.dump(2) + "\n");
}

// -----------------------------------------------------------------------------
// CachingClient
// -----------------------------------------------------------------------------

CachingClient::CachingClient(std::shared_ptr<LlmClient> inner, std::shared_ptr<DiskCache> cache)
    : inner_(std::move(inner)), cache_(std::move(cache)) {
    if (!inner_ || !cache_) throw LlmError("CachingClient needs a client and a cache");
}

LlmResponse CachingClient::complete(const LlmRequest& request) {
    request.validate();
    const auto key = request_key(request);
    if (auto hit = cache_->get(key)) {
        std::lock_guard lock(stats_mutex_);
        ++hits_;
        return LlmResponse{std::move(hit->text), true, std::max(hit->attempt_count, 1),
                           std::move(hit->created_at)};
    }
    auto response = inner_->complete(request);
    cache_->put(key, request, CacheEntry{response.text, response.created_at, response.attempt_count});
    std::lock_guard lock(stats_mutex_);
    ++misses_;
    return response;
}

std::size_t CachingClient::hits() const {
    std::lock_guard lock(stats_mutex_);
    return hits_;
}

std::size_t CachingClient::misses() const {
    std::lock_guard lock(stats_mutex_);
    return misses_;
}

}  // namespace mole::llm
