#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <string>

namespace consensus_dx {

struct CompletionRequest {
  std::string model_name;
  std::string prompt;
  double temperature = 0.0;
  double top_p = 1.0;
  int max_output_tokens = 64;

  /// Throws ValidationError on an empty prompt or out-of-range decoding values.
  void validate() const;
};

/// Sorted keys, shortest round-trip number formatting.
std::string canonical_request_json(const CompletionRequest& request);
CompletionRequest request_from_json(const std::string& json_text);

struct CacheKey {
  std::string digest;  // 64 hex chars

  bool operator==(const CacheKey&) const = default;
};

CacheKey cache_key(const CompletionRequest& request);

enum class ProviderKind { http, replay, synthetic };

std::string to_string(ProviderKind k);
ProviderKind parse_provider_kind(const std::string& s);

struct CompletionResponse {
  std::string text;
  ProviderKind provider = ProviderKind::synthetic;
  bool cached = false;
  std::chrono::milliseconds latency{0};
};

class Provider {
 public:
  virtual ~Provider() = default;
  virtual ProviderKind kind() const = 0;
  /// Remote providers pass through the rate limiter; local ones do not.
  virtual bool is_remote() const { return false; }
  virtual std::string complete(const CompletionRequest& request) = 0;
};

/// Content-addressed response store: one `<digest>.json` per request.
class ResponseCache {
 public:
  explicit ResponseCache(std::filesystem::path dir);

  std::optional<std::string> lookup(const CacheKey& key) const;
  void store(const CompletionRequest& request, const std::string& response_text);
  std::filesystem::path path_for(const CacheKey& key) const;
  const std::filesystem::path& dir() const noexcept { return dir_; }

 private:
  std::filesystem::path dir_;
};

/// Serves only responses recorded in a cache directory.
class ReplayProvider : public Provider {
 public:
  explicit ReplayProvider(std::filesystem::path dir) : cache_(std::move(dir)) {}
  ProviderKind kind() const override { return ProviderKind::replay; }
  std::string complete(const CompletionRequest& request) override;

 private:
  ResponseCache cache_;
};

struct HttpProviderOptions {
  std::string base_url = "https://api.openai.com/v1";
  std::chrono::seconds timeout{60};
  std::string api_key_env = "CONSENSUS_DX_API_KEY";
};

/// Chat-completions client. POSTs {base_url}/chat/completions with a single
/// user message and returns choices[0].message.content.
class HttpProvider : public Provider {
 public:
  /// Throws AuthError when the API key environment variable is unset.
  explicit HttpProvider(HttpProviderOptions options);
  ProviderKind kind() const override { return ProviderKind::http; }
  bool is_remote() const override { return true; }
  std::string complete(const CompletionRequest& request) override;

  /// Request body as sent on the wire.
  static std::string request_body(const CompletionRequest& request);
  /// Extracts the completion text; throws UpstreamError on an unexpected shape.
  static std::string parse_response_body(const std::string& body);

 private:
  HttpProviderOptions options_;
  std::string api_key_;
};

struct RetryPolicy {
  int max_attempts = 5;
  std::chrono::milliseconds base_delay{500};
  bool jitter = true;
};

/// Token bucket admitting `requests_per_minute` with the given burst.
class RateLimiter {
 public:
  explicit RateLimiter(double requests_per_minute, double burst = 1.0);
  void acquire();

 private:
  std::mutex mu_;
  double rate_per_sec_;
  double capacity_;
  double tokens_;
  std::chrono::steady_clock::time_point last_;
};

struct GatewayOptions {
  std::optional<std::filesystem::path> cache_dir;
  RetryPolicy retry;
  double requests_per_minute = 60.0;
  double burst = 1.0;
  std::uint64_t jitter_seed = 0x5eed;
  /// Replaces std::this_thread::sleep_for during backoff (tests).
  std::function<void(std::chrono::milliseconds)> sleeper;
};

struct GatewayStats {
  std::uint64_t upstream_calls = 0;
  std::uint64_t cache_hits = 0;
  std::uint64_t retries = 0;
};

/// Single entry point for model calls. Safe for concurrent callers.
class Gateway {
 public:
  Gateway(std::unique_ptr<Provider> provider, GatewayOptions options = {});

  /// Cache hit: stored text, no upstream call. Miss: provider call (rate
  /// limited and retried with exponential backoff when remote), then persist.
  CompletionResponse complete(const CompletionRequest& request);

  GatewayStats stats() const;
  ProviderKind provider_kind() const { return provider_->kind(); }
  bool has_cache() const { return cache_.has_value(); }

 private:
  std::chrono::milliseconds backoff_delay(int attempt);

  std::unique_ptr<Provider> provider_;
  GatewayOptions options_;
  std::optional<ResponseCache> cache_;
  std::optional<RateLimiter> limiter_;
  std::mutex rng_mu_;
  std::mt19937_64 jitter_rng_;
  std::atomic<std::uint64_t> upstream_calls_{0};
  std::atomic<std::uint64_t> cache_hits_{0};
  std::atomic<std::uint64_t> retries_{0};
};

}  // namespace consensus_dx
