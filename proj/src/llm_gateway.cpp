#include "consensus_dx/llm_gateway.hpp"

#include <cmath>
#include <ctime>
#include <thread>

#include "consensus_dx/errors.hpp"
#include "consensus_dx/hashing.hpp"
#include "consensus_dx/io.hpp"
#include "json.hpp"

namespace consensus_dx {

using nlohmann::json;

void CompletionRequest::validate() const {
  if (prompt.empty()) throw ValidationError("completion request has an empty prompt");
  if (model_name.empty()) throw ValidationError("completion request has no model name");
  if (!(temperature >= 0.0 && temperature <= 1.0))
    throw ValidationError("temperature must lie in [0, 1]");
  if (!(top_p > 0.0 && top_p <= 1.0)) throw ValidationError("top_p must lie in (0, 1]");
  if (max_output_tokens <= 0) throw ValidationError("max_output_tokens must be positive");
}

namespace {

json request_json(const CompletionRequest& r) {
  return json{{"model_name", r.model_name},
              {"prompt", r.prompt},
              {"temperature", r.temperature},
              {"top_p", r.top_p},
              {"max_output_tokens", r.max_output_tokens}};
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

std::string canonical_request_json(const CompletionRequest& request) {
  // nlohmann::json objects keep keys sorted and print doubles in shortest
  // round-trip form, so 0.5 and 0.50 render identically.
  return request_json(request).dump();
}

CompletionRequest request_from_json(const std::string& json_text) {
  try {
    const auto j = json::parse(json_text);
    CompletionRequest r;
    r.model_name = j.at("model_name").get<std::string>();
    r.prompt = j.at("prompt").get<std::string>();
    r.temperature = j.at("temperature").get<double>();
    r.top_p = j.at("top_p").get<double>();
    r.max_output_tokens = j.at("max_output_tokens").get<int>();
    return r;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed completion request: ") + e.what());
  }
}

CacheKey cache_key(const CompletionRequest& request) {
  return CacheKey{sha256_hex(canonical_request_json(request))};
}

std::string to_string(ProviderKind k) {
  switch (k) {
    case ProviderKind::http: return "http";
    case ProviderKind::replay: return "replay";
    case ProviderKind::synthetic: return "synthetic";
  }
  return "?";
}

ProviderKind parse_provider_kind(const std::string& s) {
  if (s == "http") return ProviderKind::http;
  if (s == "replay") return ProviderKind::replay;
  if (s == "synthetic") return ProviderKind::synthetic;
  throw ValidationError("unknown provider kind '" + s + "' (expected http, replay or synthetic)");
}

ResponseCache::ResponseCache(std::filesystem::path dir) : dir_(std::move(dir)) {}

std::filesystem::path ResponseCache::path_for(const CacheKey& key) const {
  return dir_ / (key.digest + ".json");
}

std::optional<std::string> ResponseCache::lookup(const CacheKey& key) const {
  const auto path = path_for(key);
  if (!std::filesystem::exists(path)) return std::nullopt;
  try {
    return json::parse(read_file(path)).at("response_text").get<std::string>();
  } catch (const json::exception& e) {
    throw Error("corrupt cache entry " + path.string() + ": " + e.what());
  }
}

void ResponseCache::store(const CompletionRequest& request, const std::string& response_text) {
  json entry = {{"request", request_json(request)},
                {"response_text", response_text},
                {"created_at", utc_timestamp()}};
  write_file_atomic(path_for(cache_key(request)), entry.dump(2) + "\n");
}

std::string ReplayProvider::complete(const CompletionRequest& request) {
  const auto key = cache_key(request);
  auto hit = cache_.lookup(key);
  if (!hit) throw ReplayMissError(key.digest);
  return *hit;
}

RateLimiter::RateLimiter(double requests_per_minute, double burst)
    : rate_per_sec_(requests_per_minute / 60.0),
      capacity_(burst),
      tokens_(burst),
      last_(std::chrono::steady_clock::now()) {
  if (!(requests_per_minute > 0.0)) throw ValidationError("rate limit must be positive");
  if (!(burst >= 1.0)) throw ValidationError("rate limiter burst must be at least 1");
}

void RateLimiter::acquire() {
  // Holding the lock while sleeping serializes admission.
  std::lock_guard lock(mu_);
  for (;;) {
    const auto now = std::chrono::steady_clock::now();
    const std::chrono::duration<double> dt = now - last_;
    tokens_ = std::min(capacity_, tokens_ + dt.count() * rate_per_sec_);
    last_ = now;
    if (tokens_ >= 1.0) {
      tokens_ -= 1.0;
      return;
    }
    const double wait_s = (1.0 - tokens_) / rate_per_sec_;
    std::this_thread::sleep_for(std::chrono::duration<double>(wait_s));
  }
}

Gateway::Gateway(std::unique_ptr<Provider> provider, GatewayOptions options)
    : provider_(std::move(provider)), options_(std::move(options)), jitter_rng_(options_.jitter_seed) {
  if (!provider_) throw ValidationError("gateway needs a provider");
  if (options_.retry.max_attempts < 1) throw ValidationError("retry max_attempts must be at least 1");
  if (options_.cache_dir) cache_.emplace(*options_.cache_dir);
  if (provider_->is_remote()) limiter_.emplace(options_.requests_per_minute, options_.burst);
}

std::chrono::milliseconds Gateway::backoff_delay(int attempt) {
  double ms = static_cast<double>(options_.retry.base_delay.count()) * std::pow(2.0, attempt - 1);
  if (options_.retry.jitter) {
    std::lock_guard lock(rng_mu_);
    ms *= std::uniform_real_distribution<double>(0.5, 1.5)(jitter_rng_);
  }
  return std::chrono::milliseconds(static_cast<std::int64_t>(ms));
}

CompletionResponse Gateway::complete(const CompletionRequest& request) {
  request.validate();
  const auto start = std::chrono::steady_clock::now();
  auto elapsed = [&] {
    return std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start);
  };

  if (cache_) {
    if (auto hit = cache_->lookup(cache_key(request))) {
      ++cache_hits_;
      return CompletionResponse{std::move(*hit), provider_->kind(), true, elapsed()};
    }
  }

  std::string text;
  for (int attempt = 1;; ++attempt) {
    if (limiter_) limiter_->acquire();
    ++upstream_calls_;
    try {
      text = provider_->complete(request);
      break;
    } catch (const TransientError& e) {
      if (attempt >= options_.retry.max_attempts)
        throw UpstreamError("upstream failed after " + std::to_string(attempt) + " attempt(s): " + e.what());
      ++retries_;
      const auto delay = backoff_delay(attempt);
      if (options_.sleeper)
        options_.sleeper(delay);
      else
        std::this_thread::sleep_for(delay);
    }
  }

  if (cache_ && provider_->kind() != ProviderKind::replay) cache_->store(request, text);
  return CompletionResponse{std::move(text), provider_->kind(), false, elapsed()};
}

GatewayStats Gateway::stats() const {
  return GatewayStats{upstream_calls_.load(), cache_hits_.load(), retries_.load()};
}

}  // namespace consensus_dx
