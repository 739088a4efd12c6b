#include <cstdlib>

#include "consensus_dx/errors.hpp"
#include "consensus_dx/llm_gateway.hpp"
#include "httplib.h"
#include "json.hpp"

namespace consensus_dx {

using nlohmann::json;

namespace {

struct Endpoint {
  std::string origin;  // scheme://host[:port]
  std::string path_prefix;
};

Endpoint split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw ValidationError("base URL needs a scheme: " + url);
  const auto path_at = url.find('/', scheme_end + 3);
  Endpoint e;
  e.origin = url.substr(0, path_at);
  e.path_prefix = path_at == std::string::npos ? "" : url.substr(path_at);
  while (!e.path_prefix.empty() && e.path_prefix.back() == '/') e.path_prefix.pop_back();
  return e;
}

}  // namespace

HttpProvider::HttpProvider(HttpProviderOptions options) : options_(std::move(options)) {
  const char* key = std::getenv(options_.api_key_env.c_str());
  if (key == nullptr || *key == '\0')
    throw AuthError("missing credential: environment variable " + options_.api_key_env + " is not set");
  api_key_ = key;
  split_url(options_.base_url);
}

std::string HttpProvider::request_body(const CompletionRequest& request) {
  json body = {{"model", request.model_name},
               {"messages", json::array({{{"role", "user"}, {"content", request.prompt}}})},
               {"temperature", request.temperature},
               {"top_p", request.top_p},
               {"max_tokens", request.max_output_tokens}};
  return body.dump();
}

std::string HttpProvider::parse_response_body(const std::string& body) {
  try {
    const auto j = json::parse(body);
    const auto& content = j.at("choices").at(0).at("message").at("content");
    if (!content.is_string()) throw UpstreamError("completion content is not a string");
    return content.get<std::string>();
  } catch (const json::exception& e) {
    throw UpstreamError(std::string("unexpected completion response: ") + e.what());
  }
}

std::string HttpProvider::complete(const CompletionRequest& request) {
  const auto endpoint = split_url(options_.base_url);
  httplib::Client client(endpoint.origin);
  const auto timeout = static_cast<time_t>(options_.timeout.count());
  client.set_connection_timeout(timeout, 0);
  client.set_read_timeout(timeout, 0);
  client.set_bearer_token_auth(api_key_);

  auto res = client.Post(endpoint.path_prefix + "/chat/completions", request_body(request), "application/json");
  if (!res) throw TransientError("HTTP request failed: " + httplib::to_string(res.error()));
  const int status = res->status;
  if (status == 401 || status == 403) throw AuthError("endpoint rejected credential (HTTP " + std::to_string(status) + ")");
  if (status == 429 || status >= 500) throw TransientError("HTTP " + std::to_string(status));
  if (status != 200) throw UpstreamError("HTTP " + std::to_string(status) + ": " + res->body);
  return parse_response_body(res->body);
}

}  // namespace consensus_dx
