// Chat-completions client. The only translation unit that includes httplib.

#include <cstdlib>
#include <nlohmann/json.hpp>

#include "httplib.h"
#include "intentkit/backends.hpp"

namespace intentkit {

using nlohmann::json;
using Clock = std::chrono::steady_clock;

namespace {

struct Endpoint {
  std::string origin;  // scheme://host[:port]
  std::string path;    // base path without trailing slash
};

Endpoint split_endpoint(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw BackendError(BackendError::Kind::InvalidConfig, "endpoint_url needs a scheme: " + url);
  }
  const std::string scheme = url.substr(0, scheme_end);
  if (scheme != "http" && scheme != "https") {
    throw BackendError(BackendError::Kind::InvalidConfig, "unsupported scheme: " + scheme);
  }
  const auto path_start = url.find('/', scheme_end + 3);
  Endpoint e;
  e.origin = url.substr(0, path_start);
  e.path = path_start == std::string::npos ? "" : url.substr(path_start);
  while (!e.path.empty() && e.path.back() == '/') e.path.pop_back();
  return e;
}

bool is_timeout(httplib::Error err) {
  return err == httplib::Error::ConnectionTimeout || err == httplib::Error::Read;
}

}  // namespace

CompletionResult complete_http(const BackendConfig& config, std::string_view prompt) {
  const Endpoint ep = split_endpoint(config.endpoint_url);
  httplib::Client cli(ep.origin);
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(config.timeout);
  const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(config.timeout - secs);
  cli.set_connection_timeout(secs.count(), usecs.count());
  cli.set_read_timeout(secs.count(), usecs.count());
  cli.set_write_timeout(secs.count(), usecs.count());

  json body = {
      {"model", config.model_name},
      {"messages", json::array({{{"role", "user"}, {"content", std::string(prompt)}}})},
      {"temperature", config.temperature},
      {"max_tokens", config.max_tokens},
  };

  httplib::Request req;
  req.method = "POST";
  req.path = ep.path + "/chat/completions";
  req.body = body.dump(-1, ' ', false, json::error_handler_t::replace);
  req.set_header("Content-Type", "application/json");
  if (!config.api_key_env.empty()) {
    if (const char* key = std::getenv(config.api_key_env.c_str()); key && *key) {
      req.set_header("Authorization", std::string("Bearer ") + key);
    }
  }

  const auto start = Clock::now();
  std::optional<Clock::time_point> first_byte;
  req.response_handler = [&](const httplib::Response&) {
    first_byte = Clock::now();
    return true;
  };

  httplib::Response res;
  httplib::Error err = httplib::Error::Success;
  const bool ok = cli.send(req, res, err);
  const auto end = Clock::now();
  if (!ok) {
    if (is_timeout(err) && end - start >= config.timeout) {
      throw BackendError(BackendError::Kind::Timeout, "http request timed out: " + httplib::to_string(err));
    }
    throw BackendError(BackendError::Kind::TransportError, "http request failed: " + httplib::to_string(err));
  }
  if (res.status != 200) {
    throw BackendError(BackendError::Kind::TransportError, "http status " + std::to_string(res.status));
  }

  const json j = json::parse(res.body, nullptr, false);
  if (j.is_discarded() || !j.is_object()) {
    throw BackendError(BackendError::Kind::MalformedResponse, "response body is not a JSON object");
  }
  CompletionResult r;
  const json* content = nullptr;
  if (const auto ch = j.find("choices"); ch != j.end() && ch->is_array() && !ch->empty()) {
    const json& first = (*ch)[0];
    if (const auto msg = first.find("message"); msg != first.end() && msg->is_object()) {
      if (const auto c = msg->find("content"); c != msg->end() && c->is_string()) content = &*c;
    }
  }
  if (!content) {
    throw BackendError(BackendError::Kind::MalformedResponse, "missing choices[0].message.content");
  }
  r.text = content->get<std::string>();
  if (const auto usage = j.find("usage"); usage != j.end() && usage->is_object()) {
    auto read_count = [&](const char* key) -> std::optional<std::int64_t> {
      const auto it = usage->find(key);
      if (it == usage->end() || !it->is_number_integer()) return std::nullopt;
      const auto v = it->get<std::int64_t>();
      if (v < 0) return std::nullopt;
      return v;
    };
    r.prompt_tokens = read_count("prompt_tokens");
    r.completion_tokens = read_count("completion_tokens");
  }
  r.token_count_exact = r.completion_tokens.has_value();
  if (const auto t = j.find("timings"); t != j.end() && t->is_object()) {
    if (const auto ms = t->find("predicted_ms"); ms != t->end() && ms->is_number() && ms->get<double>() >= 0) {
      r.server_generation_time =
          std::chrono::nanoseconds(static_cast<std::int64_t>(ms->get<double>() * 1e6));
    }
  }
  r.total_latency = end - start;
  r.first_byte_latency = first_byte ? *first_byte - start : r.total_latency;
  if (r.first_byte_latency > r.total_latency) r.first_byte_latency = r.total_latency;
  return r;
}

}  // namespace intentkit
