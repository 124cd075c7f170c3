#include "sqlagent/policy_client.hpp"

#include <openssl/evp.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <thread>

#include "httplib.h"

namespace sqlagent {

std::string_view to_string(Role role) {
  switch (role) {
    case Role::system: return "system";
    case Role::user: return "user";
    case Role::assistant: return "assistant";
    case Role::environment: return "environment";
  }
  return "user";
}

Role role_from_string(std::string_view s) {
  if (s == "system") return Role::system;
  if (s == "user") return Role::user;
  if (s == "assistant") return Role::assistant;
  if (s == "environment") return Role::environment;
  throw BackendContract("unknown role: " + std::string(s));
}

std::string_view to_string(FinishReason reason) {
  switch (reason) {
    case FinishReason::stop: return "stop";
    case FinishReason::length: return "length";
    case FinishReason::error: return "error";
  }
  return "error";
}

FinishReason finish_reason_from_string(std::string_view s) {
  if (s == "stop" || s == "eos" || s == "end_turn") return FinishReason::stop;
  if (s == "length" || s == "max_tokens") return FinishReason::length;
  return FinishReason::error;
}

std::string transcript_digest(const Transcript& transcript) {
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
  EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr);
  for (const auto& m : transcript) {
    const auto role = to_string(m.role);
    const std::string len = std::to_string(m.text.size());
    EVP_DigestUpdate(ctx.get(), role.data(), role.size());
    EVP_DigestUpdate(ctx.get(), ":", 1);
    EVP_DigestUpdate(ctx.get(), len.data(), len.size());
    EVP_DigestUpdate(ctx.get(), ":", 1);
    EVP_DigestUpdate(ctx.get(), m.text.data(), m.text.size());
  }
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int n = 0;
  EVP_DigestFinal_ex(ctx.get(), md, &n);
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(n * 2);
  for (unsigned int i = 0; i < n; ++i) {
    out.push_back(kHex[md[i] >> 4]);
    out.push_back(kHex[md[i] & 0xF]);
  }
  return out;
}

void to_json(nlohmann::json& j, const CompletionResponse& r) {
  j = nlohmann::json{{"text", r.text}, {"finish_reason", to_string(r.finish_reason)}};
  j["first_token_distribution"] =
      r.first_token_distribution ? nlohmann::json(*r.first_token_distribution) : nlohmann::json(nullptr);
}

void from_json(const nlohmann::json& j, CompletionResponse& r) {
  r.text = j.at("text").get<std::string>();
  r.finish_reason = finish_reason_from_string(j.value("finish_reason", std::string("stop")));
  if (j.contains("first_token_distribution") && !j.at("first_token_distribution").is_null())
    r.first_token_distribution = j.at("first_token_distribution").get<TokenDistribution>();
  else
    r.first_token_distribution.reset();
}

// ---------------------------------------------------------------------------

namespace {

class ScriptedPolicy final : public PolicyClient {
 public:
  explicit ScriptedPolicy(Script script) {
    for (auto& e : script) entries_[{std::move(e.digest), e.seed}] = std::move(e.response);
  }

  CompletionResponse complete(const CompletionRequest& request) override {
    const auto digest = transcript_digest(request.transcript);
    if (auto it = entries_.find({digest, request.sampling.seed}); it != entries_.end()) return it->second;
    if (auto it = entries_.find({digest, std::nullopt}); it != entries_.end()) return it->second;
    std::string seed = request.sampling.seed ? std::to_string(*request.sampling.seed) : "none";
    throw BackendContract("mock script has no entry for digest " + digest + " seed " + seed);
  }

 private:
  std::map<std::pair<std::string, std::optional<std::int64_t>>, CompletionResponse> entries_;
};

}  // namespace

std::unique_ptr<PolicyClient> mock_from_script(Script script) {
  return std::make_unique<ScriptedPolicy>(std::move(script));
}

nlohmann::json script_to_json(const Script& script) {
  auto entries = nlohmann::json::array();
  for (const auto& e : script) {
    entries.push_back({{"digest", e.digest},
                       {"seed", e.seed ? nlohmann::json(*e.seed) : nlohmann::json(nullptr)},
                       {"response", e.response}});
  }
  return nlohmann::json{{"entries", entries}};
}

Script script_from_json(const nlohmann::json& j) {
  Script out;
  try {
    for (const auto& e : j.at("entries")) {
      ScriptEntry entry;
      entry.digest = e.at("digest").get<std::string>();
      if (e.contains("seed") && !e.at("seed").is_null()) entry.seed = e.at("seed").get<std::int64_t>();
      entry.response = e.at("response").get<CompletionResponse>();
      out.push_back(std::move(entry));
    }
  } catch (const nlohmann::json::exception& ex) {
    throw BackendContract(std::string("malformed mock script: ") + ex.what());
  }
  return out;
}

Script load_script(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read mock script " + path.string());
  try {
    return script_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw BackendContract("mock script " + path.string() + " is not JSON: " + e.what());
  }
}

void save_script(const Script& script, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write mock script " + path.string());
  out << script_to_json(script).dump(1) << '\n';
}

CompletionResponse RecordingPolicy::complete(const CompletionRequest& request) {
  auto response = inner_.complete(request);
  std::lock_guard lock(mu_);
  entries_[{transcript_digest(request.transcript), request.sampling.seed}] = response;
  return response;
}

Script RecordingPolicy::script() const {
  std::lock_guard lock(mu_);
  Script out;
  out.reserve(entries_.size());
  for (const auto& [key, response] : entries_) out.push_back({key.first, key.second, response});
  return out;
}

// ---------------------------------------------------------------------------
// Remote

RemotePolicy::RemotePolicy(RemotePolicyConfig config)
    : config_(std::move(config)), in_flight_(std::clamp(config_.max_in_flight, 1, 1024)) {
  const auto scheme_end = config_.url.find("://");
  if (scheme_end == std::string::npos) throw ConfigError("backend URL needs a scheme: " + config_.url);
  const auto path_start = config_.url.find('/', scheme_end + 3);
  host_ = config_.url.substr(0, path_start);
  path_ = path_start == std::string::npos ? "/" : config_.url.substr(path_start);
  if (config_.url.rfind("http://", 0) != 0)
    throw ConfigError("only plain http backends are supported: " + config_.url);
  if (config_.max_attempts < 1) throw ConfigError("max_attempts must be at least 1");
}

nlohmann::json RemotePolicy::request_body(const CompletionRequest& request) const {
  auto messages = nlohmann::json::array();
  for (const auto& m : request.transcript) {
    const auto role = m.role == Role::environment ? Role::user : m.role;
    messages.push_back({{"role", to_string(role)}, {"content", m.text}});
  }
  nlohmann::json body{{"messages", messages},
                      {"temperature", request.sampling.temperature},
                      {"top_p", request.sampling.top_p},
                      {"max_tokens", request.max_new_tokens}};
  if (request.sampling.top_k > 0) body["top_k"] = request.sampling.top_k;
  if (request.sampling.seed) body["seed"] = *request.sampling.seed;
  if (request.want_first_token_distribution) body["logprobs"] = {{"top_n", config_.top_logprobs}};
  return body;
}

CompletionResponse RemotePolicy::parse_response(const nlohmann::json& body, bool want_distribution) {
  if (!body.is_object() || !body.contains("text") || !body.at("text").is_string())
    throw BackendContract("response lacks a string 'text' field");
  CompletionResponse r;
  r.text = body.at("text").get<std::string>();
  r.finish_reason = body.contains("finish_reason") && body.at("finish_reason").is_string()
                        ? finish_reason_from_string(body.at("finish_reason").get<std::string>())
                        : FinishReason::stop;
  if (!want_distribution || !body.contains("top_logprobs_first_token") ||
      body.at("top_logprobs_first_token").is_null())
    return r;

  TokenDistribution dist;
  auto add = [&](const std::string& token, const nlohmann::json& lp) {
    if (!lp.is_number()) throw BackendContract("non-numeric logprob for token '" + token + "'");
    const double p = std::exp(lp.get<double>());
    if (!(p >= 0.0 && p <= 1.0 + 1e-9)) throw BackendContract("logprob out of range for '" + token + "'");
    dist[token] += std::min(p, 1.0);
  };
  const auto& tl = body.at("top_logprobs_first_token");
  if (tl.is_object()) {
    for (const auto& [token, lp] : tl.items()) add(token, lp);
  } else if (tl.is_array()) {
    for (const auto& item : tl) {
      if (!item.is_object() || !item.contains("token") || !item.contains("logprob"))
        throw BackendContract("top_logprobs_first_token entries need token and logprob");
      add(item.at("token").get<std::string>(), item.at("logprob"));
    }
  } else {
    throw BackendContract("top_logprobs_first_token must be an object or array");
  }
  r.first_token_distribution = std::move(dist);
  return r;
}

CompletionResponse RemotePolicy::complete(const CompletionRequest& request) {
  if (request.transcript.empty()) throw BackendContract("empty transcript");
  const std::string body = request_body(request).dump();
  spdlog::debug("policy request to {}{}: {}", host_, path_, body);

  in_flight_.acquire();
  struct Release {
    std::counting_semaphore<1024>& s;
    ~Release() { s.release(); }
  } release{in_flight_};

  httplib::Headers headers;
  if (!config_.api_key.empty()) headers.emplace("Authorization", "Bearer " + config_.api_key);

  auto backoff = config_.initial_backoff;
  std::string last_error;
  for (int attempt = 1; attempt <= config_.max_attempts; ++attempt) {
    httplib::Client client(host_);
    client.set_connection_timeout(config_.request_timeout);
    client.set_read_timeout(config_.request_timeout);
    client.set_write_timeout(config_.request_timeout);
    auto res = client.Post(path_, headers, body, "application/json");
    if (res) {
      if (res->status >= 200 && res->status < 300) {
        spdlog::debug("policy response: {}", res->body);
        nlohmann::json parsed;
        try {
          parsed = nlohmann::json::parse(res->body);
        } catch (const nlohmann::json::parse_error& e) {
          throw BackendContract(std::string("response is not JSON: ") + e.what());
        }
        return parse_response(parsed, request.want_first_token_distribution);
      }
      if (res->status != 429 && res->status < 500)
        throw BackendContract("backend rejected request with HTTP " + std::to_string(res->status));
      last_error = "HTTP " + std::to_string(res->status);
    } else {
      last_error = httplib::to_string(res.error());
    }
    spdlog::warn("policy attempt {}/{} failed: {}", attempt, config_.max_attempts, last_error);
    if (attempt < config_.max_attempts) {
      std::this_thread::sleep_for(backoff);
      backoff *= 2;
    }
  }
  throw PolicyUnavailable("backend " + config_.url + " unavailable after " +
                          std::to_string(config_.max_attempts) + " attempts: " + last_error);
}

std::unique_ptr<PolicyClient> make_policy(const std::string& backend, const RemotePolicyConfig& defaults) {
  if (backend.rfind("mock:", 0) == 0) return mock_from_script(load_script(backend.substr(5)));
  if (backend.rfind("http://", 0) == 0 || backend.rfind("https://", 0) == 0) {
    auto cfg = defaults;
    cfg.url = backend;
    return std::make_unique<RemotePolicy>(cfg);
  }
  throw ConfigError("backend must be mock:<script> or an http URL, got '" + backend + "'");
}

}  // namespace sqlagent
