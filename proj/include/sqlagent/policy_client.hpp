#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <string>
#include <vector>

#include "json.hpp"
#include "sqlagent/errors.hpp"

namespace sqlagent {

enum class Role { system, user, assistant, environment };

struct Message {
  Role role = Role::user;
  std::string text;

  bool operator==(const Message&) const = default;
};

using Transcript = std::vector<Message>;

struct SamplingParams {
  double temperature = 0.6;
  double top_p = 0.95;
  int top_k = -1;  // -1 leaves the backend default
  std::optional<std::int64_t> seed;

  bool greedy() const { return temperature == 0.0; }
};

struct CompletionRequest {
  Transcript transcript;
  SamplingParams sampling;
  int max_new_tokens = 1024;
  bool want_first_token_distribution = false;
};

enum class FinishReason { stop, length, error };

using TokenDistribution = std::map<std::string, double>;

struct CompletionResponse {
  std::string text;
  std::optional<TokenDistribution> first_token_distribution;
  FinishReason finish_reason = FinishReason::stop;

  bool operator==(const CompletionResponse&) const = default;
};

/// A text-generation backend. Implementations are safe to call from several
/// workers at once.
class PolicyClient {
 public:
  virtual ~PolicyClient() = default;
  /// Throws PolicyUnavailable on transport failure, BackendContract on a
  /// malformed reply.
  virtual CompletionResponse complete(const CompletionRequest& request) = 0;
};

std::string_view to_string(Role role);
Role role_from_string(std::string_view s);
std::string_view to_string(FinishReason reason);
FinishReason finish_reason_from_string(std::string_view s);

/// Hex SHA-256 over the role-tagged transcript. Keys recorded exchanges.
std::string transcript_digest(const Transcript& transcript);

// ---------------------------------------------------------------------------
// Scripted mock

struct ScriptEntry {
  std::string digest;
  std::optional<std::int64_t> seed;  // nullopt matches any seed
  CompletionResponse response;
};

using Script = std::vector<ScriptEntry>;

/// Replays recorded exchanges keyed by (transcript digest, seed). An exact
/// seed match wins over a seedless entry. Unmatched requests throw
/// BackendContract.
std::unique_ptr<PolicyClient> mock_from_script(Script script);

Script load_script(const std::filesystem::path& path);
void save_script(const Script& script, const std::filesystem::path& path);
nlohmann::json script_to_json(const Script& script);
Script script_from_json(const nlohmann::json& j);

/// Backend driven by a callable; the usual way tests express scripted
/// behaviour that depends on prompt content.
class FunctionPolicy final : public PolicyClient {
 public:
  using Responder = std::function<CompletionResponse(const CompletionRequest&)>;
  explicit FunctionPolicy(Responder responder) : responder_(std::move(responder)) {}
  CompletionResponse complete(const CompletionRequest& request) override { return responder_(request); }

 private:
  Responder responder_;
};

/// Forwards to another client and records every exchange as a script entry.
class RecordingPolicy final : public PolicyClient {
 public:
  explicit RecordingPolicy(PolicyClient& inner) : inner_(inner) {}
  CompletionResponse complete(const CompletionRequest& request) override;
  /// Recorded entries sorted by (digest, seed), duplicates removed.
  Script script() const;

 private:
  PolicyClient& inner_;
  mutable std::mutex mu_;
  std::map<std::pair<std::string, std::optional<std::int64_t>>, CompletionResponse> entries_;
};

// ---------------------------------------------------------------------------
// Remote HTTP backend

struct RemotePolicyConfig {
  /// Full endpoint URL, e.g. http://127.0.0.1:8000/v1/generate
  std::string url;
  std::string api_key;
  int max_attempts = 4;
  std::chrono::milliseconds initial_backoff{200};
  std::chrono::milliseconds request_timeout{120'000};
  int top_logprobs = 20;
  int max_in_flight = 8;
};

/// JSON-over-HTTP client. Request body:
///   {messages:[{role,content}], temperature, top_p, top_k, seed, max_tokens,
///    logprobs:{top_n}}
/// Response body:
///   {text, finish_reason, top_logprobs_first_token}
/// where top_logprobs_first_token is either {token: logprob} or
/// [{token, logprob}]. The environment role is sent as "user".
class RemotePolicy final : public PolicyClient {
 public:
  explicit RemotePolicy(RemotePolicyConfig config);
  CompletionResponse complete(const CompletionRequest& request) override;

  nlohmann::json request_body(const CompletionRequest& request) const;
  /// Throws BackendContract on a body that does not match the wire format.
  static CompletionResponse parse_response(const nlohmann::json& body, bool want_distribution);

 private:
  RemotePolicyConfig config_;
  std::string host_;  // scheme://host:port
  std::string path_;
  std::counting_semaphore<1024> in_flight_;
};

/// Builds a backend from a backend string: "mock:<script.json>" or an http URL.
std::unique_ptr<PolicyClient> make_policy(const std::string& backend, const RemotePolicyConfig& defaults = {});

void to_json(nlohmann::json& j, const CompletionResponse& r);
void from_json(const nlohmann::json& j, CompletionResponse& r);

}  // namespace sqlagent
