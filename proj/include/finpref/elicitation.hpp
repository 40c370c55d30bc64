// SPDX-License-Identifier: Apache-2.0
//
// Survey sessions against pluggable answer backends. Every trial opens a
// fresh session; within a session the 14 items are asked in order as
// successive user turns of one transcript.
#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "finpref/survey.hpp"
#include "finpref/synthetic.hpp"
#include "finpref/trial.hpp"

namespace finpref {

struct EndpointConfig {
  std::string name;
  std::string base_url;  // scheme://host[:port]
  std::string path = "/v1/chat/completions";
  std::string model_id;
  std::string auth_env_var;  // empty: no Authorization header
  std::map<std::string, std::string> headers;
  double temperature = 0.7;
  double timeout_seconds = 60.0;
  int max_retries = 3;
  double retry_backoff_seconds = 1.0;
  double requests_per_minute = 60.0;  // 0 disables pacing
  std::optional<AgentParams> agent;   // used by the synthetic backend
};

// Throws Error(Config) on out-of-range fields.
void validate_endpoint(const EndpointConfig& endpoint);

struct RunPlan {
  std::vector<EndpointConfig> endpoints;
  int trials_per_model = 100;
  int parallelism = 4;
  std::uint64_t seed = 0;
  bool preamble_once = true;  // preamble on the first turn only (otherwise every turn)
};

void validate_plan(const RunPlan& plan);

struct ChatMessage {
  std::string role;
  std::string content;
};

struct ChatReply {
  std::string text;
  int retries = 0;
};

// One POST of {model, messages, temperature}; returns choices[0].message.content.
// Transient failures (connection errors, timeouts, 429, 5xx) are retried with
// exponential backoff; other statuses raise Error(Endpoint) immediately.
ChatReply send_chat(const EndpointConfig& endpoint, std::span<const ChatMessage> messages);

// Request body and reply extraction, exposed for tests.
std::string chat_request_body(const EndpointConfig& endpoint, std::span<const ChatMessage> messages);
std::string chat_reply_text(const std::string& body);

class Session {
 public:
  virtual ~Session() = default;
  // Asks one question; `prompt` is the fully rendered user turn.
  virtual ChatReply ask(const SurveyItem& item, const std::string& prompt) = 0;
};

class AnswerBackend {
 public:
  virtual ~AnswerBackend() = default;
  virtual std::string name() const = 0;
  virtual std::unique_ptr<Session> open_session(const EndpointConfig& endpoint, int trial_index) = 0;
  // Called once, before any session opens.
  virtual void check(const RunPlan&) {}
};

std::unique_ptr<AnswerBackend> http_backend();
// Answers from the endpoint's AgentParams (or all-neutral defaults), formatted
// as plain text. Deterministic in (agent seed, plan seed, trial, question).
std::unique_ptr<AnswerBackend> synthetic_backend(std::uint64_t plan_seed);

// Fixture: JSONL of TrialRecords, or {"responses": [{subject, trial_index,
// question_id, raw_response}, ...]}.
class ReplayFixture {
 public:
  static ReplayFixture load(const std::string& path);
  static ReplayFixture from_records(std::span<const TrialRecord> records);

  const std::string* find(const std::string& subject, int trial, int question) const;
  std::vector<std::string> subjects() const;
  int trial_count(const std::string& subject) const;
  std::size_t size() const { return responses_.size(); }

 private:
  std::map<std::tuple<std::string, int, int>, std::string> responses_;
};

std::unique_ptr<AnswerBackend> replay_backend(ReplayFixture fixture);
std::unique_ptr<AnswerBackend> replay_backend(const std::string& fixture_path);

// Receives the 14 records of each finished session, serialized by the runner.
using RecordSink = std::function<void(std::span<const TrialRecord>)>;

// Returns records in (endpoint, trial, question) order; size is always
// endpoints x trials x 14, with failures flagged rather than dropped.
std::vector<TrialRecord> run_survey(const RunPlan& plan, const SessionScript& script,
                                    AnswerBackend& backend, const RecordSink& sink = {});

// Re-parses raw responses in place; returns per-status counts.
struct ParseQuality {
  std::size_t total = 0;
  std::size_t usable = 0;
  std::size_t transport_failures = 0;
  std::map<std::string, std::size_t> by_status;                // ok / unparseable / ...
  std::map<std::string, std::map<int, std::size_t>> usable_by_subject;  // subject -> qid -> n
  double usable_fraction() const { return total ? static_cast<double>(usable) / total : 0.0; }
};

ParseQuality reparse_records(std::vector<TrialRecord>& records, const SessionScript& script);
std::string parse_quality_json(const ParseQuality& quality);

// Deterministic UUID (v4 layout) from a 64-bit key; random when key is absent.
std::string make_run_id(std::optional<std::uint64_t> key);
// ISO-8601 UTC with milliseconds. Pinned to SOURCE_DATE_EPOCH when set.
std::string utc_timestamp();

}  // namespace finpref
