// SPDX-License-Identifier: Apache-2.0
#include "finpref/elicitation.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <exception>
#include <fstream>
#include <mutex>
#include <random>
#include <set>
#include <sstream>
#include <thread>

#include "finpref/error.hpp"
#include "finpref/parsing.hpp"
#include "finpref/profiles.hpp"
#include "json.hpp"

namespace finpref {

using nlohmann::json;

void validate_endpoint(const EndpointConfig& e) {
  if (e.name.empty()) fail(ErrorKind::Config, "endpoint name must not be empty");
  const std::string where = "endpoint " + e.name + ": ";
  if (!(e.temperature >= 0.0 && e.temperature <= 2.0))
    fail(ErrorKind::Config, where + "temperature must lie in [0, 2]");
  if (e.max_retries < 0) fail(ErrorKind::Config, where + "max_retries must be >= 0");
  if (!(e.timeout_seconds > 0.0)) fail(ErrorKind::Config, where + "timeout must be > 0");
  if (!(e.retry_backoff_seconds >= 0.0)) fail(ErrorKind::Config, where + "retry_backoff must be >= 0");
  if (!(e.requests_per_minute >= 0.0))
    fail(ErrorKind::Config, where + "requests_per_minute must be >= 0");
  if (e.agent) validate_agent(*e.agent);
}

void validate_plan(const RunPlan& plan) {
  if (plan.endpoints.empty()) fail(ErrorKind::Config, "run plan has no endpoints");
  if (plan.trials_per_model < 1) fail(ErrorKind::Config, "trials per model must be >= 1");
  if (plan.parallelism < 1) fail(ErrorKind::Config, "parallelism must be >= 1");
  std::set<std::string> names;
  for (const auto& e : plan.endpoints) {
    validate_endpoint(e);
    if (!names.insert(e.name).second) fail(ErrorKind::Config, "duplicate endpoint name '" + e.name + "'");
  }
}

// ---------------------------------------------------------------------------
// Synthetic backend

namespace {

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

class SyntheticSession final : public Session {
 public:
  SyntheticSession(AgentParams params, int trial) : params_(params), trial_(trial) {}
  ChatReply ask(const SurveyItem& item, const std::string&) override {
    return ChatReply{format_answer(agent_answer(params_, item, trial_)), 0};
  }

 private:
  AgentParams params_;
  int trial_;
};

class SyntheticBackend final : public AnswerBackend {
 public:
  explicit SyntheticBackend(std::uint64_t seed) : seed_(seed) {}
  std::string name() const override { return "synthetic"; }
  std::unique_ptr<Session> open_session(const EndpointConfig& endpoint, int trial) override {
    AgentParams p = endpoint.agent.value_or(AgentParams{});
    p.seed = stream_key(seed_, fnv1a(endpoint.name), p.seed);
    return std::make_unique<SyntheticSession>(p, trial);
  }

 private:
  std::uint64_t seed_;
};

}  // namespace

std::unique_ptr<AnswerBackend> synthetic_backend(std::uint64_t plan_seed) {
  return std::make_unique<SyntheticBackend>(plan_seed);
}

// ---------------------------------------------------------------------------
// Replay backend

ReplayFixture ReplayFixture::from_records(std::span<const TrialRecord> records) {
  ReplayFixture f;
  for (const auto& r : records) f.responses_[{r.subject, r.trial_index, r.question_id}] = r.raw_response;
  return f;
}

ReplayFixture ReplayFixture::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Io, "cannot open fixture '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  const std::string text = ss.str();

  json whole = json::parse(text, nullptr, false);
  if (!whole.is_discarded() && whole.is_object() && whole.contains("responses")) {
    ReplayFixture f;
    try {
      for (const auto& r : whole.at("responses"))
        f.responses_[{r.at("subject").get<std::string>(), r.at("trial_index").get<int>(),
                      r.at("question_id").get<int>()}] = r.at("raw_response").get<std::string>();
    } catch (const json::exception& e) {
      fail(ErrorKind::Format, path + ": " + e.what());
    }
    return f;
  }
  const auto records = load_trials(path);
  return from_records(records);
}

const std::string* ReplayFixture::find(const std::string& subject, int trial, int question) const {
  const auto it = responses_.find({subject, trial, question});
  return it == responses_.end() ? nullptr : &it->second;
}

std::vector<std::string> ReplayFixture::subjects() const {
  std::vector<std::string> out;
  for (const auto& [key, _] : responses_)
    if (out.empty() || out.back() != std::get<0>(key)) out.push_back(std::get<0>(key));
  return out;
}

int ReplayFixture::trial_count(const std::string& subject) const {
  int max_trial = -1;
  for (const auto& [key, _] : responses_)
    if (std::get<0>(key) == subject) max_trial = std::max(max_trial, std::get<1>(key));
  return max_trial + 1;
}

namespace {

class ReplaySession final : public Session {
 public:
  ReplaySession(const ReplayFixture& fixture, std::string subject, int trial)
      : fixture_(fixture), subject_(std::move(subject)), trial_(trial) {}
  ChatReply ask(const SurveyItem& item, const std::string&) override {
    const std::string* text = fixture_.find(subject_, trial_, item.id);
    if (!text)
      fail(ErrorKind::FixtureMiss, "fixture has no response for (subject=" + subject_ + ", trial=" +
                                       std::to_string(trial_) + ", question=" +
                                       std::to_string(item.id) + ")");
    return ChatReply{*text, 0};
  }

 private:
  const ReplayFixture& fixture_;
  std::string subject_;
  int trial_;
};

class ReplayBackend final : public AnswerBackend {
 public:
  explicit ReplayBackend(ReplayFixture f) : fixture_(std::move(f)) {}
  std::string name() const override { return "replay"; }
  std::unique_ptr<Session> open_session(const EndpointConfig& endpoint, int trial) override {
    return std::make_unique<ReplaySession>(fixture_, endpoint.name, trial);
  }

 private:
  ReplayFixture fixture_;
};

}  // namespace

std::unique_ptr<AnswerBackend> replay_backend(ReplayFixture fixture) {
  return std::make_unique<ReplayBackend>(std::move(fixture));
}

std::unique_ptr<AnswerBackend> replay_backend(const std::string& fixture_path) {
  return replay_backend(ReplayFixture::load(fixture_path));
}

// ---------------------------------------------------------------------------
// Ids and clocks

std::string make_run_id(std::optional<std::uint64_t> key) {
  std::uint64_t hi = 0, lo = 0;
  if (key) {
    hi = stream_key(*key, 0x52554E, 1);
    lo = stream_key(*key, 0x52554E, 2);
  } else {
    std::random_device rd;
    hi = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
    lo = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
  }
  hi = (hi & 0xFFFFFFFFFFFF0FFFULL) | 0x0000000000004000ULL;  // version 4
  lo = (lo & 0x3FFFFFFFFFFFFFFFULL) | 0x8000000000000000ULL;  // RFC 4122 variant
  char buf[40];
  std::snprintf(buf, sizeof buf, "%08llx-%04llx-%04llx-%04llx-%012llx",
                static_cast<unsigned long long>(hi >> 32),
                static_cast<unsigned long long>((hi >> 16) & 0xFFFF),
                static_cast<unsigned long long>(hi & 0xFFFF),
                static_cast<unsigned long long>(lo >> 48),
                static_cast<unsigned long long>(lo & 0xFFFFFFFFFFFFULL));
  return buf;
}

std::string utc_timestamp() {
  using namespace std::chrono;
  std::int64_t ms = 0;
  if (const char* pinned = std::getenv("SOURCE_DATE_EPOCH"); pinned && *pinned) {
    ms = std::strtoll(pinned, nullptr, 10) * 1000;
  } else {
    ms = duration_cast<milliseconds>(system_clock::now().time_since_epoch()).count();
  }
  const std::time_t secs = static_cast<std::time_t>(ms / 1000);
  std::tm tm{};
  gmtime_r(&secs, &tm);
  char buf[40];
  std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02d.%03dZ", tm.tm_year + 1900,
                tm.tm_mon + 1, tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec,
                static_cast<int>(ms % 1000));
  return buf;
}

// ---------------------------------------------------------------------------
// Runner

namespace {

void apply_parse(TrialRecord& r, const SurveyItem& item) {
  const ParseOutcome outcome = parse_for_item(item, r.raw_response);
  if (outcome.ok()) {
    r.parsed = validate_answer(item, *outcome.value);
    r.parse_status = r.retries > 0 ? TrialStatus::Retried : TrialStatus::Ok;
    r.error.clear();
  } else {
    r.parsed.reset();
    r.parse_status = TrialStatus::Failed;
    r.error = std::string("parse: ") + to_string(outcome.status) + ": " + outcome.detail;
  }
}

bool is_transport_failure(const TrialRecord& r) {
  return r.parse_status == TrialStatus::Failed && r.error.rfind("transport:", 0) == 0;
}

}  // namespace

std::vector<TrialRecord> run_survey(const RunPlan& plan, const SessionScript& script,
                                    AnswerBackend& backend, const RecordSink& sink) {
  validate_plan(plan);
  validate_script(script);
  backend.check(plan);

  const bool deterministic = backend.name() != "http";
  std::uint64_t id_key = plan.seed;
  for (const auto& e : plan.endpoints) id_key = stream_key(id_key, fnv1a(e.name), 7);
  const std::string run_id =
      make_run_id(deterministic ? std::optional<std::uint64_t>(id_key) : std::nullopt);

  const std::size_t n_items = script.items.size();
  const std::size_t trials = static_cast<std::size_t>(plan.trials_per_model);
  const std::size_t jobs = plan.endpoints.size() * trials;
  std::vector<TrialRecord> results(jobs * n_items);

  std::atomic<std::size_t> next_job{0};
  std::mutex sink_mutex;
  std::mutex error_mutex;
  std::exception_ptr fatal;
  std::atomic<bool> abort{false};

  auto run_job = [&](std::size_t job) {
    const EndpointConfig& endpoint = plan.endpoints[job / trials];
    const int trial = static_cast<int>(job % trials);
    std::span<TrialRecord> slot(results.data() + job * n_items, n_items);
    std::unique_ptr<Session> session = backend.open_session(endpoint, trial);
    std::string failure;
    for (std::size_t q = 0; q < n_items; ++q) {
      const SurveyItem& item = script.items[q];
      TrialRecord& r = slot[q];
      r.run_id = run_id;
      r.subject = endpoint.name;
      r.backend = backend.name();
      r.trial_index = trial;
      r.question_id = item.id;
      r.temperature = endpoint.temperature;
      r.prompt = render_prompt(script, item, !plan.preamble_once || q == 0);
      if (!failure.empty()) {
        r.parse_status = TrialStatus::Failed;
        r.error = "transport: session aborted: " + failure;
        r.timestamp = utc_timestamp();
        continue;
      }
      try {
        ChatReply reply = session->ask(item, r.prompt);
        r.timestamp = utc_timestamp();
        r.raw_response = std::move(reply.text);
        r.retries = reply.retries;
        apply_parse(r, item);
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::Transport && e.kind() != ErrorKind::Endpoint &&
            e.kind() != ErrorKind::Protocol)
          throw;
        failure = e.what();
        r.timestamp = utc_timestamp();
        r.parse_status = TrialStatus::Failed;
        r.error = std::string("transport: ") + e.what();
      }
    }
    if (sink) {
      std::lock_guard lock(sink_mutex);
      sink(slot);
    }
  };

  auto worker = [&] {
    for (;;) {
      if (abort.load()) return;
      const std::size_t job = next_job.fetch_add(1);
      if (job >= jobs) return;
      try {
        run_job(job);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!fatal) fatal = std::current_exception();
        abort = true;
        return;
      }
    }
  };

  const std::size_t n_workers = std::min<std::size_t>(static_cast<std::size_t>(plan.parallelism), jobs);
  if (n_workers <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t i = 0; i < n_workers; ++i) pool.emplace_back(worker);
  }
  if (fatal) std::rethrow_exception(fatal);
  return results;
}

ParseQuality reparse_records(std::vector<TrialRecord>& records, const SessionScript& script) {
  ParseQuality q;
  for (auto& r : records) {
    ++q.total;
    q.usable_by_subject[r.subject];
    if (is_transport_failure(r)) {
      ++q.transport_failures;
      ++q.by_status["transport_failed"];
      continue;
    }
    const SurveyItem& item = script.item(r.question_id);
    const ParseOutcome outcome = parse_for_item(item, r.raw_response);
    ++q.by_status[to_string(outcome.status)];
    apply_parse(r, item);
    if (r.parse_status != TrialStatus::Failed) {
      ++q.usable;
      ++q.usable_by_subject[r.subject][r.question_id];
    }
  }
  return q;
}

std::string parse_quality_json(const ParseQuality& q) {
  json j;
  j["total"] = q.total;
  j["usable"] = q.usable;
  j["usable_fraction"] = q.usable_fraction();
  j["transport_failures"] = q.transport_failures;
  j["by_status"] = q.by_status;
  json subjects = json::object();
  for (const auto& [subject, per_q] : q.usable_by_subject) {
    json row = json::object();
    for (int id = 1; id <= kQuestionCount; ++id) {
      const auto it = per_q.find(id);
      row["Q" + std::to_string(id)] = it == per_q.end() ? 0 : it->second;
    }
    subjects[subject] = row;
  }
  j["usable_by_subject"] = subjects;
  return j.dump(2) + "\n";
}

}  // namespace finpref
