// SPDX-License-Identifier: Apache-2.0
#include "finpref/profiles.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "finpref/econometrics.hpp"
#include "finpref/error.hpp"
#include "json.hpp"

namespace finpref {

using nlohmann::json;

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

bool is_binary_item(int q) { return q == 1 || q == 4; }

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Io, "cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}
}  // namespace

const char* to_string(SubjectKind k) noexcept {
  switch (k) {
    case SubjectKind::HumanCountry: return "human-country";
    case SubjectKind::Llm: return "llm";
    case SubjectKind::Synthetic: return "synthetic";
  }
  return "unknown";
}

SubjectKind subject_kind_from_string(const std::string& s) {
  if (s == "human-country") return SubjectKind::HumanCountry;
  if (s == "llm") return SubjectKind::Llm;
  if (s == "synthetic") return SubjectKind::Synthetic;
  fail(ErrorKind::Format, "unknown subject kind '" + s + "'");
}

const char* to_string(TrialStatus s) noexcept {
  switch (s) {
    case TrialStatus::Ok: return "ok";
    case TrialStatus::Failed: return "failed";
    case TrialStatus::Retried: return "retried";
  }
  return "unknown";
}

TrialStatus trial_status_from_string(const std::string& s) {
  if (s == "ok") return TrialStatus::Ok;
  if (s == "failed") return TrialStatus::Failed;
  if (s == "retried") return TrialStatus::Retried;
  fail(ErrorKind::Format, "unknown parse_status '" + s + "'");
}

std::string format_number(double v) {
  if (std::isnan(v)) return "";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

double median(std::vector<double> values) {
  if (values.empty()) fail(ErrorKind::EmptyInput, "median of an empty sample");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  if (n % 2 == 1) return values[n / 2];
  return 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

namespace {

double lower_median(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  return values[(values.size() - 1) / 2];
}

}  // namespace

ResponseProfile median_aggregate(std::span<const TrialRecord> records) {
  if (records.empty()) fail(ErrorKind::EmptyInput, "no trial records to aggregate");
  ResponseProfile p;
  p.subject_id = records.front().subject;
  p.kind = records.front().backend == "synthetic" ? SubjectKind::Synthetic : SubjectKind::Llm;

  std::array<std::vector<double>, kQuestionCount> samples;
  std::set<int> trials;
  for (const auto& r : records) {
    if (r.subject != p.subject_id)
      fail(ErrorKind::InvalidArgument, "median_aggregate given records of several subjects");
    if (r.question_id < 1 || r.question_id > kQuestionCount)
      fail(ErrorKind::Format, "question_id out of range in trial record");
    trials.insert(r.trial_index);
    if (r.parse_status == TrialStatus::Failed || !r.parsed) continue;
    double v = 0.0;
    if (const auto* c = std::get_if<Choice>(&*r.parsed)) {
      v = code_binary(r.question_id, c->value);
    } else {
      if (is_binary_item(r.question_id))
        fail(ErrorKind::KindMismatch, "amount answer recorded for letter item " +
                                          std::to_string(r.question_id));
      v = std::get<Amount>(*r.parsed).value;
    }
    samples[static_cast<std::size_t>(r.question_id - 1)].push_back(v);
  }
  p.n_trials = static_cast<int>(trials.size());
  for (int q = 1; q <= kQuestionCount; ++q) {
    auto& s = samples[static_cast<std::size_t>(q - 1)];
    if (s.empty()) {
      p.values[static_cast<std::size_t>(q - 1)] = kNaN;
      p.missing.insert(q);
      continue;
    }
    p.values[static_cast<std::size_t>(q - 1)] = is_binary_item(q) ? lower_median(s) : median(s);
  }
  return p;
}

std::vector<ResponseProfile> aggregate_by_subject(std::span<const TrialRecord> records) {
  std::vector<std::string> order;
  std::map<std::string, std::vector<TrialRecord>> groups;
  for (const auto& r : records) {
    auto [it, inserted] = groups.try_emplace(r.subject);
    if (inserted) order.push_back(r.subject);
    it->second.push_back(r);
  }
  std::vector<ResponseProfile> out;
  out.reserve(order.size());
  for (const auto& s : order) out.push_back(median_aggregate(groups.at(s)));
  return out;
}

// ---------------------------------------------------------------------------
// CSV

namespace {

const std::string kCsvHeader = "subject_id,Q1,Q2,Q3,Q4,Q5,Q6,Q7,Q8,Q9,Q10,Q11,Q12,Q13,Q14";

// Splits one CSV record, honoring double-quoted fields.
std::vector<std::string> split_csv_line(const std::string& line, const std::string& where) {
  std::vector<std::string> cells;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      cells.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (quoted) fail(ErrorKind::Format, where + ": unterminated quoted field");
  cells.push_back(std::move(cur));
  return cells;
}

std::string csv_quote(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::optional<double> parse_cell(const std::string& cell) {
  const std::string t = trim(cell);
  double v = 0.0;
  const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
  if (res.ec != std::errc{} || res.ptr != t.data() + t.size() || !std::isfinite(v))
    return std::nullopt;
  return v;
}

}  // namespace

std::vector<ResponseProfile> parse_profiles_csv(const std::string& text, const std::string& source) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) fail(ErrorKind::Format, source + ": missing header");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  if (line != kCsvHeader)
    fail(ErrorKind::Format, source + ": header must be exactly '" + kCsvHeader + "'");

  std::vector<ResponseProfile> out;
  std::set<std::string> seen;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    ++row;
    const std::string where = source + ": row " + std::to_string(row);
    const auto cells = split_csv_line(line, where);
    if (cells.size() != kQuestionCount + 1)
      fail(ErrorKind::Format, where + ": expected 15 cells, found " + std::to_string(cells.size()));
    ResponseProfile p;
    p.subject_id = trim(cells[0]);
    if (p.subject_id.empty()) fail(ErrorKind::Format, where + ": empty subject_id");
    if (!seen.insert(p.subject_id).second)
      fail(ErrorKind::Format, where + ": duplicate subject_id '" + p.subject_id + "'");
    for (int q = 1; q <= kQuestionCount; ++q) {
      const std::string& cell = cells[static_cast<std::size_t>(q)];
      const std::string col = where + ", Q" + std::to_string(q);
      if (trim(cell).empty()) {
        p.values[static_cast<std::size_t>(q - 1)] = kNaN;
        p.missing.insert(q);
        continue;
      }
      const auto v = parse_cell(cell);
      if (!v) fail(ErrorKind::Format, col + ": non-numeric cell '" + cell + "'");
      if (is_binary_item(q) && *v != 0.0 && *v != 1.0)
        fail(ErrorKind::Format, col + ": letter-choice item must be coded 0 or 1");
      if (*v < 0.0) fail(ErrorKind::Format, col + ": negative amount");
      p.values[static_cast<std::size_t>(q - 1)] = *v;
    }
    out.push_back(std::move(p));
  }
  return out;
}

std::vector<ResponseProfile> load_country_csv(const std::string& path) {
  return parse_profiles_csv(read_file(path), path);
}

std::string format_profiles_csv(std::span<const ResponseProfile> profiles) {
  std::string out = kCsvHeader + "\n";
  for (const auto& p : profiles) {
    out += csv_quote(p.subject_id);
    for (double v : p.values) {
      out += ',';
      out += format_number(v);
    }
    out += '\n';
  }
  return out;
}

void save_profiles(const std::string& path, std::span<const ResponseProfile> profiles) {
  {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorKind::Io, "cannot open '" + path + "' for writing");
    out << format_profiles_csv(profiles);
  }
  json meta = json::object();
  json subjects = json::array();
  for (const auto& p : profiles)
    subjects.push_back({{"subject_id", p.subject_id}, {"kind", to_string(p.kind)}, {"n_trials", p.n_trials}});
  meta["subjects"] = subjects;
  std::ofstream out(path + ".meta.json", std::ios::binary);
  if (!out) fail(ErrorKind::Io, "cannot open '" + path + ".meta.json' for writing");
  out << meta.dump(2) << '\n';
}

std::vector<ResponseProfile> load_profiles(const std::string& path) {
  auto profiles = load_country_csv(path);
  const std::string meta_path = path + ".meta.json";
  if (!std::filesystem::exists(meta_path)) return profiles;
  json meta;
  try {
    meta = json::parse(read_file(meta_path));
  } catch (const json::exception& e) {
    fail(ErrorKind::Format, meta_path + ": " + e.what());
  }
  std::map<std::string, std::pair<SubjectKind, int>> info;
  for (const auto& s : meta.value("subjects", json::array()))
    info[s.at("subject_id").get<std::string>()] = {
        subject_kind_from_string(s.at("kind").get<std::string>()), s.value("n_trials", 1)};
  for (auto& p : profiles) {
    if (auto it = info.find(p.subject_id); it != info.end()) {
      p.kind = it->second.first;
      p.n_trials = it->second.second;
    }
  }
  return profiles;
}

ProfileMatrix build_matrix(std::span<const ResponseProfile> profiles, bool impute_median) {
  ProfileMatrix m;
  std::array<double, kQuestionCount> column_median{};
  if (impute_median) {
    for (int q = 1; q <= kQuestionCount; ++q) {
      std::vector<double> observed;
      for (const auto& p : profiles)
        if (!p.missing.contains(q)) observed.push_back(p.value(q));
      if (observed.empty())
        fail(ErrorKind::Analysis, "cannot impute Q" + std::to_string(q) + ": no observed values");
      column_median[static_cast<std::size_t>(q - 1)] =
          is_binary_item(q) ? lower_median(observed) : median(observed);
    }
  }
  std::vector<std::array<double, kQuestionCount>> rows;
  for (const auto& p : profiles) {
    if (!p.missing.empty() && !impute_median) {
      m.excluded.push_back(p.subject_id);
      continue;
    }
    auto row = p.values;
    for (int q : p.missing) row[static_cast<std::size_t>(q - 1)] = column_median[static_cast<std::size_t>(q - 1)];
    rows.push_back(row);
    m.subjects.push_back(p.subject_id);
    m.kinds.push_back(p.kind);
  }
  m.matrix.resize(static_cast<Eigen::Index>(rows.size()), kQuestionCount);
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (int j = 0; j < kQuestionCount; ++j)
      m.matrix(static_cast<Eigen::Index>(i), j) = rows[i][static_cast<std::size_t>(j)];
  return m;
}

std::vector<QuestionStats> descriptive_stats(const ProfileMatrix& m) {
  const auto n = m.matrix.rows();
  if (n == 0) fail(ErrorKind::EmptyInput, "descriptive statistics need at least one subject");
  std::vector<QuestionStats> out;
  for (int j = 0; j < m.matrix.cols(); ++j) {
    QuestionStats s;
    s.question_id = j + 1;
    s.count = static_cast<std::size_t>(n);
    std::vector<double> col(static_cast<std::size_t>(n));
    double sum = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      col[static_cast<std::size_t>(i)] = m.matrix(i, j);
      sum += m.matrix(i, j);
    }
    s.mean = sum / static_cast<double>(n);
    double ss = 0.0;
    for (double v : col) ss += (v - s.mean) * (v - s.mean);
    if (n > 1) {
      s.sd = std::sqrt(ss / static_cast<double>(n - 1));
    } else {
      s.sd = 0.0;
      s.sd_defined = false;
    }
    s.min = *std::min_element(col.begin(), col.end());
    s.max = *std::max_element(col.begin(), col.end());
    s.median = median(col);
    out.push_back(s);
  }
  return out;
}

std::string format_stats_csv(std::span<const QuestionStats> stats) {
  std::string out = "statistic";
  for (const auto& s : stats) out += ",Q" + std::to_string(s.question_id);
  out += '\n';
  auto row = [&](const char* name, auto get) {
    out += name;
    for (const auto& s : stats) {
      out += ',';
      out += get(s);
    }
    out += '\n';
  };
  row("count", [](const QuestionStats& s) { return std::to_string(s.count); });
  row("mean", [](const QuestionStats& s) { return format_number(s.mean); });
  row("sd", [](const QuestionStats& s) { return format_number(s.sd); });
  row("min", [](const QuestionStats& s) { return format_number(s.min); });
  row("median", [](const QuestionStats& s) { return format_number(s.median); });
  row("max", [](const QuestionStats& s) { return format_number(s.max); });
  row("sd_defined", [](const QuestionStats& s) { return std::string(s.sd_defined ? "1" : "0"); });
  return out;
}

// ---------------------------------------------------------------------------
// JSONL trial log

namespace {

json answer_to_json(const std::optional<ParsedAnswer>& a) {
  if (!a) return nullptr;
  if (const auto* c = std::get_if<Choice>(&*a)) return {{"type", "choice"}, {"value", to_string(c->value)}};
  return {{"type", "amount"}, {"value", std::get<Amount>(*a).value}};
}

std::optional<ParsedAnswer> answer_from_json(const json& j) {
  if (j.is_null()) return std::nullopt;
  const std::string type = j.at("type").get<std::string>();
  if (type == "choice") {
    const std::string v = j.at("value").get<std::string>();
    if (v == "A") return Choice{Letter::A};
    if (v == "B") return Choice{Letter::B};
    fail(ErrorKind::Format, "choice value must be A or B");
  }
  if (type == "amount") return Amount{j.at("value").get<double>()};
  fail(ErrorKind::Format, "unknown parsed answer type '" + type + "'");
}

}  // namespace

std::string trial_to_json_line(const TrialRecord& r) {
  json j;
  j["run_id"] = r.run_id;
  j["subject"] = r.subject;
  j["backend"] = r.backend;
  j["trial_index"] = r.trial_index;
  j["question_id"] = r.question_id;
  j["prompt"] = r.prompt;
  j["raw_response"] = r.raw_response;
  j["parsed"] = answer_to_json(r.parsed);
  j["parse_status"] = to_string(r.parse_status);
  j["error"] = r.error;
  j["retries"] = r.retries;
  j["timestamp"] = r.timestamp;
  j["temperature"] = r.temperature;
  return j.dump(-1, ' ', false, json::error_handler_t::replace);
}

TrialRecord trial_from_json_line(const std::string& line) {
  const json j = json::parse(line);
  TrialRecord r;
  r.run_id = j.at("run_id").get<std::string>();
  r.subject = j.at("subject").get<std::string>();
  r.backend = j.value("backend", std::string{});
  r.trial_index = j.at("trial_index").get<int>();
  r.question_id = j.at("question_id").get<int>();
  if (r.question_id < 1 || r.question_id > kQuestionCount)
    fail(ErrorKind::Format, "question_id out of range");
  r.prompt = j.value("prompt", std::string{});
  r.raw_response = j.at("raw_response").get<std::string>();
  r.parsed = answer_from_json(j.value("parsed", json(nullptr)));
  r.parse_status = trial_status_from_string(j.at("parse_status").get<std::string>());
  r.error = j.value("error", std::string{});
  r.retries = j.value("retries", 0);
  r.timestamp = j.value("timestamp", std::string{});
  r.temperature = j.value("temperature", 0.0);
  return r;
}

namespace {

void write_lines(const std::string& path, std::span<const TrialRecord> records,
                 std::ios::openmode mode) {
  std::ofstream out(path, std::ios::binary | mode);
  if (!out) fail(ErrorKind::Io, "cannot open '" + path + "' for writing");
  for (const auto& r : records) out << trial_to_json_line(r) << '\n';
  out.flush();
  if (!out) fail(ErrorKind::Io, "write failed for '" + path + "'");
}

}  // namespace

void append_trials(const std::string& path, std::span<const TrialRecord> records) {
  write_lines(path, records, std::ios::app);
}

void write_trials(const std::string& path, std::span<const TrialRecord> records) {
  write_lines(path, records, std::ios::trunc);
}

std::vector<TrialRecord> load_trials(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Io, "cannot open '" + path + "'");
  std::vector<TrialRecord> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    try {
      out.push_back(trial_from_json_line(line));
    } catch (const json::exception& e) {
      fail(ErrorKind::Format, path + ": line " + std::to_string(line_no) + ": " + e.what());
    } catch (const Error& e) {
      fail(ErrorKind::Format, path + ": line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace finpref
