#include "aifp/trajectory_log.hpp"

#include <fstream>
#include <istream>
#include <ostream>

#include <json.hpp>

namespace aifp {

namespace {

using Json = nlohmann::ordered_json;

template <typename Derived>
Json to_array(const Eigen::MatrixBase<Derived>& m) {
  Json arr = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) arr.push_back(m(i, j));
  return arr;
}

Json task_json(const TaskSpec& t) {
  return Json{{"canvas_px", t.canvas_px},
              {"start_px", t.start_px},
              {"target_px", t.target_px},
              {"width_px", t.width_px},
              {"scale", t.scale}};
}

Json trial_json(const TrialRecord& r) {
  Json clicks = Json::array();
  for (const ClickRecord& c : r.clicks) {
    clicks.push_back(Json{{"step", c.step},
                          {"position", c.position},
                          {"position_px", to_pixels(r.task, c.position)},
                          {"hit", c.hit}});
  }
  return Json{{"type", "trial"},
              {"trial_id", r.trial_id},
              {"target_id", r.target_id},
              {"seed", r.seed},
              {"delay", r.delay},
              {"dt", r.dt},
              {"task", task_json(r.task)},
              {"initial_state", to_array(r.initial_state)},
              {"outcome", to_string(r.outcome)},
              {"misclicks", r.misclicks},
              {"vi_failures", r.vi_failures},
              {"clicks", clicks},
              {"steps", r.steps.size()}};
}

Json step_json(const TrialRecord& r, const StepRecord& s) {
  Json j{{"type", "step"},
         {"trial_id", r.trial_id},
         {"step", s.step},
         {"time", s.time},
         {"state", to_array(s.state)},
         {"position_px", to_pixels(r.task, s.state(state_index::position))},
         {"velocity_px", s.state(state_index::velocity) * r.task.scale},
         {"action", to_array(s.action)}};
  j["observation"] = s.observation ? to_array(*s.observation) : Json(nullptr);
  j["belief_mean"] = to_array(s.belief.mean);
  j["belief_cov"] = to_array(s.belief.cov);
  j["predicted_mean"] = to_array(s.predicted.mean);
  j["predicted_cov"] = to_array(s.predicted.cov);
  j["event"] = to_string(s.event);
  j["vi_diverged"] = s.vi_diverged;
  return j;
}

const Json& field(const Json& j, const char* key, int line) {
  const auto it = j.find(key);
  if (it == j.end()) throw LogError(std::string("missing field '") + key + "'", line);
  return *it;
}

template <typename T>
T get(const Json& j, const char* key, int line) {
  try {
    return field(j, key, line).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw LogError(std::string("bad value for '") + key + "'", line);
  }
}

template <int Rows, int Cols = 1>
Eigen::Matrix<double, Rows, Cols> get_matrix(const Json& j, const char* key, int line) {
  const Json& arr = field(j, key, line);
  if (!arr.is_array() || arr.size() != static_cast<std::size_t>(Rows * Cols))
    throw LogError(std::string("'") + key + "' needs " + std::to_string(Rows * Cols) + " numbers",
                   line);
  Eigen::Matrix<double, Rows, Cols> m;
  std::size_t k = 0;
  for (int r = 0; r < Rows; ++r) {
    for (int c = 0; c < Cols; ++c, ++k) {
      if (!arr[k].is_number()) throw LogError(std::string("non-numeric entry in '") + key + "'", line);
      m(r, c) = arr[k].get<double>();
    }
  }
  return m;
}

TaskSpec parse_task(const Json& j, int line) {
  const Json& t = field(j, "task", line);
  TaskSpec task;
  task.canvas_px = get<double>(t, "canvas_px", line);
  task.start_px = get<double>(t, "start_px", line);
  task.target_px = get<double>(t, "target_px", line);
  task.width_px = get<double>(t, "width_px", line);
  task.scale = get<double>(t, "scale", line);
  return task;
}

TrialRecord parse_trial(const Json& j, int line, std::size_t& expected_steps) {
  TrialRecord r;
  r.trial_id = get<int>(j, "trial_id", line);
  r.target_id = get<int>(j, "target_id", line);
  r.seed = get<std::uint64_t>(j, "seed", line);
  r.delay = get<int>(j, "delay", line);
  r.dt = get<double>(j, "dt", line);
  r.task = parse_task(j, line);
  r.initial_state = get_matrix<4>(j, "initial_state", line);
  try {
    r.outcome = parse_outcome(get<std::string>(j, "outcome", line));
  } catch (const std::invalid_argument& e) {
    throw LogError(e.what(), line);
  }
  r.misclicks = get<int>(j, "misclicks", line);
  r.vi_failures = get<int>(j, "vi_failures", line);
  const Json& clicks = field(j, "clicks", line);
  if (!clicks.is_array()) throw LogError("'clicks' must be an array", line);
  for (const Json& c : clicks) {
    r.clicks.push_back(
        {get<int>(c, "step", line), get<double>(c, "position", line), get<bool>(c, "hit", line)});
  }
  expected_steps = get<std::size_t>(j, "steps", line);
  return r;
}

StepRecord parse_step(const Json& j, int line) {
  StepRecord s;
  s.step = get<int>(j, "step", line);
  s.time = get<double>(j, "time", line);
  s.state = get_matrix<4>(j, "state", line);
  s.action = get_matrix<2>(j, "action", line);
  if (!field(j, "observation", line).is_null()) s.observation = get_matrix<5>(j, "observation", line);
  s.belief.mean = get_matrix<4>(j, "belief_mean", line);
  s.belief.cov = get_matrix<4, 4>(j, "belief_cov", line);
  s.predicted.mean = get_matrix<4>(j, "predicted_mean", line);
  s.predicted.cov = get_matrix<4, 4>(j, "predicted_cov", line);
  try {
    s.event = parse_click_event(get<std::string>(j, "event", line));
  } catch (const std::invalid_argument& e) {
    throw LogError(e.what(), line);
  }
  s.vi_diverged = get<bool>(j, "vi_diverged", line);
  return s;
}

LogHeader parse_header(const Json& j, int line) {
  LogHeader h;
  h.format = get<std::string>(j, "format", line);
  if (h.format != kTrajectoryFormat) throw LogError("not a trajectory log: '" + h.format + "'", line);
  const std::string version = get<std::string>(j, "version", line);
  const auto dot = version.find('.');
  try {
    if (dot == std::string::npos) throw std::invalid_argument("no dot");
    h.major = std::stoi(version.substr(0, dot));
    h.minor = std::stoi(version.substr(dot + 1));
  } catch (const std::exception&) {
    throw LogError("bad version '" + version + "'", line);
  }
  if (h.major > kLogMajor)
    throw LogError("log version " + version + " is newer than supported " +
                       std::to_string(kLogMajor) + "." + std::to_string(kLogMinor),
                   line);
  h.trials = get<int>(j, "trials", line);
  if (const auto it = j.find("config"); it != j.end()) {
    for (const auto& [k, v] : it->items()) {
      if (!v.is_string()) throw LogError("config values must be strings", line);
      h.config[k] = v.get<std::string>();
    }
  }
  return h;
}

}  // namespace

LogError::LogError(const std::string& msg, int line)
    : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + msg : msg),
      line_(line) {}

void write_log(std::ostream& out, const std::vector<TrialRecord>& trials,
               const std::map<std::string, std::string>& config) {
  Json header{{"format", kTrajectoryFormat},
              {"version", std::to_string(kLogMajor) + "." + std::to_string(kLogMinor)},
              {"trials", trials.size()}};
  Json cfg = Json::object();
  for (const auto& [k, v] : config) cfg[k] = v;
  header["config"] = cfg;
  out << header.dump() << '\n';
  for (const TrialRecord& r : trials) {
    out << trial_json(r).dump() << '\n';
    for (const StepRecord& s : r.steps) out << step_json(r, s).dump() << '\n';
  }
}

void write_log_file(const std::string& path, const std::vector<TrialRecord>& trials,
                    const std::map<std::string, std::string>& config) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw LogError("cannot write '" + path + "'");
  write_log(out, trials, config);
  if (!out) throw LogError("write failed for '" + path + "'");
}

TrajectoryLog read_log(std::istream& in) {
  TrajectoryLog log;
  std::string text;
  int line = 0;
  bool have_header = false;
  std::size_t expected_steps = 0;
  TrialRecord* current = nullptr;

  while (std::getline(in, text)) {
    ++line;
    if (text.empty()) continue;
    Json j;
    try {
      j = Json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
      throw LogError(std::string("malformed JSON: ") + e.what(), line);
    }
    if (!j.is_object()) throw LogError("expected a JSON object", line);
    if (!have_header) {
      log.header = parse_header(j, line);
      have_header = true;
      continue;
    }
    const std::string type = get<std::string>(j, "type", line);
    if (type == "trial") {
      if (current && current->steps.size() != expected_steps)
        throw LogError("trial " + std::to_string(current->trial_id) + " is missing step rows", line);
      log.trials.push_back(parse_trial(j, line, expected_steps));
      current = &log.trials.back();
    } else if (type == "step") {
      if (!current) throw LogError("step row before any trial", line);
      StepRecord s = parse_step(j, line);
      if (get<int>(j, "trial_id", line) != current->trial_id)
        throw LogError("step row belongs to another trial", line);
      const int previous = current->steps.empty() ? 0 : current->steps.back().step;
      if (s.step != previous + 1) throw LogError("step rows out of order", line);
      if (current->steps.size() >= expected_steps) throw LogError("more step rows than declared", line);
      current->steps.push_back(std::move(s));
    } else {
      throw LogError("unknown row type '" + type + "'", line);
    }
  }
  if (!have_header) throw LogError("empty log, no header");
  if (current && current->steps.size() != expected_steps)
    throw LogError("trial " + std::to_string(current->trial_id) + " is missing step rows", line);
  if (static_cast<int>(log.trials.size()) != log.header.trials)
    throw LogError("header declares " + std::to_string(log.header.trials) + " trials, found " +
                       std::to_string(log.trials.size()),
                   line);
  return log;
}

TrajectoryLog read_log_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LogError("cannot open '" + path + "'");
  return read_log(in);
}

}  // namespace aifp
