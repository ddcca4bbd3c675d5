#include "aifp/human.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <iterator>
#include <ostream>

#include <json.hpp>

#include "aifp/trajectory_log.hpp"

namespace aifp {

namespace {

using Json = nlohmann::ordered_json;

int parse_major(const std::string& version) {
  const auto dot = version.find('.');
  try {
    return std::stoi(version.substr(0, dot));
  } catch (const std::exception&) {
    throw LogError("bad version '" + version + "'");
  }
}

double number_or(const Json& j, const char* key, double fallback) {
  const auto it = j.find(key);
  if (it == j.end()) return fallback;
  if (!it->is_number()) throw LogError(std::string("session field '") + key + "' must be a number");
  return it->get<double>();
}

}  // namespace

std::optional<double> HumanTrialLog::movement_time() const {
  for (const HumanClick& c : clicks)
    if (c.correct) return c.t_s;
  return std::nullopt;
}

int HumanTrialLog::misclicks() const {
  return static_cast<int>(
      std::count_if(clicks.begin(), clicks.end(), [](const HumanClick& c) { return !c.correct; }));
}

std::vector<HumanSample> HumanTrialLog::resampled(double dt) const {
  if (!(dt > 0.0)) throw std::invalid_argument("dt must be > 0");
  std::vector<HumanSample> out;
  if (samples.empty()) return out;
  const double t0 = samples.front().t_s;
  const double t_end = samples.back().t_s;
  std::size_t i = 0;
  for (long k = 0;; ++k) {
    const double t = t0 + static_cast<double>(k) * dt;
    if (t >= t_end) break;
    while (i + 1 < samples.size() && samples[i + 1].t_s <= t) ++i;
    const HumanSample& a = samples[i];
    const HumanSample& b = samples[std::min(i + 1, samples.size() - 1)];
    const double x = t == a.t_s || b.t_s == a.t_s
                         ? a.x_px
                         : a.x_px + (b.x_px - a.x_px) * (t - a.t_s) / (b.t_s - a.t_s);
    out.push_back({t, x});
  }
  out.push_back(samples.back());
  return out;
}

IngestResult ingest_human(std::istream& in) {
  Json doc;
  try {
    doc = Json::parse(std::string(std::istreambuf_iterator<char>(in), {}));
  } catch (const nlohmann::json::parse_error& e) {
    throw LogError(std::string("malformed recorder export: ") + e.what());
  }
  if (!doc.is_object() || doc.value("format", "") != kRecorderFormat)
    throw LogError("not a recorder export");
  if (!doc.contains("version") || !doc["version"].is_string())
    throw LogError("recorder export has no version");
  if (parse_major(doc["version"].get<std::string>()) > kRecorderMajor)
    throw LogError("recorder export version " + doc["version"].get<std::string>() +
                   " is newer than supported");

  const Json session = doc.value("session", Json::object());
  if (!session.is_object()) throw LogError("'session' must be an object");
  TaskSpec base;
  base.canvas_px = number_or(session, "canvas_width", base.canvas_px);
  base.start_px = number_or(session, "start_position", base.start_px);

  IngestResult result;
  if (const auto it = session.find("participant"); it != session.end() && it->is_string())
    result.participant = it->get<std::string>();

  const auto events_it = doc.find("events");
  if (events_it == doc.end() || !events_it->is_array())
    throw LogError("recorder export has no 'events' array");

  enum class Phase { idle, active, done, skipping };
  Phase phase = Phase::idle;
  HumanTrialLog current;
  double start_ms = 0.0;
  std::optional<double> last_ms;

  auto close_trial = [&] {
    if (phase == Phase::active || phase == Phase::done) result.trials.push_back(current);
  };

  int index = -1;
  for (const Json& e : *events_it) {
    ++index;
    auto reject = [&](const std::string& reason) { result.rejected.push_back({index, reason}); };
    if (!e.is_object() || !e.contains("type") || !e["type"].is_string()) {
      reject("event without a type");
      continue;
    }
    const std::string type = e["type"].get<std::string>();
    if (type != "start" && type != "move" && type != "click") {
      reject("unknown event type '" + type + "'");
      continue;
    }
    if (!e.contains("t_ms") || !e["t_ms"].is_number() || !e.contains("x") || !e["x"].is_number()) {
      reject("missing t_ms or x");
      continue;
    }
    const double t_ms = e["t_ms"].get<double>();
    const double x = e["x"].get<double>();
    if (!std::isfinite(t_ms) || (last_ms && t_ms <= *last_ms)) {
      reject("timestamp not increasing");
      continue;
    }
    if (!std::isfinite(x) || x < 0.0 || x > base.canvas_px) {
      reject("position outside canvas");
      continue;
    }
    last_ms = t_ms;

    if (type == "start") {
      close_trial();
      const auto target = e.contains("target_id") && e["target_id"].is_number_integer()
                              ? find_target(e["target_id"].get<int>())
                              : std::nullopt;
      if (!target) {
        reject("unknown target id");
        phase = Phase::skipping;
        continue;
      }
      current = HumanTrialLog{};
      current.participant = result.participant;
      current.trial_index = static_cast<int>(result.trials.size());
      current.target_id = target->id;
      current.task = target->task(base);
      current.samples.push_back({0.0, x});
      start_ms = t_ms;
      phase = Phase::active;
      continue;
    }
    if (phase == Phase::skipping) {
      reject("event belongs to a rejected trial");
      continue;
    }
    // Movement outside a trial is the return to the start marker.
    if (phase != Phase::active) continue;

    const double t_s = (t_ms - start_ms) / 1000.0;
    if (type == "move") {
      current.samples.push_back({t_s, x});
      continue;
    }
    const bool correct = std::abs(x - current.task.target_px) <= 0.5 * current.task.width_px;
    if (e.contains("correct") && (!e["correct"].is_boolean() || e["correct"].get<bool>() != correct)) {
      reject("click correctness disagrees with the target geometry");
      continue;
    }
    current.samples.push_back({t_s, x});
    current.clicks.push_back({t_s, x, correct});
    if (correct) phase = Phase::done;
  }
  close_trial();
  return result;
}

IngestResult ingest_human_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LogError("cannot open '" + path + "'");
  return ingest_human(in);
}

Movement movement(const HumanTrialLog& trial) {
  Movement m;
  m.trial_id = trial.trial_index;
  m.target_id = trial.target_id;
  m.task = trial.task;
  m.misclicks = trial.misclicks();
  for (const HumanClick& c : trial.clicks) {
    if (c.correct) {
      m.mt_s = c.t_s;
      m.endpoint_px = c.x_px;
      break;
    }
  }
  return m;
}

std::vector<Movement> movements(const std::vector<HumanTrialLog>& trials) {
  std::vector<Movement> out;
  out.reserve(trials.size());
  for (const HumanTrialLog& t : trials) out.push_back(movement(t));
  return out;
}

std::optional<double> reaction_time(const HumanTrialLog& trial, double threshold) {
  std::vector<double> t, x;
  for (const HumanSample& s : trial.samples) {
    t.push_back(s.t_s);
    x.push_back(s.x_px);
  }
  return reaction_time(t, x, threshold);
}

void write_human_log(std::ostream& out, const std::vector<HumanTrialLog>& trials) {
  out << Json{{"format", kHumanFormat}, {"version", "1.0"}, {"trials", trials.size()}}.dump() << '\n';
  for (const HumanTrialLog& h : trials) {
    Json samples = Json::array();
    for (const HumanSample& s : h.samples) samples.push_back(Json::array({s.t_s, s.x_px}));
    Json clicks = Json::array();
    for (const HumanClick& c : h.clicks)
      clicks.push_back(Json{{"t_s", c.t_s}, {"x_px", c.x_px}, {"correct", c.correct}});
    Json row{{"type", "human_trial"},
             {"participant", h.participant},
             {"trial_index", h.trial_index},
             {"target_id", h.target_id},
             {"task",
              {{"canvas_px", h.task.canvas_px},
               {"start_px", h.task.start_px},
               {"target_px", h.task.target_px},
               {"width_px", h.task.width_px},
               {"scale", h.task.scale}}},
             {"samples", samples},
             {"clicks", clicks}};
    out << row.dump() << '\n';
  }
}

std::vector<HumanTrialLog> read_human_log(std::istream& in) {
  std::vector<HumanTrialLog> out;
  std::string text;
  int line = 0;
  bool have_header = false;
  std::size_t declared = 0;
  while (std::getline(in, text)) {
    ++line;
    if (text.empty()) continue;
    try {
      const Json j = Json::parse(text);
      if (!have_header) {
        if (j.value("format", "") != kHumanFormat) throw LogError("not a human log", line);
        if (parse_major(j.at("version").get<std::string>()) > kRecorderMajor)
          throw LogError("human log version is newer than supported", line);
        declared = j.at("trials").get<std::size_t>();
        have_header = true;
        continue;
      }
      HumanTrialLog h;
      h.participant = j.at("participant").get<std::string>();
      h.trial_index = j.at("trial_index").get<int>();
      h.target_id = j.at("target_id").get<int>();
      const Json& t = j.at("task");
      h.task = TaskSpec{t.at("canvas_px").get<double>(), t.at("start_px").get<double>(),
                        t.at("target_px").get<double>(), t.at("width_px").get<double>(),
                        t.at("scale").get<double>()};
      for (const Json& s : j.at("samples")) h.samples.push_back({s.at(0).get<double>(), s.at(1).get<double>()});
      for (const Json& c : j.at("clicks"))
        h.clicks.push_back({c.at("t_s").get<double>(), c.at("x_px").get<double>(), c.at("correct").get<bool>()});
      out.push_back(std::move(h));
    } catch (const nlohmann::json::exception& e) {
      throw LogError(std::string("malformed human log row: ") + e.what(), line);
    }
  }
  if (!have_header) throw LogError("empty human log, no header");
  if (out.size() != declared) throw LogError("human log trial count does not match its header", line);
  return out;
}

}  // namespace aifp
