#include "aifp/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>
#include <variant>

namespace aifp {

namespace {

using Ref = std::variant<double*, int*, bool*, std::uint64_t*>;

struct Entry {
  const char* key;
  std::function<Ref(RunConfig&)> bind;
};

const std::vector<Entry>& entries() {
  static const std::vector<Entry> table = {
      {"seed", [](RunConfig& c) -> Ref { return &c.seed; }},
      {"reps", [](RunConfig& c) -> Ref { return &c.reps; }},
      {"delay", [](RunConfig& c) -> Ref { return &c.agent.delay; }},
      {"dt", [](RunConfig& c) -> Ref { return &c.agent.dt; }},
      {"timeout", [](RunConfig& c) -> Ref { return &c.agent.timeout; }},
      {"damping", [](RunConfig& c) -> Ref { return &c.agent.system.damping; }},
      {"stiffness", [](RunConfig& c) -> Ref { return &c.agent.system.stiffness; }},
      {"click_threshold", [](RunConfig& c) -> Ref { return &c.agent.system.click_threshold; }},
      {"noise.position", [](RunConfig& c) -> Ref { return &c.agent.noise.position_std; }},
      {"noise.displacement", [](RunConfig& c) -> Ref { return &c.agent.noise.displacement_std; }},
      {"task.canvas", [](RunConfig& c) -> Ref { return &c.task.canvas_px; }},
      {"task.start", [](RunConfig& c) -> Ref { return &c.task.start_px; }},
      {"task.scale", [](RunConfig& c) -> Ref { return &c.task.scale; }},
      {"planner.horizon", [](RunConfig& c) -> Ref { return &c.agent.planner.horizon; }},
      {"planner.plans", [](RunConfig& c) -> Ref { return &c.agent.planner.plans; }},
      {"planner.accel_min", [](RunConfig& c) -> Ref { return &c.agent.planner.bounds.lower(0); }},
      {"planner.accel_max", [](RunConfig& c) -> Ref { return &c.agent.planner.bounds.upper(0); }},
      {"planner.force_min", [](RunConfig& c) -> Ref { return &c.agent.planner.bounds.lower(1); }},
      {"planner.force_max", [](RunConfig& c) -> Ref { return &c.agent.planner.bounds.upper(1); }},
      {"planner.pv_state_samples",
       [](RunConfig& c) -> Ref { return &c.agent.planner.pv_state_samples; }},
      {"planner.pv_obs_samples", [](RunConfig& c) -> Ref { return &c.agent.planner.pv_obs_samples; }},
      {"planner.info_gain", [](RunConfig& c) -> Ref { return &c.agent.planner.info_gain; }},
      {"planner.ig_state_samples",
       [](RunConfig& c) -> Ref { return &c.agent.planner.ig_state_samples; }},
      {"planner.ig_obs_samples", [](RunConfig& c) -> Ref { return &c.agent.planner.ig_obs_samples; }},
      {"vi.steps", [](RunConfig& c) -> Ref { return &c.agent.vi.steps; }},
      {"vi.samples", [](RunConfig& c) -> Ref { return &c.agent.vi.samples; }},
      {"vi.learning_rate", [](RunConfig& c) -> Ref { return &c.agent.vi.learning_rate; }},
      {"vi.reference_std", [](RunConfig& c) -> Ref { return &c.agent.vi.reference_std; }},
      {"ukf.alpha", [](RunConfig& c) -> Ref { return &c.agent.ukf.alpha; }},
      {"ukf.beta", [](RunConfig& c) -> Ref { return &c.agent.ukf.beta; }},
      {"ukf.kappa", [](RunConfig& c) -> Ref { return &c.agent.ukf.kappa; }},
      {"prior.position_std", [](RunConfig& c) -> Ref { return &c.agent.priors.state_stds(0); }},
      {"prior.velocity_std", [](RunConfig& c) -> Ref { return &c.agent.priors.state_stds(1); }},
      {"prior.previous_displacement_std",
       [](RunConfig& c) -> Ref { return &c.agent.priors.state_stds(2); }},
      {"prior.displacement_std", [](RunConfig& c) -> Ref { return &c.agent.priors.state_stds(3); }},
      {"prior.damping_std", [](RunConfig& c) -> Ref { return &c.agent.priors.param_stds(0); }},
      {"prior.stiffness_std", [](RunConfig& c) -> Ref { return &c.agent.priors.param_stds(1); }},
      {"prior.target_std", [](RunConfig& c) -> Ref { return &c.agent.priors.param_stds(2); }},
      {"prior.width_std", [](RunConfig& c) -> Ref { return &c.agent.priors.param_stds(3); }},
      {"prior.click_threshold_std",
       [](RunConfig& c) -> Ref { return &c.agent.priors.param_stds(4); }},
      {"prior.target_mean", [](RunConfig& c) -> Ref { return &c.agent.priors.target_mean; }},
      {"prior.width_mean", [](RunConfig& c) -> Ref { return &c.agent.priors.width_mean; }},
      {"prior.revealed_std", [](RunConfig& c) -> Ref { return &c.agent.priors.revealed_std; }},
      {"prior.noise_log_variance",
       [](RunConfig& c) -> Ref { return &c.agent.priors.noise_log_variance; }},
      {"preference.position_offset",
       [](RunConfig& c) -> Ref { return &c.agent.preference.position_offset; }},
      {"preference.hit_mean", [](RunConfig& c) -> Ref { return &c.agent.preference.hit_mean; }},
      {"preference.misclick_mean",
       [](RunConfig& c) -> Ref { return &c.agent.preference.misclick_mean; }},
      {"preference.position_std", [](RunConfig& c) -> Ref { return &c.agent.preference.stds(0); }},
      {"preference.hit_std", [](RunConfig& c) -> Ref { return &c.agent.preference.stds(1); }},
      {"preference.misclick_std", [](RunConfig& c) -> Ref { return &c.agent.preference.stds(2); }},
  };
  return table;
}

const Entry& find_entry(const std::string& key) {
  const std::string canonical = RunConfig::canonical_key(key);
  for (const Entry& e : entries())
    if (canonical == e.key) return e;
  throw ConfigError("unknown config key '" + key + "'");
}

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

double parse_double(const std::string& key, const std::string& text) {
  double v = 0.0;
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end || !std::isfinite(v))
    throw ConfigError("bad number for '" + key + "': '" + text + "'");
  return v;
}

template <typename Int>
Int parse_integer(const std::string& key, const std::string& text) {
  Int v = 0;
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end)
    throw ConfigError("bad integer for '" + key + "': '" + text + "'");
  return v;
}

bool parse_bool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "1") return true;
  if (text == "false" || text == "0") return false;
  throw ConfigError("bad boolean for '" + key + "': '" + text + "'");
}

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

}  // namespace

ConfigError::ConfigError(const std::string& msg, int line)
    : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + msg : msg),
      line_(line) {}

void RunConfig::validate() const {
  try {
    agent.validate();
    TaskSpec t = task;
    t.target_px = t.start_px;
    t.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (reps < 1) throw ConfigError("reps must be >= 1");
}

std::string RunConfig::canonical_key(const std::string& key) {
  if (key == "d") return "damping";
  if (key == "k") return "stiffness";
  if (key == "N" || key == "horizon") return "planner.horizon";
  if (key == "K" || key == "plans") return "planner.plans";
  if (key == "tau") return "delay";
  if (key == "misclick_std") return "preference.misclick_std";
  return key;
}

std::vector<std::string> RunConfig::keys() {
  std::vector<std::string> out;
  for (const Entry& e : entries()) out.emplace_back(e.key);
  return out;
}

void RunConfig::set(const std::string& key, const std::string& value) {
  const Entry& e = find_entry(key);
  const std::string v = trim(value);
  std::visit(
      [&](auto* p) {
        using T = std::remove_pointer_t<decltype(p)>;
        if constexpr (std::is_same_v<T, double>) {
          *p = parse_double(key, v);
        } else if constexpr (std::is_same_v<T, bool>) {
          *p = parse_bool(key, v);
        } else {
          *p = parse_integer<T>(key, v);
        }
      },
      e.bind(*this));
}

void RunConfig::set(const std::string& key, double value) {
  const Entry& e = find_entry(key);
  std::visit(
      [&](auto* p) {
        using T = std::remove_pointer_t<decltype(p)>;
        if constexpr (std::is_same_v<T, double>) {
          *p = value;
        } else if constexpr (std::is_same_v<T, bool>) {
          *p = value != 0.0;
        } else {
          if (value != std::round(value) || value < 0.0)
            throw ConfigError("'" + key + "' needs a non-negative integer");
          *p = static_cast<T>(value);
        }
      },
      e.bind(*this));
}

std::string RunConfig::get(const std::string& key) const {
  const Entry& e = find_entry(key);
  return std::visit(
      [](auto* p) -> std::string {
        using T = std::remove_pointer_t<decltype(p)>;
        if constexpr (std::is_same_v<T, double>) {
          return format_double(*p);
        } else if constexpr (std::is_same_v<T, bool>) {
          return *p ? "true" : "false";
        } else {
          return std::to_string(*p);
        }
      },
      e.bind(const_cast<RunConfig&>(*this)));
}

RunConfig parse_config(const std::string& text) {
  RunConfig cfg;
  std::istringstream in(text);
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("expected 'key = value'", number);
    const std::string key = trim(line.substr(0, eq));
    try {
      cfg.set(key, line.substr(eq + 1));
    } catch (const ConfigError& e) {
      throw ConfigError(e.what(), number);
    }
  }
  cfg.validate();
  return cfg;
}

RunConfig load_config(const std::string& path_or_preset) {
  if (path_or_preset.empty() || path_or_preset == "default") return RunConfig{};
  std::ifstream in(path_or_preset);
  if (!in) throw ConfigError("cannot open config '" + path_or_preset + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::string format_config(const RunConfig& cfg) {
  std::ostringstream out;
  for (const Entry& e : entries()) out << e.key << " = " << cfg.get(e.key) << '\n';
  return out.str();
}

}  // namespace aifp
