#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "aifp/agent.hpp"
#include "aifp/dynamics.hpp"

namespace aifp {

class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& msg, int line = 0);

  int line() const { return line_; }

 private:
  int line_;
};

struct RunConfig {
  AgentConfig agent;
  TaskSpec task;  // canvas, start and scale; target and width come from the target set
  std::uint64_t seed = 0;
  int reps = 10;

  void validate() const;

  // Scalar access by key, e.g. "damping", "planner.horizon", "preference.misclick_std".
  void set(const std::string& key, const std::string& value);
  void set(const std::string& key, double value);
  std::string get(const std::string& key) const;

  static std::vector<std::string> keys();
  // Short names accepted by sweeps: d, k, N, K, tau, misclick_std.
  static std::string canonical_key(const std::string& key);
};

// "key = value" lines, '#' starts a comment. Unknown keys and bad values
// throw ConfigError with the 1-based line number.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path_or_preset);
std::string format_config(const RunConfig& cfg);

}  // namespace aifp
