#pragma once

#include <iosfwd>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "aifp/agent.hpp"

namespace aifp {

inline constexpr const char* kTrajectoryFormat = "aifp-trajectory";
inline constexpr int kLogMajor = 1;
inline constexpr int kLogMinor = 0;

class LogError : public std::runtime_error {
 public:
  LogError(const std::string& msg, int line = 0);

  int line() const { return line_; }

 private:
  int line_;
};

struct LogHeader {
  std::string format = kTrajectoryFormat;
  int major = kLogMajor;
  int minor = kLogMinor;
  int trials = 0;
  std::map<std::string, std::string> config;  // key -> value, as in a config file
};

struct TrajectoryLog {
  LogHeader header;
  std::vector<TrialRecord> trials;
};

// JSON Lines: a header line, then per trial one "trial" line followed by its
// "step" lines. Doubles are written in shortest round-trip form.
void write_log(std::ostream& out, const std::vector<TrialRecord>& trials,
               const std::map<std::string, std::string>& config = {});
void write_log_file(const std::string& path, const std::vector<TrialRecord>& trials,
                    const std::map<std::string, std::string>& config = {});

// Throws LogError with the 1-based line number on malformed input or a newer
// major version.
TrajectoryLog read_log(std::istream& in);
TrajectoryLog read_log_file(const std::string& path);

}  // namespace aifp
