#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "aifp/dynamics.hpp"
#include "aifp/experiment.hpp"

namespace aifp {

inline constexpr const char* kRecorderFormat = "aifp-recorder";
inline constexpr const char* kHumanFormat = "aifp-human";
inline constexpr int kRecorderMajor = 1;

struct HumanSample {
  double t_s = 0.0;  // since the start click
  double x_px = 0.0;

  bool operator==(const HumanSample&) const = default;
};

struct HumanClick {
  double t_s = 0.0;
  double x_px = 0.0;
  bool correct = false;

  bool operator==(const HumanClick&) const = default;
};

struct HumanTrialLog {
  std::string participant;
  int trial_index = 0;  // 0-based, order within the session
  int target_id = 0;
  TaskSpec task;
  std::vector<HumanSample> samples;  // begins with the start click at t = 0
  std::vector<HumanClick> clicks;    // misclicks, then the correct click if any

  std::optional<double> movement_time() const;
  int misclicks() const;
  // Linear interpolation onto 0, dt, 2dt, ... plus the last sample time.
  std::vector<HumanSample> resampled(double dt) const;

  bool operator==(const HumanTrialLog&) const = default;
};

struct RejectedRow {
  int index = 0;  // position in the export's event array
  std::string reason;
};

struct IngestResult {
  std::string participant;
  std::vector<HumanTrialLog> trials;
  std::vector<RejectedRow> rejected;
};

// Reads a recorder export. Invalid events are reported in `rejected`; a
// malformed document throws LogError.
IngestResult ingest_human(std::istream& in);
IngestResult ingest_human_file(const std::string& path);

Movement movement(const HumanTrialLog& trial);
std::vector<Movement> movements(const std::vector<HumanTrialLog>& trials);

// First sample after the start click where the acceleration threshold is crossed.
std::optional<double> reaction_time(const HumanTrialLog& trial, double threshold = 10.0);

// Canonical human log: JSON Lines, header then one line per trial.
void write_human_log(std::ostream& out, const std::vector<HumanTrialLog>& trials);
std::vector<HumanTrialLog> read_human_log(std::istream& in);

}  // namespace aifp
