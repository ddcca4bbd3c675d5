#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "aifp/agent.hpp"
#include "aifp/config.hpp"

namespace aifp {

struct TargetSpec {
  int id = 0;
  double position_px = 0.0;
  double width_px = 0.0;
  double id_bits = 0.0;

  TaskSpec task(const TaskSpec& base = {}) const;
};

// The 18 pointing targets: distances {225, 537.5, 850} px on both sides of
// the start at 900 px, widths {20, 60, 100} px. Ids follow the published
// table: per width, left targets from near to far, then right targets.
std::vector<TargetSpec> target_set();
std::optional<TargetSpec> find_target(int id);

// Shannon form log2(1 + D / W).
double index_of_difficulty(double distance_px, double width_px);
double index_of_difficulty(const TaskSpec& task);

// Seconds from target appearance to the correct click; empty on timeout.
std::optional<double> movement_time(const TrialRecord& trial);

// What the analyses need from one trial, agent or human.
struct Movement {
  int trial_id = 0;
  int target_id = 0;
  TaskSpec task;
  std::optional<double> mt_s;         // empty unless the trial ended in a hit
  std::optional<double> endpoint_px;  // cursor at the correct click
  int misclicks = 0;
};

Movement movement(const TrialRecord& trial);
std::vector<Movement> movements(const std::vector<TrialRecord>& trials);

// Keeps values within k sample SDs of the mean (single pass).
std::vector<bool> within_sd(const std::vector<double>& values, double k = 3.0);
// Drops hits whose movement time is an outlier. Timeouts pass through.
std::vector<Movement> outlier_filter(const std::vector<Movement>& trials, double k = 3.0);
std::vector<TrialRecord> outlier_filter(const std::vector<TrialRecord>& trials, double k = 3.0);

struct FittsFit {
  double a = 0.0;
  double b = 0.0;
  double r2 = 0.0;
  int n = 0;
};

enum class FitMode { per_trial, per_target_means };

FittsFit fitts_fit(const std::vector<double>& id_bits, const std::vector<double>& mt_s);
// Hits only.
FittsFit fitts_fit(const std::vector<Movement>& trials, FitMode mode = FitMode::per_trial);
FittsFit fitts_fit(const std::vector<TrialRecord>& trials, FitMode mode = FitMode::per_trial);

struct TargetEndpoints {
  int target_id = 0;
  double position_px = 0.0;
  double width_px = 0.0;
  int n = 0;
  double mean_px = 0.0;
  double std_px = 0.0;  // population std
};

struct EndpointStats {
  std::vector<TargetEndpoints> targets;  // ordered by target id
  std::map<double, double> width_std;    // width px -> mean of per-target stds
};

// Endpoint = cursor position at the correct click, in pixels.
EndpointStats endpoint_stats(const std::vector<Movement>& trials);
EndpointStats endpoint_stats(const std::vector<TrialRecord>& trials);

// First sample time at which the central-difference acceleration exceeds the
// threshold (px/s^2). Timestamps in seconds, strictly increasing.
std::optional<double> reaction_time(const std::vector<double>& t_s, const std::vector<double>& x_px,
                                    double threshold = 10.0);

double peak_speed_px(const TrialRecord& trial);

struct TrialJob {
  int trial_id = 0;
  int target_id = 0;
  TaskSpec task;
  std::uint64_t seed = 0;
};

// Target-major grid; trial i runs with seed derive_seed(master, i).
std::vector<TrialJob> block_jobs(const std::vector<TargetSpec>& targets, int reps,
                                 std::uint64_t master_seed, const TaskSpec& base = {});

using ProgressFn = std::function<void(int done, int total)>;

// Runs jobs on `jobs` threads; results are in job order regardless of thread count.
std::vector<TrialRecord> run_jobs(const std::vector<TrialJob>& jobs, const AgentConfig& cfg,
                                  int threads = 1, const ProgressFn& progress = {});

std::vector<TrialRecord> run_block(const RunConfig& cfg, const std::vector<TargetSpec>& targets,
                                   int threads = 1, const ProgressFn& progress = {});

struct SweepSummary {
  double value = 0.0;
  int trials = 0;
  int hits = 0;
  int misclicks = 0;
  double median_mt = 0.0;  // NaN without hits
  double mean_mt = 0.0;
  double mean_peak_speed_px = 0.0;
};

struct SweepResult {
  std::string parameter;  // canonical key
  std::vector<double> values;
  std::vector<std::vector<TrialRecord>> trials;  // one block per value
  std::vector<SweepSummary> summaries;
};

SweepSummary summarize(const std::vector<TrialRecord>& trials, double value = 0.0);

// One block per value with only `parameter` changed. Every value reuses the
// same trial seeds.
SweepResult sweep(const RunConfig& base, const std::string& parameter,
                  const std::vector<double>& values, const std::vector<TargetSpec>& targets,
                  int threads = 1, const ProgressFn& progress = {});

}  // namespace aifp
