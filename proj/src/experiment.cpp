#include "aifp/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <numeric>
#include <stdexcept>
#include <thread>

namespace aifp {

namespace {

double mean_of(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double median_of(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

TaskSpec TargetSpec::task(const TaskSpec& base) const {
  TaskSpec t = base;
  t.target_px = position_px;
  t.width_px = width_px;
  return t;
}

std::vector<TargetSpec> target_set() {
  // Evenly spaced distances. The published positions (363, 1438) and IDs
  // are rounded from 537.5; target 6 sits at 1750, not 175.
  const double distances[] = {225.0, 537.5, 850.0};
  const double widths[] = {20, 60, 100};
  constexpr double start = 900.0;
  std::vector<TargetSpec> out;
  int id = 1;
  for (double w : widths) {
    for (double side : {-1.0, 1.0}) {
      for (double d : distances) out.push_back({id++, start + side * d, w, index_of_difficulty(d, w)});
    }
  }
  return out;
}

std::optional<TargetSpec> find_target(int id) {
  for (const TargetSpec& t : target_set())
    if (t.id == id) return t;
  return std::nullopt;
}

double index_of_difficulty(double distance_px, double width_px) {
  if (!(width_px > 0.0)) throw std::invalid_argument("width must be > 0");
  if (!(distance_px >= 0.0)) throw std::invalid_argument("distance must be >= 0");
  return std::log2(1.0 + distance_px / width_px);
}

double index_of_difficulty(const TaskSpec& task) {
  return index_of_difficulty(std::abs(task.target_px - task.start_px), task.width_px);
}

std::optional<double> movement_time(const TrialRecord& trial) {
  const auto click = trial.hit_click();
  if (trial.outcome != Outcome::hit || !click) return std::nullopt;
  return click->step * trial.dt;
}

Movement movement(const TrialRecord& trial) {
  Movement m;
  m.trial_id = trial.trial_id;
  m.target_id = trial.target_id;
  m.task = trial.task;
  m.misclicks = trial.misclicks;
  m.mt_s = movement_time(trial);
  if (m.mt_s) m.endpoint_px = to_pixels(trial.task, trial.hit_click()->position);
  return m;
}

std::vector<Movement> movements(const std::vector<TrialRecord>& trials) {
  std::vector<Movement> out;
  out.reserve(trials.size());
  for (const TrialRecord& t : trials) out.push_back(movement(t));
  return out;
}

std::vector<bool> within_sd(const std::vector<double>& values, double k) {
  std::vector<bool> keep(values.size(), true);
  if (values.size() < 2) return keep;
  const double mu = mean_of(values);
  double ss = 0.0;
  for (double v : values) ss += (v - mu) * (v - mu);
  const double sd = std::sqrt(ss / static_cast<double>(values.size() - 1));
  for (std::size_t i = 0; i < values.size(); ++i) keep[i] = std::abs(values[i] - mu) <= k * sd;
  return keep;
}

std::vector<Movement> outlier_filter(const std::vector<Movement>& trials, double k) {
  std::vector<double> mts;
  std::vector<std::size_t> index;
  for (std::size_t i = 0; i < trials.size(); ++i) {
    if (trials[i].mt_s) {
      mts.push_back(*trials[i].mt_s);
      index.push_back(i);
    }
  }
  std::vector<bool> keep(trials.size(), true);
  const std::vector<bool> inside = within_sd(mts, k);
  for (std::size_t j = 0; j < index.size(); ++j) keep[index[j]] = inside[j];
  std::vector<Movement> out;
  for (std::size_t i = 0; i < trials.size(); ++i)
    if (keep[i]) out.push_back(trials[i]);
  return out;
}

std::vector<TrialRecord> outlier_filter(const std::vector<TrialRecord>& trials, double k) {
  std::vector<Movement> moves = movements(trials);
  for (std::size_t i = 0; i < moves.size(); ++i) moves[i].trial_id = static_cast<int>(i);
  std::vector<TrialRecord> out;
  for (const Movement& m : outlier_filter(moves, k)) out.push_back(trials[m.trial_id]);
  return out;
}

FittsFit fitts_fit(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw std::invalid_argument("fitts_fit: size mismatch");
  const double mx = x.empty() ? 0.0 : mean_of(x);
  const double my = y.empty() ? 0.0 : mean_of(y);
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (x.size() < 2 || !(sxx > 0.0)) throw std::invalid_argument("fitts_fit: degenerate design");
  FittsFit fit;
  fit.n = static_cast<int>(x.size());
  fit.b = sxy / sxx;
  fit.a = my - fit.b * mx;
  fit.r2 = syy > 0.0 ? std::clamp(sxy * sxy / (sxx * syy), 0.0, 1.0) : 0.0;
  return fit;
}

FittsFit fitts_fit(const std::vector<Movement>& trials, FitMode mode) {
  std::vector<double> ids, mts;
  if (mode == FitMode::per_trial) {
    for (const Movement& m : trials) {
      if (m.mt_s) {
        ids.push_back(index_of_difficulty(m.task));
        mts.push_back(*m.mt_s);
      }
    }
    return fitts_fit(ids, mts);
  }
  std::map<int, std::vector<double>> by_target;
  std::map<int, double> target_id;
  for (const Movement& m : trials) {
    if (m.mt_s) {
      by_target[m.target_id].push_back(*m.mt_s);
      target_id[m.target_id] = index_of_difficulty(m.task);
    }
  }
  for (const auto& [id, v] : by_target) {
    ids.push_back(target_id[id]);
    mts.push_back(mean_of(v));
  }
  return fitts_fit(ids, mts);
}

FittsFit fitts_fit(const std::vector<TrialRecord>& trials, FitMode mode) {
  return fitts_fit(movements(trials), mode);
}

EndpointStats endpoint_stats(const std::vector<Movement>& trials) {
  std::map<int, std::vector<double>> ends;
  std::map<int, TaskSpec> tasks;
  for (const Movement& m : trials) {
    if (!m.endpoint_px) continue;
    ends[m.target_id].push_back(*m.endpoint_px);
    tasks[m.target_id] = m.task;
  }
  EndpointStats out;
  std::map<double, std::vector<double>> by_width;
  for (const auto& [id, v] : ends) {
    TargetEndpoints e;
    e.target_id = id;
    e.position_px = tasks[id].target_px;
    e.width_px = tasks[id].width_px;
    e.n = static_cast<int>(v.size());
    e.mean_px = mean_of(v);
    double ss = 0.0;
    for (double x : v) ss += (x - e.mean_px) * (x - e.mean_px);
    e.std_px = std::sqrt(ss / static_cast<double>(v.size()));
    out.targets.push_back(e);
    by_width[e.width_px].push_back(e.std_px);
  }
  for (const auto& [w, stds] : by_width) out.width_std[w] = mean_of(stds);
  return out;
}

EndpointStats endpoint_stats(const std::vector<TrialRecord>& trials) {
  return endpoint_stats(movements(trials));
}

std::optional<double> reaction_time(const std::vector<double>& t, const std::vector<double>& x,
                                    double threshold) {
  if (t.size() != x.size()) throw std::invalid_argument("reaction_time: size mismatch");
  for (std::size_t i = 1; i < t.size(); ++i)
    if (!(t[i] > t[i - 1])) throw std::invalid_argument("reaction_time: timestamps not increasing");
  for (std::size_t i = 1; i + 1 < t.size(); ++i) {
    const double h0 = t[i] - t[i - 1];
    const double h1 = t[i + 1] - t[i];
    const double acc = 2.0 * (h0 * x[i + 1] - (h0 + h1) * x[i] + h1 * x[i - 1]) /
                       (h0 * h1 * (h0 + h1));
    if (std::abs(acc) > threshold) return t[i];
  }
  return std::nullopt;
}

double peak_speed_px(const TrialRecord& trial) {
  double peak = 0.0;
  for (const StepRecord& s : trial.steps)
    peak = std::max(peak, std::abs(s.state(state_index::velocity)) * trial.task.scale);
  return peak;
}

std::vector<TrialJob> block_jobs(const std::vector<TargetSpec>& targets, int reps,
                                 std::uint64_t master_seed, const TaskSpec& base) {
  if (reps < 1) throw std::invalid_argument("reps must be >= 1");
  std::vector<TrialJob> jobs;
  int i = 0;
  for (const TargetSpec& target : targets) {
    for (int r = 0; r < reps; ++r, ++i) {
      jobs.push_back({i, target.id, target.task(base),
                      derive_seed(master_seed, static_cast<std::uint64_t>(i))});
    }
  }
  return jobs;
}

std::vector<TrialRecord> run_jobs(const std::vector<TrialJob>& jobs, const AgentConfig& cfg,
                                  int threads, const ProgressFn& progress) {
  cfg.validate();
  std::vector<TrialRecord> out(jobs.size());
  std::atomic<std::size_t> next{0};
  std::atomic<int> done{0};
  std::mutex mu;
  std::exception_ptr error;

  auto worker = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      try {
        const TrialJob& j = jobs[i];
        out[i] = run_trial(j.task, cfg, j.seed, j.trial_id, j.target_id);
      } catch (...) {
        std::lock_guard lock(mu);
        if (!error) error = std::current_exception();
        next = jobs.size();
        return;
      }
      const int d = ++done;
      if (progress) {
        std::lock_guard lock(mu);
        progress(d, static_cast<int>(jobs.size()));
      }
    }
  };

  const int n = std::clamp(threads, 1, std::max(1, static_cast<int>(jobs.size())));
  if (n == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < n; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (error) std::rethrow_exception(error);
  return out;
}

std::vector<TrialRecord> run_block(const RunConfig& cfg, const std::vector<TargetSpec>& targets,
                                   int threads, const ProgressFn& progress) {
  cfg.validate();
  return run_jobs(block_jobs(targets, cfg.reps, cfg.seed, cfg.task), cfg.agent, threads, progress);
}

SweepSummary summarize(const std::vector<TrialRecord>& trials, double value) {
  SweepSummary s;
  s.value = value;
  s.trials = static_cast<int>(trials.size());
  std::vector<double> mts, peaks;
  for (const TrialRecord& t : trials) {
    s.misclicks += t.misclicks;
    peaks.push_back(peak_speed_px(t));
    if (const auto mt = movement_time(t)) mts.push_back(*mt);
  }
  s.hits = static_cast<int>(mts.size());
  s.median_mt = median_of(mts);
  s.mean_mt = mts.empty() ? std::numeric_limits<double>::quiet_NaN() : mean_of(mts);
  s.mean_peak_speed_px = peaks.empty() ? 0.0 : mean_of(peaks);
  return s;
}

SweepResult sweep(const RunConfig& base, const std::string& parameter,
                  const std::vector<double>& values, const std::vector<TargetSpec>& targets,
                  int threads, const ProgressFn& progress) {
  if (values.empty()) throw std::invalid_argument("sweep needs at least one value");
  SweepResult result;
  result.parameter = RunConfig::canonical_key(parameter);
  result.values = values;
  for (double v : values) {
    RunConfig cfg = base;
    cfg.set(result.parameter, v);
    result.trials.push_back(run_block(cfg, targets, threads, progress));
    result.summaries.push_back(summarize(result.trials.back(), v));
  }
  return result;
}

}  // namespace aifp
