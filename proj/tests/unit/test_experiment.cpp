#include <doctest.h>

#include <cmath>

#include "aifp/experiment.hpp"

using namespace aifp;

namespace {

TrialRecord hit_trial(int target_id, int hit_step, double endpoint_px, int trial_id = 0) {
  const TargetSpec t = *find_target(target_id);
  TrialRecord r;
  r.trial_id = trial_id;
  r.target_id = target_id;
  r.task = t.task();
  r.dt = 0.02;
  r.outcome = Outcome::hit;
  r.clicks.push_back({hit_step, to_model_units(r.task, endpoint_px), true});
  return r;
}

TrialRecord timeout_trial(int target_id) {
  TrialRecord r;
  r.target_id = target_id;
  r.task = find_target(target_id)->task();
  r.outcome = Outcome::timeout;
  return r;
}

}  // namespace

TEST_CASE("target_set: published ids, rounded positions and widths") {
  struct Row {
    int id;
    double position, width, id_bits;
  };
  // Target 6 listed at 175 in the source table; its distance and ID require 1750.
  const Row table[] = {{1, 675, 20, 3.61},   {2, 363, 20, 4.80},   {3, 50, 20, 5.44},
                       {4, 1125, 20, 3.61},  {5, 1438, 20, 4.80},  {6, 1750, 20, 5.44},
                       {7, 675, 60, 2.25},   {8, 363, 60, 3.32},   {9, 50, 60, 3.92},
                       {10, 1125, 60, 2.25}, {11, 1438, 60, 3.32}, {12, 1750, 60, 3.92},
                       {13, 675, 100, 1.70}, {14, 363, 100, 2.67}, {15, 50, 100, 3.25},
                       {16, 1125, 100, 1.70}, {17, 1438, 100, 2.67}, {18, 1750, 100, 3.25}};
  const auto targets = target_set();
  REQUIRE(targets.size() == 18);
  for (const Row& row : table) {
    const TargetSpec& t = targets[static_cast<std::size_t>(row.id - 1)];
    CHECK(t.id == row.id);
    CHECK(std::round(t.position_px) == row.position);
    CHECK(t.width_px == row.width);
    CHECK(std::round(t.id_bits * 100) / 100 == doctest::Approx(row.id_bits).epsilon(1e-12));
  }
  CHECK_FALSE(find_target(0).has_value());
  CHECK_FALSE(find_target(19).has_value());
}

TEST_CASE("index_of_difficulty: Shannon form") {
  CHECK(index_of_difficulty(0, 20) == 0.0);
  CHECK(index_of_difficulty(60, 60) == doctest::Approx(1.0));
  CHECK(index_of_difficulty(850, 20) == doctest::Approx(std::log2(43.5)));
  CHECK(std::round(index_of_difficulty(850, 20) * 100) / 100 == doctest::Approx(5.44));
  // The middle distance is 537.5; 537 would round to 3.31.
  CHECK(std::round(index_of_difficulty(537.5, 60) * 100) / 100 == doctest::Approx(3.32));
  CHECK(std::round(index_of_difficulty(537, 60) * 100) / 100 == doctest::Approx(3.31));
  CHECK_THROWS_AS(index_of_difficulty(100, 0), std::invalid_argument);
  CHECK_THROWS_AS(index_of_difficulty(100, -5), std::invalid_argument);
}

TEST_CASE("movement_time: step count times dt, empty on timeout") {
  CHECK(*movement_time(hit_trial(1, 40, 675)) == doctest::Approx(0.80));
  CHECK_FALSE(movement_time(timeout_trial(1)).has_value());
  const Movement m = movement(hit_trial(12, 30, 1748.5));
  CHECK(*m.endpoint_px == doctest::Approx(1748.5).epsilon(1e-12));
}

TEST_CASE("outlier_filter: keeps identical values, drops a 5 SD outlier, idempotent") {
  std::vector<Movement> same(10);
  for (auto& m : same) m.mt_s = 0.5;
  CHECK(outlier_filter(same).size() == 10);

  std::vector<Movement> set(100);
  for (int i = 0; i < 99; ++i) set[i].mt_s = 0.6 + (i % 2 == 0 ? 0.05 : -0.05);
  set[99].mt_s = 0.6 + 5 * 0.05;
  set[99].trial_id = 99;
  const auto once = outlier_filter(set);
  CHECK(once.size() == 99);
  for (const auto& m : once) CHECK(m.trial_id != 99);
  CHECK(outlier_filter(once).size() == once.size());

  // Timeouts are not movement-time data and pass through.
  std::vector<Movement> with_timeout = set;
  with_timeout.push_back(Movement{});
  CHECK(outlier_filter(with_timeout).size() == 100);
}

TEST_CASE("fitts_fit: noiseless line and constant movement times") {
  std::vector<double> ids, mts;
  for (const TargetSpec& t : target_set()) {
    ids.push_back(t.id_bits);
    mts.push_back(0.22 + 0.09 * t.id_bits);
  }
  const FittsFit fit = fitts_fit(ids, mts);
  CHECK(std::abs(fit.a - 0.22) < 1e-10);
  CHECK(std::abs(fit.b - 0.09) < 1e-10);
  CHECK(std::abs(fit.r2 - 1.0) < 1e-10);
  CHECK(fit.n == 18);

  const FittsFit flat = fitts_fit(ids, std::vector<double>(ids.size(), 0.7));
  CHECK(std::abs(flat.b) < 1e-12);
  CHECK(flat.a == doctest::Approx(0.7));
  CHECK(flat.r2 >= 0.0);

  CHECK_THROWS_AS(fitts_fit(std::vector<double>{2, 2, 2}, std::vector<double>{1, 2, 3}), std::invalid_argument);
  CHECK_THROWS_AS(fitts_fit(std::vector<double>{2}, std::vector<double>{1}), std::invalid_argument);
}

TEST_CASE("fitts_fit: from trial records, per trial and per target means") {
  std::vector<TrialRecord> trials;
  for (const TargetSpec& t : target_set()) {
    // Hit steps chosen so MT = 0.2 + 0.1 * round(ID) exactly in steps of dt.
    const int steps = 10 + 5 * static_cast<int>(std::round(t.id_bits));
    trials.push_back(hit_trial(t.id, steps, t.position_px));
    trials.push_back(hit_trial(t.id, steps, t.position_px));
  }
  trials.push_back(timeout_trial(3));
  const FittsFit per_trial = fitts_fit(trials);
  const FittsFit means = fitts_fit(trials, FitMode::per_target_means);
  CHECK(per_trial.n == 36);
  CHECK(means.n == 18);
  CHECK(per_trial.b == doctest::Approx(means.b).epsilon(1e-9));
  CHECK(per_trial.a == doctest::Approx(means.a).epsilon(1e-9));
  CHECK(per_trial.r2 > 0.9);
  CHECK(per_trial.r2 <= 1.0);
}

TEST_CASE("endpoint_stats: zero spread and per-width averages") {
  std::vector<TrialRecord> trials;
  for (int i = 0; i < 5; ++i) trials.push_back(hit_trial(12, 30, 1745.0));
  EndpointStats s = endpoint_stats(trials);
  REQUIRE(s.targets.size() == 1);
  CHECK(s.targets[0].std_px == 0.0);
  CHECK(s.targets[0].mean_px == doctest::Approx(1745.0));

  // Population std of {-d, +d} is d; two targets of width 60 average their stds.
  trials = {hit_trial(12, 30, 1750 - 4.0), hit_trial(12, 30, 1750 + 4.0),
            hit_trial(7, 30, 675 - 8.0), hit_trial(7, 30, 675 + 8.0),
            hit_trial(1, 30, 675), timeout_trial(2)};
  s = endpoint_stats(trials);
  CHECK(s.targets.size() == 3);
  CHECK(s.targets.front().target_id == 1);
  CHECK(s.width_std.at(60.0) == doctest::Approx(6.0).epsilon(1e-9));
  CHECK(s.width_std.at(20.0) == 0.0);
  CHECK(s.width_std.count(100.0) == 0);
}

TEST_CASE("reaction_time: onset of a synthetic acceleration") {
  std::vector<double> t, x;
  for (int i = 0; i <= 50; ++i) {
    const double ti = 0.01 * i;
    t.push_back(ti);
    x.push_back(ti > 0.1 ? 0.5 * 2000.0 * (ti - 0.1) * (ti - 0.1) : 0.0);
  }
  const auto rt = reaction_time(t, x);
  REQUIRE(rt.has_value());
  CHECK(std::abs(*rt - 0.1) <= 0.01 + 1e-12);

  // Irregular sampling, as a browser would deliver it.
  std::vector<double> ti{0.0, 0.013, 0.029, 0.041, 0.058, 0.07, 0.085, 0.1, 0.112, 0.131, 0.147, 0.16};
  std::vector<double> xi;
  for (double v : ti) xi.push_back(v > 0.1 ? 0.5 * 2000.0 * (v - 0.1) * (v - 0.1) : 0.0);
  const auto rti = reaction_time(ti, xi);
  REQUIRE(rti.has_value());
  CHECK(*rti >= 0.085 - 1e-12);
  CHECK(*rti <= 0.112 + 1e-12);

  CHECK_FALSE(reaction_time(t, std::vector<double>(t.size(), 900.0)).has_value());
  CHECK_THROWS_AS(reaction_time({0.0, 0.0, 0.1}, {1, 2, 3}), std::invalid_argument);
}

TEST_CASE("block_jobs: target-major order with derived seeds") {
  const auto targets = target_set();
  const auto jobs = block_jobs(targets, 3, 42);
  REQUIRE(jobs.size() == 54);
  CHECK(jobs[0].target_id == 1);
  CHECK(jobs[2].target_id == 1);
  CHECK(jobs[3].target_id == 2);
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    CHECK(jobs[i].trial_id == static_cast<int>(i));
    CHECK(jobs[i].seed == derive_seed(42, i));
  }
}

TEST_CASE("run_jobs: results do not depend on the thread count") {
  AgentConfig cfg;
  cfg.planner.plans = 30;
  cfg.timeout = 0.4;
  const auto jobs = block_jobs({*find_target(7), *find_target(18)}, 2, 5);
  const auto one = run_jobs(jobs, cfg, 1);
  const auto three = run_jobs(jobs, cfg, 3);
  REQUIRE(one.size() == 4);
  CHECK(one == three);
  for (std::size_t i = 0; i < one.size(); ++i) CHECK(one[i].trial_id == static_cast<int>(i));
}

TEST_CASE("summarize and sweep bookkeeping") {
  std::vector<TrialRecord> trials{hit_trial(12, 30, 1750), hit_trial(12, 40, 1750), hit_trial(12, 50, 1750),
                                  timeout_trial(12)};
  trials[1].misclicks = 2;
  const SweepSummary s = summarize(trials, 24.0);
  CHECK(s.value == 24.0);
  CHECK(s.trials == 4);
  CHECK(s.hits == 3);
  CHECK(s.misclicks == 2);
  CHECK(s.median_mt == doctest::Approx(0.8));
  CHECK(s.mean_mt == doctest::Approx(0.8));

  RunConfig base;
  base.agent.planner.plans = 20;
  base.agent.timeout = 0.2;
  base.reps = 2;
  const auto targets = std::vector<TargetSpec>{*find_target(12)};
  const SweepResult r = sweep(base, "d", {24.0, 40.0}, targets);
  CHECK(r.parameter == "damping");
  REQUIRE(r.trials.size() == 2);
  REQUIRE(r.summaries.size() == 2);
  for (std::size_t i = 0; i < r.trials[0].size(); ++i) CHECK(r.trials[0][i].seed == r.trials[1][i].seed);
  CHECK_THROWS(sweep(base, "no_such_key", {1.0}, targets));
}

TEST_CASE("peak_speed_px: largest absolute velocity in pixels per second") {
  TrialRecord r = hit_trial(12, 3, 1750);
  for (double v : {0.1, -0.7, 0.4}) {
    StepRecord row;
    row.state = State(0, v, 0, 0);
    r.steps.push_back(row);
  }
  CHECK(peak_speed_px(r) == doctest::Approx(700.0));
}
