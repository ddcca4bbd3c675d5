#include "aifp/cli.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "aifp/config.hpp"
#include "aifp/experiment.hpp"
#include "aifp/human.hpp"
#include "aifp/trajectory_log.hpp"

namespace fs = std::filesystem;

namespace aifp {

namespace {

constexpr const char* kTrialsFile = "trials.jsonl";
constexpr const char* kHumanFile = "human.jsonl";

struct Common {
  std::string config = "default";
  std::vector<std::string> overrides;
  long long seed = -1;
  int jobs = 1;
  int reps = 0;
  std::string out;
  std::string targets;
};

void add_run_options(CLI::App* app, Common& c) {
  app->add_option("--config", c.config, "config file or 'default'");
  app->add_option("--set", c.overrides, "override a config value, key=value");
  app->add_option("--seed", c.seed, "master seed")->check(CLI::NonNegativeNumber);
  app->add_option("--jobs", c.jobs, "worker threads, 0 = all cores")->check(CLI::NonNegativeNumber);
  app->add_option("--reps", c.reps, "repetitions per target")->check(CLI::PositiveNumber);
  app->add_option("--targets", c.targets, "target ids (1,2,12) or position:width pairs");
}

RunConfig resolve_config(const Common& c) {
  RunConfig cfg = load_config(c.config);
  for (const std::string& kv : c.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
    cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (c.seed >= 0) cfg.seed = static_cast<std::uint64_t>(c.seed);
  if (c.reps > 0) cfg.reps = c.reps;
  cfg.validate();
  return cfg;
}

int thread_count(int jobs) {
  if (jobs > 0) return jobs;
  return std::max(1u, std::thread::hardware_concurrency());
}

std::vector<TargetSpec> parse_targets(const std::string& text) {
  if (text.empty()) return target_set();
  std::vector<TargetSpec> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (const auto colon = item.find(':'); colon != std::string::npos) {
      const double pos = std::stod(item.substr(0, colon));
      const double width = std::stod(item.substr(colon + 1));
      out.push_back({0, pos, width, index_of_difficulty(std::abs(pos - 900.0), width)});
      continue;
    }
    const auto t = find_target(std::stoi(item));
    if (!t) throw ConfigError("unknown target id '" + item + "'");
    out.push_back(*t);
  }
  if (out.empty()) throw ConfigError("empty target list");
  return out;
}

std::vector<double> parse_values(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    const double v = std::stod(item, &used);
    if (used != item.size()) throw ConfigError("bad sweep value '" + item + "'");
    out.push_back(v);
  }
  if (out.empty()) throw ConfigError("--values needs at least one number");
  return out;
}

std::map<std::string, std::string> config_map(const RunConfig& cfg) {
  std::map<std::string, std::string> m;
  for (const std::string& k : RunConfig::keys()) m[k] = cfg.get(k);
  return m;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << std::setprecision(17);
  return f;
}

void write_block(const fs::path& dir, const RunConfig& cfg, const std::vector<TrialRecord>& trials) {
  fs::create_directories(dir);
  write_log_file((dir / kTrialsFile).string(), trials, config_map(cfg));
  open_out(dir / "config.txt") << format_config(cfg);
}

std::string csv_number(double v) {
  if (!std::isfinite(v)) return "";
  std::ostringstream s;
  s << std::setprecision(17) << v;
  return s.str();
}

void write_movement_tables(const fs::path& dir, const std::vector<Movement>& all, bool filter,
                           std::ostream& out) {
  const std::vector<Movement> kept = filter ? outlier_filter(all) : all;
  std::set<int> kept_ids;
  for (const Movement& m : kept) kept_ids.insert(m.trial_id);

  auto fitts = open_out(dir / "fitts.csv");
  fitts << "trial,id_bits,mt_s,target_id,width_px,outlier\n";
  for (const Movement& m : all) {
    if (!m.mt_s) continue;
    fitts << m.trial_id << ',' << csv_number(index_of_difficulty(m.task)) << ','
          << csv_number(*m.mt_s) << ',' << m.target_id << ',' << csv_number(m.task.width_px) << ','
          << (kept_ids.count(m.trial_id) ? 0 : 1) << '\n';
  }

  auto fit_file = open_out(dir / "fitts_fit.csv");
  fit_file << "mode,a,b,r2,n\n";
  for (const auto& [name, mode] : {std::pair{"per_trial", FitMode::per_trial},
                                   std::pair{"per_target_means", FitMode::per_target_means}}) {
    try {
      const FittsFit f = fitts_fit(kept, mode);
      fit_file << name << ',' << csv_number(f.a) << ',' << csv_number(f.b) << ','
               << csv_number(f.r2) << ',' << f.n << '\n';
      if (mode == FitMode::per_trial)
        out << "fitts: a=" << f.a << " b=" << f.b << " r2=" << f.r2 << " n=" << f.n << '\n';
    } catch (const std::invalid_argument& e) {
      out << "fitts (" << name << "): " << e.what() << '\n';
    }
  }

  const EndpointStats ep = endpoint_stats(kept);
  auto targets = open_out(dir / "endpoints.csv");
  targets << "target_id,position_px,width_px,n,mean_px,std_px\n";
  for (const TargetEndpoints& t : ep.targets) {
    targets << t.target_id << ',' << csv_number(t.position_px) << ',' << csv_number(t.width_px)
            << ',' << t.n << ',' << csv_number(t.mean_px) << ',' << csv_number(t.std_px) << '\n';
  }
  auto widths = open_out(dir / "endpoint_widths.csv");
  widths << "width_px,std_px\n";
  for (const auto& [w, s] : ep.width_std) {
    widths << csv_number(w) << ',' << csv_number(s) << '\n';
    out << "endpoint std (width " << w << " px): " << s << " px\n";
  }

  int hits = 0, misclicks = 0;
  for (const Movement& m : all) {
    hits += m.mt_s ? 1 : 0;
    misclicks += m.misclicks;
  }
  auto summary = open_out(dir / "summary.csv");
  summary << "trials,hits,timeouts,misclicks,outliers_removed\n"
          << all.size() << ',' << hits << ',' << all.size() - hits << ',' << misclicks << ','
          << all.size() - kept.size() << '\n';
  out << "trials: " << all.size() << " hits: " << hits << " outliers removed: "
      << all.size() - kept.size() << '\n';
}

void write_agent_trajectories(const fs::path& dir, const std::vector<TrialRecord>& trials) {
  auto f = open_out(dir / "trajectories.csv");
  f << "trial,target_id,step,time_s,position_px,velocity_px_s,displacement,belief_position_px,"
       "belief_std_px,event\n";
  for (const TrialRecord& t : trials) {
    for (const StepRecord& s : t.steps) {
      f << t.trial_id << ',' << t.target_id << ',' << s.step << ',' << csv_number(s.time) << ','
        << csv_number(to_pixels(t.task, s.state(state_index::position))) << ','
        << csv_number(s.state(state_index::velocity) * t.task.scale) << ','
        << csv_number(s.state(state_index::displacement)) << ','
        << csv_number(to_pixels(t.task, s.predicted.mean(state_index::position))) << ','
        << csv_number(std::sqrt(s.predicted.cov(0, 0)) * t.task.scale) << ','
        << to_string(s.event) << '\n';
    }
  }
}

void write_human_trajectories(const fs::path& dir, const std::vector<HumanTrialLog>& trials,
                              double dt) {
  auto f = open_out(dir / "trajectories.csv");
  f << "trial,target_id,time_s,position_px\n";
  for (const HumanTrialLog& t : trials)
    for (const HumanSample& s : t.resampled(dt))
      f << t.trial_index << ',' << t.target_id << ',' << csv_number(s.t_s) << ','
        << csv_number(s.x_px) << '\n';
}

// Directory or file; returns movements and whether the source was human.
struct Loaded {
  std::vector<TrialRecord> agent;
  std::vector<HumanTrialLog> human;
  bool is_human = false;
};

Loaded load_source(const std::string& path) {
  fs::path p(path);
  if (fs::is_directory(p)) {
    if (fs::exists(p / kTrialsFile)) {
      p /= kTrialsFile;
    } else if (fs::exists(p / kHumanFile)) {
      p /= kHumanFile;
    } else {
      throw LogError("no " + std::string(kTrialsFile) + " or " + kHumanFile + " in " + path);
    }
  }
  std::ifstream in(p, std::ios::binary);
  if (!in) throw LogError("cannot open '" + p.string() + "'");
  std::string first;
  std::getline(in, first);
  in.seekg(0);
  Loaded l;
  if (first.find(kHumanFormat) != std::string::npos) {
    l.is_human = true;
    l.human = read_human_log(in);
  } else {
    l.agent = read_log(in).trials;
  }
  return l;
}

std::vector<Movement> source_movements(const Loaded& l) {
  return l.is_human ? movements(l.human) : movements(l.agent);
}

int run_simulate(const Common& c, std::ostream& out) {
  const RunConfig cfg = resolve_config(c);
  const std::vector<TargetSpec> targets = parse_targets(c.targets);
  const auto trials = run_block(cfg, targets, thread_count(c.jobs));
  write_block(c.out, cfg, trials);
  int hits = 0;
  for (const TrialRecord& t : trials) hits += t.outcome == Outcome::hit ? 1 : 0;
  out << "simulated " << trials.size() << " trials, " << hits << " hits -> "
      << (fs::path(c.out) / kTrialsFile).string() << '\n';
  return 0;
}

int run_analyze(const std::string& input, std::string out_dir, bool no_filter, double dt,
                std::ostream& out) {
  const Loaded l = load_source(input);
  if (out_dir.empty()) out_dir = fs::is_directory(input) ? input : fs::path(input).parent_path().string();
  if (out_dir.empty()) out_dir = ".";
  fs::create_directories(out_dir);
  write_movement_tables(out_dir, source_movements(l), !no_filter, out);
  if (l.is_human) {
    write_human_trajectories(out_dir, l.human, dt);
  } else {
    write_agent_trajectories(out_dir, l.agent);
  }
  return 0;
}

int run_sweep(const Common& c, const std::string& param, const std::string& values_text,
              std::ostream& out) {
  const RunConfig cfg = resolve_config(c);
  const std::vector<double> values = parse_values(values_text);
  const SweepResult r = sweep(cfg, param, values, parse_targets(c.targets), thread_count(c.jobs));
  fs::create_directories(c.out);
  auto table = open_out(fs::path(c.out) / "sweep.csv");
  table << "parameter,value,trials,hits,misclicks,median_mt_s,mean_mt_s,mean_peak_speed_px_s\n";
  for (std::size_t i = 0; i < values.size(); ++i) {
    RunConfig point = cfg;
    point.set(r.parameter, values[i]);
    const std::string label = r.parameter + "=" + point.get(r.parameter);
    write_block(fs::path(c.out) / label, point, r.trials[i]);
    const SweepSummary& s = r.summaries[i];
    table << r.parameter << ',' << point.get(r.parameter) << ',' << s.trials << ',' << s.hits << ','
          << s.misclicks << ',' << csv_number(s.median_mt) << ',' << csv_number(s.mean_mt) << ','
          << csv_number(s.mean_peak_speed_px) << '\n';
    out << label << ": hits " << s.hits << "/" << s.trials << ", misclicks " << s.misclicks
        << ", median MT " << s.median_mt << " s, peak speed " << s.mean_peak_speed_px << " px/s\n";
  }
  return 0;
}

int run_ingest(const std::string& input, const std::string& out_dir, double dt, std::ostream& out) {
  const IngestResult r = ingest_human_file(input);
  fs::create_directories(out_dir);
  {
    auto f = open_out(fs::path(out_dir) / kHumanFile);
    write_human_log(f, r.trials);
  }
  auto rejected = open_out(fs::path(out_dir) / "rejected.csv");
  rejected << "event_index,reason\n";
  for (const RejectedRow& row : r.rejected) rejected << row.index << ",\"" << row.reason << "\"\n";
  auto rt = open_out(fs::path(out_dir) / "reaction_times.csv");
  rt << "trial,target_id,reaction_time_s\n";
  for (const HumanTrialLog& t : r.trials) {
    const auto v = reaction_time(t);
    rt << t.trial_index << ',' << t.target_id << ',' << (v ? csv_number(*v) : "") << '\n';
  }
  write_human_trajectories(out_dir, r.trials, dt);
  out << "ingested " << r.trials.size() << " trials, " << r.rejected.size() << " rejected rows\n";
  for (const RejectedRow& row : r.rejected)
    out << "  event " << row.index << ": " << row.reason << '\n';
  return 0;
}

int run_compare(const std::string& agent_dir, const std::string& human_dir,
                const std::string& out_dir, std::ostream& out) {
  fs::create_directories(out_dir);
  auto f = open_out(fs::path(out_dir) / "compare.csv");
  f << "source,trials,hits,misclicks,a,b,r2,mean_mt_s,endpoint_std_w20,endpoint_std_w60,"
       "endpoint_std_w100\n";
  for (const auto& [name, path] : {std::pair{"agent", agent_dir}, std::pair{"human", human_dir}}) {
    const std::vector<Movement> all = source_movements(load_source(path));
    const std::vector<Movement> kept = outlier_filter(all);
    int hits = 0, misclicks = 0;
    double mt_sum = 0.0;
    for (const Movement& m : all) {
      misclicks += m.misclicks;
      if (m.mt_s) ++hits;
    }
    for (const Movement& m : kept) mt_sum += m.mt_s.value_or(0.0);
    FittsFit fit{NAN, NAN, NAN, 0};
    try {
      fit = fitts_fit(kept);
    } catch (const std::invalid_argument&) {
    }
    const EndpointStats ep = endpoint_stats(kept);
    auto width = [&](double w) {
      const auto it = ep.width_std.find(w);
      return it == ep.width_std.end() ? std::string() : csv_number(it->second);
    };
    int kept_hits = 0;
    for (const Movement& m : kept) kept_hits += m.mt_s ? 1 : 0;
    f << name << ',' << all.size() << ',' << hits << ',' << misclicks << ',' << csv_number(fit.a)
      << ',' << csv_number(fit.b) << ',' << csv_number(fit.r2) << ','
      << (kept_hits ? csv_number(mt_sum / kept_hits) : "") << ',' << width(20) << ',' << width(60)
      << ',' << width(100) << '\n';
    out << name << ": a=" << fit.a << " b=" << fit.b << " r2=" << fit.r2 << " hits " << hits << "/"
        << all.size() << '\n';
  }
  return 0;
}

}  // namespace

int cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Active inference pointing agent: simulate, analyze and compare pointing trials"};
  app.name("aifp");
  app.require_subcommand(1);

  Common sim;
  auto* simulate = app.add_subcommand("simulate", "run the target block and write trial logs");
  add_run_options(simulate, sim);
  simulate->add_option("--out", sim.out, "output directory")->required();

  std::string analyze_in, analyze_out;
  bool no_filter = false;
  double dt = 0.02;
  auto* analyze = app.add_subcommand("analyze", "Fitts and endpoint tables from a log");
  analyze->add_option("input", analyze_in, "log directory or file")->required();
  analyze->add_option("--out", analyze_out, "output directory (default: input directory)");
  analyze->add_flag("--no-filter", no_filter, "keep movement-time outliers");
  analyze->add_option("--dt", dt, "resampling step for human traces (s)")->check(CLI::PositiveNumber);

  Common sw;
  std::string param, values;
  auto* sweep_cmd = app.add_subcommand("sweep", "vary one config value, one log set per value");
  add_run_options(sweep_cmd, sw);
  sweep_cmd->add_option("--param", param, "config key (damping, N, tau, misclick_std, ...)")->required();
  sweep_cmd->add_option("--values", values, "comma-separated values")->required();
  sweep_cmd->add_option("--out", sw.out, "output directory")->required();

  std::string ingest_in, ingest_out;
  auto* ingest = app.add_subcommand("ingest", "convert a recorder export to a human log");
  ingest->add_option("input", ingest_in, "recorder export (JSON)")->required();
  ingest->add_option("--out", ingest_out, "output directory")->required();
  ingest->add_option("--dt", dt, "resampling step (s)")->check(CLI::PositiveNumber);

  std::string agent_dir, human_dir, compare_out;
  auto* compare = app.add_subcommand("compare", "agent vs human summary table");
  compare->add_option("--agent", agent_dir, "agent log directory")->required();
  compare->add_option("--human", human_dir, "human log directory")->required();
  compare->add_option("--out", compare_out, "output directory")->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return 2;
  }

  try {
    if (*simulate) return run_simulate(sim, out);
    if (*analyze) return run_analyze(analyze_in, analyze_out, no_filter, dt, out);
    if (*sweep_cmd) return run_sweep(sw, param, values, out);
    if (*ingest) return run_ingest(ingest_in, ingest_out, dt, out);
    if (*compare) return run_compare(agent_dir, human_dir, compare_out, out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}

int cli(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return cli(args, std::cout, std::cerr);
}

}  // namespace aifp
