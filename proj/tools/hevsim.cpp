#include <atomic>
#include <cstdio>
#include <filesystem>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"

#include "hev/bins.hpp"
#include "hev/closed_loop.hpp"
#include "hev/config.hpp"
#include "hev/corridor.hpp"
#include "hev/dp.hpp"
#include "hev/eco.hpp"
#include "hev/outputs.hpp"
#include "hev/preview.hpp"

namespace fs = std::filesystem;
using namespace hev;

namespace {

struct Corpus {
  std::vector<DriveTrace> normal;        // generator output, also the bin source
  std::vector<DriveTrace> driven;        // what the ego vehicles actually drive
  std::vector<BinProfile> bins;          // aggregated from the normal corpus
  std::vector<int> bin_of;               // bin index of each driven trace
};

std::string veh_name(int i) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "veh%03d", i);
  return buf;
}

std::vector<DriveTrace> eco_variants(const AppConfig& cfg, const std::vector<DriveTrace>& normal) {
  std::vector<DriveTrace> out;
  out.reserve(normal.size());
  for (const DriveTrace& tr : normal) {
    EcoOptions opts;
    // same driver, advised trip: keep their usual cruise pace as the ceiling
    opts.v_cruise_cap = *std::max_element(tr.v.begin(), tr.v.end());
    out.push_back(plan_eco_trajectory(cfg.corridor, tr.start_time(), opts, tr.vehicle_id));
  }
  return out;
}

double max_duration(const std::vector<DriveTrace>& traces) {
  double d = 0.0;
  for (const DriveTrace& tr : traces) d = std::max(d, tr.duration());
  return d;
}

// Build everything a case run needs. Bins always come from normal-driving
// statistics; eco cases classify their own trips against them.
Corpus build_corpus(const AppConfig& cfg) {
  Corpus c;
  c.normal = generate_corridor_traffic(cfg.corridor, cfg.scenario.n_vehicles, cfg.scenario.seed);
  c.driven = cfg.scenario.driving == "eco" ? eco_variants(cfg, c.normal) : c.normal;
  if (cfg.controller.type == "mpc" && cfg.controller.preview == "binned") {
    std::vector<int> labels;
    labels.reserve(c.normal.size());
    for (const DriveTrace& tr : c.normal) labels.push_back(classify_trip(tr, cfg.corridor));
    const double horizon = max_duration(c.normal) + cfg.controller.dt2;
    c.bins = aggregate_bins(c.normal, labels, cfg.corridor, cfg.controller.dt2, horizon);
    c.bin_of.reserve(c.driven.size());
    for (const DriveTrace& tr : c.driven) c.bin_of.push_back(classify_trip(tr, cfg.corridor));
  }
  return c;
}

const BinProfile* bin_for(const Corpus& c, int i) {
  if (c.bins.empty()) return nullptr;
  const int b = c.bin_of[i];
  for (const BinProfile& p : c.bins)
    if (p.bin == b && p.usable()) return &p;
  // thin corpus can leave a bin empty; fall back to the nearest usable one
  const BinProfile* best = nullptr;
  int dist = 1 << 20;
  for (const BinProfile& p : c.bins) {
    if (!p.usable()) continue;
    const int d = std::abs(p.bin - b);
    if (d < dist) {
      dist = d;
      best = &p;
    }
  }
  if (!best) throw ConfigError("no usable bin profile in the corpus");
  return best;
}

struct CaseResult {
  CaseSummary summary;
  std::vector<TripMetrics> per_vehicle;
  std::vector<TrajectoryLog> logs;
};

CaseResult run_case(const AppConfig& cfg, const Corpus& corpus, bool keep_logs) {
  CaseResult res;
  res.summary.label = cfg.scenario.label.empty() ? cfg.controller.type : cfg.scenario.label;
  const int n = static_cast<int>(corpus.driven.size());
  res.per_vehicle.reserve(n);
  for (int i = 0; i < n; ++i) {
    TrajectoryLog log = run_closed_loop(cfg, corpus.driven[i], bin_for(corpus, i));
    TripMetrics m = compute_metrics(log, cfg);
    res.summary.fuel_kg += m.fuel_total_kg / n;
    res.summary.engine_on_ratio += m.engine_on_ratio / n;
    res.summary.soc_terminal_dev += m.soc_terminal_dev / n;
    res.summary.hard_violations += m.violations.total();
    res.summary.soft_steps += m.soft_steps;
    res.summary.fallback_steps += m.fallback_steps;
    res.per_vehicle.push_back(m);
    if (keep_logs) res.logs.push_back(std::move(log));
  }
  return res;
}

void write_case_outputs(const CaseResult& res, const Corpus& corpus, const fs::path& dir) {
  fs::create_directories(dir);
  for (std::size_t i = 0; i < res.logs.size(); ++i) {
    const std::string stem = corpus.driven[i].vehicle_id.empty()
                                 ? veh_name(static_cast<int>(i))
                                 : corpus.driven[i].vehicle_id;
    save_trajectory_csv(res.logs[i], (dir / (stem + "_traj.csv")).string());
    save_metrics_json(res.per_vehicle[i], (dir / (stem + "_metrics.json")).string());
  }
}

// case-matrix runs fan out over a small worker pool; each case is sequential
std::vector<CaseResult> run_matrix(const AppConfig& base, const std::vector<RunCase>& matrix) {
  std::vector<AppConfig> cfgs;
  std::vector<Corpus> corpora;
  for (const RunCase& rc : matrix) {
    AppConfig cfg = base;
    apply_case(cfg, rc);
    cfg.validate();
    corpora.push_back(build_corpus(cfg));
    cfgs.push_back(std::move(cfg));
  }
  std::vector<CaseResult> results(matrix.size());
  std::atomic<std::size_t> next{0};
  const unsigned workers =
      std::max(1u, std::min<unsigned>(std::thread::hardware_concurrency(),
                                      static_cast<unsigned>(matrix.size())));
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= matrix.size()) return;
      results[i] = run_case(cfgs[i], corpora[i], false);
    }
  };
  std::vector<std::thread> pool;
  for (unsigned w = 0; w + 1 < workers; ++w) pool.emplace_back(worker);
  worker();
  for (std::thread& th : pool) th.join();
  return results;
}

int cmd_generate(const AppConfig& cfg, const fs::path& out) {
  const fs::path dir = out / "traces";
  fs::create_directories(dir);
  const auto traces =
      generate_corridor_traffic(cfg.corridor, cfg.scenario.n_vehicles, cfg.scenario.seed);
  for (const DriveTrace& tr : traces) save_trace(tr, (dir / (tr.vehicle_id + ".csv")).string());
  std::printf("wrote %zu traces to %s\n", traces.size(), dir.string().c_str());
  return 0;
}

int cmd_classify(const AppConfig& cfg, const std::string& trace_path) {
  const DriveTrace tr = load_trace(trace_path);
  std::printf("%d\n", classify_trip(tr, cfg.corridor));
  return 0;
}

int cmd_aggregate(const AppConfig& cfg, const fs::path& out, std::string traces_dir) {
  if (traces_dir.empty()) traces_dir = (out / "traces").string();
  std::vector<DriveTrace> traces;
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(traces_dir))
    if (e.path().extension() == ".csv") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  for (const fs::path& p : files) traces.push_back(load_trace(p.string()));
  if (traces.empty()) throw ConfigError("aggregate: no trace CSVs in " + traces_dir);
  std::vector<int> labels;
  for (const DriveTrace& tr : traces) labels.push_back(classify_trip(tr, cfg.corridor));
  const double horizon = max_duration(traces) + cfg.controller.dt2;
  const auto bins = aggregate_bins(traces, labels, cfg.corridor, cfg.controller.dt2, horizon);
  fs::create_directories(out);
  const fs::path path = out / "bins.csv";
  save_bins_csv(bins, path.string());
  std::printf("wrote %s\n", path.string().c_str());
  return 0;
}

int cmd_plan_eco(const AppConfig& cfg, const fs::path& out, double depart) {
  EcoOptions opts;
  char stem[32];
  std::snprintf(stem, sizeof stem, "eco_depart%g.csv", depart);
  const DriveTrace tr = plan_eco_trajectory(cfg.corridor, depart, opts, "eco");
  fs::create_directories(out);
  const fs::path path = out / stem;
  save_trace(tr, path.string());
  std::printf("wrote %s (%.0f s trip)\n", path.string().c_str(), tr.duration());
  return 0;
}

int cmd_simulate(const AppConfig& cfg, const fs::path& out) {
  const Corpus corpus = build_corpus(cfg);
  const CaseResult res = run_case(cfg, corpus, true);
  const fs::path dir = out / ("case_" + res.summary.label);
  write_case_outputs(res, corpus, dir);
  std::printf("case %s: mean fuel %.4f kg, engine-on ratio %.3f, terminal SOC dev %+.4f\n",
              res.summary.label.c_str(), res.summary.fuel_kg, res.summary.engine_on_ratio,
              res.summary.soc_terminal_dev);
  if (res.summary.fallback_steps > 0)
    std::printf("  note: %d fallback steps\n", res.summary.fallback_steps);
  return 0;
}

int cmd_compare(const AppConfig& base, const fs::path& out) {
  const auto matrix = scenario_matrix(base.scenario.scenario);
  const auto results = run_matrix(base, matrix);
  std::vector<CaseSummary> summaries;
  for (const CaseResult& r : results) summaries.push_back(r.summary);
  const auto rows = compare_cases(summaries, 0);
  fs::create_directories(out);
  const fs::path path = out / ("comparison_scenario_" + base.scenario.scenario + ".csv");
  save_comparison_csv(rows, path.string());
  for (const ComparisonRow& r : rows)
    std::printf("case %-4s fuel %.4f kg (%+.2f%%)  on-ratio %.3f (%+.2f%%)\n",
                r.summary.label.c_str(), r.summary.fuel_kg, r.fuel_delta_pct,
                r.summary.engine_on_ratio, r.on_ratio_delta_pct);
  std::printf("wrote %s\n", path.string().c_str());
  return 0;
}

int cmd_sweep_hr(const AppConfig& base, const fs::path& out) {
  std::vector<CaseSummary> summaries;
  {
    AppConfig cfg = base;
    cfg.scenario.label.clear();
    cfg.controller.type = "mpc";
    cfg.controller.preview = "exact";
    cfg.validate();
    CaseResult r = run_case(cfg, build_corpus(cfg), false);
    r.summary.label = "exact";
    summaries.push_back(r.summary);
  }
  for (int hr : {5, 10, 20}) {
    AppConfig cfg = base;
    cfg.scenario.label.clear();
    cfg.controller.type = "mpc";
    cfg.controller.preview = "binned";
    cfg.controller.h_r = hr;
    cfg.validate();
    CaseResult r = run_case(cfg, build_corpus(cfg), false);
    r.summary.label = "hr" + std::to_string(hr);
    summaries.push_back(r.summary);
  }
  const auto rows = compare_cases(summaries, 0);
  fs::create_directories(out);
  const fs::path path = out / "sweep_hr.csv";
  save_comparison_csv(rows, path.string());
  for (const ComparisonRow& r : rows)
    std::printf("%-6s fuel %.4f kg (%+.2f%% vs exact preview)\n", r.summary.label.c_str(),
                r.summary.fuel_kg, r.fuel_delta_pct);
  std::printf("wrote %s\n", path.string().c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"closed-loop power and thermal management workbench"};
  app.require_subcommand(1);

  std::string config_path, out_dir = "out", trace_path, traces_dir;
  std::optional<std::uint64_t> seed;
  double depart = 0.0;
  app.add_option("--config", config_path, "config JSON path");
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--seed", seed, "override scenario seed");

  CLI::App* c_generate = app.add_subcommand("generate", "write a corridor traffic corpus");
  CLI::App* c_classify = app.add_subcommand("classify", "print a trip's arrival-phase bin");
  c_classify->add_option("--trace", trace_path, "trace CSV")->required();
  CLI::App* c_aggregate = app.add_subcommand("aggregate", "aggregate traces into bin profiles");
  c_aggregate->add_option("--traces", traces_dir, "trace directory (default OUT/traces)");
  CLI::App* c_plan = app.add_subcommand("plan-eco", "plan a green-window trajectory");
  c_plan->add_option("--depart", depart, "departure time, s")->required();
  CLI::App* c_simulate = app.add_subcommand("simulate", "run the configured case");
  CLI::App* c_compare = app.add_subcommand("compare", "run the scenario case matrix");
  CLI::App* c_sweep = app.add_subcommand("sweep-hr", "short-horizon sensitivity sweep");

  CLI11_PARSE(app, argc, argv);

  try {
    AppConfig cfg = config_path.empty() ? AppConfig{} : load_config(config_path);
    if (seed) cfg.scenario.seed = *seed;
    cfg.validate();
    const fs::path out(out_dir);
    if (c_generate->parsed()) return cmd_generate(cfg, out);
    if (c_classify->parsed()) return cmd_classify(cfg, trace_path);
    if (c_aggregate->parsed()) return cmd_aggregate(cfg, out, traces_dir);
    if (c_plan->parsed()) return cmd_plan_eco(cfg, out, depart);
    if (c_simulate->parsed()) return cmd_simulate(cfg, out);
    if (c_compare->parsed()) return cmd_compare(cfg, out);
    if (c_sweep->parsed()) return cmd_sweep_hr(cfg, out);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const ParseError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    // infeasible plan, impossible power demand, solver breakdown
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  }
  return 0;
}
