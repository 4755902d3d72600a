#include "cli.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "deepcam/costmodel.hpp"
#include "deepcam/error.hpp"
#include "deepcam/geodot.hpp"
#include "deepcam/modelio.hpp"
#include "deepcam/netexec.hpp"
#include "deepcam/tuner.hpp"
#include "plot.hpp"

namespace deepcam::cli {
namespace fs = std::filesystem;

namespace {

std::size_t parse_size(const std::string& text, const std::string& what) {
  std::size_t v = 0;
  const char* end = text.data() + text.size();
  const auto [p, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc{} || p != end || text.empty()) throw ConfigError("bad " + what + ": '" + text + "'");
  return v;
}

std::vector<std::size_t> parse_size_list(const std::string& text, const std::string& what) {
  std::vector<std::size_t> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_size(item, what));
  if (out.empty()) throw ConfigError("empty " + what + " list");
  return out;
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::string join(const std::vector<std::size_t>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
  return s;
}

unsigned default_threads() { return std::max(1u, std::thread::hardware_concurrency()); }

CostTable load_cost_table(const std::string& flag) {
  std::string path = flag;
  if (path.empty())
    if (const char* env = std::getenv("DEEPCAM_COST_TABLE")) path = env;
  if (path.empty()) return CostTable::defaults();
  CostTable table = CostTable::from_config(KeyValueConfig::load(path));
  table.check_shape();
  return table;
}

void write_plot(const std::string& dir, const std::string& name, const std::string& svg) {
  if (dir.empty()) return;
  fs::create_directories(dir);
  write_text(fs::path(dir) / name, svg);
}

void plot_costs(const std::string& dir, const std::string& name, const CostReport& report) {
  if (dir.empty()) return;
  std::vector<std::string> cats;
  plot::Series cam{"CAM cycles", {}}, sys{"systolic cycles", {}};
  for (const auto& l : report.layers) {
    if (l.kind != "dot") continue;
    cats.push_back("L" + std::to_string(l.layer));
    cam.values.push_back(l.cycles);
    sys.values.push_back(l.baseline_cycles.value_or(NAN));
  }
  write_plot(dir, name, plot::bar_chart("Cycles per dot-product layer", cats, {cam, sys}, true));
}

/// Prints the headline numbers shared by `run` and `cost`.
void print_cost_summary(std::ostream& out, const CostReport& report, bool peak_utilization) {
  out << "cycles: " << fmt(report.cycles) << "\n";
  out << "energy_pj: " << fmt(report.energy_pj) << "\n";
  out << "utilization: " << fmt(peak_utilization ? report.utilization_peak : report.utilization)
      << (peak_utilization ? " (peak)" : "") << "\n";
  if (report.baseline_cycles) {
    out << "baseline_cycles: " << fmt(*report.baseline_cycles) << "\n";
    if (report.cycles > 0) out << "baseline_ratio: " << fmt(*report.baseline_cycles / report.cycles) << "\n";
  }
}

struct Common {
  std::size_t rows = 64;
  std::string dataflow = "as";
  std::string hash = "uniform:1024";
  std::uint64_t seed = 0;
  unsigned threads = default_threads();
  std::string cost_table;
  std::string plot_dir;
  bool peak_utilization = false;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--rows", c.rows, "CAM rows (64, 128, 256 or 512)")->capture_default_str();
  cmd->add_option("--dataflow", c.dataflow, "ws or as")->capture_default_str();
  cmd->add_option("--seed", c.seed, "projection seed")->capture_default_str();
  cmd->add_option("--threads", c.threads, "worker threads")->check(CLI::PositiveNumber);
  cmd->add_option("--cost-table", c.cost_table, "cost table file (default: $DEEPCAM_COST_TABLE)");
  cmd->add_option("--plot", c.plot_dir, "directory for SVG plots");
  cmd->add_flag("--peak-utilization", c.peak_utilization, "report max tile fill per layer");
}

ExecutionPlan make_plan(const NetworkModel& model, const Common& c) {
  ExecutionPlan plan;
  plan.dataflow = parse_dataflow(c.dataflow);
  plan.cam.rows = c.rows;
  plan.cam.validate();
  plan.seed = c.seed;
  plan.hash_lengths = resolve_hash_spec(c.hash, model.dot_layers().size());
  plan.validate(model);
  return plan;
}

// --- run ---------------------------------------------------------------

struct RunArgs {
  Common common;
  std::string model, data, out_dir, arithmetic = "approx", cosine = "piecewise";
  std::optional<std::size_t> limit;
};

void precheck(const Common& c) {
  CamConfig cam;
  cam.rows = c.rows;
  cam.validate();
  parse_dataflow(c.dataflow);
}

int cmd_run(const RunArgs& a, std::ostream& out) {
  precheck(a.common);
  if (a.arithmetic != "approx" && a.arithmetic != "exact") throw ConfigError("arithmetic must be approx or exact");
  if (a.cosine != "piecewise" && a.cosine != "exact") throw ConfigError("cosine must be piecewise or exact");
  const NetworkModel model = load_model(a.model);
  const Dataset data = a.limit ? load_dataset(a.data, *a.limit) : load_dataset(a.data);
  if (data.dims != model.input)
    throw DimensionError("dataset samples are " + to_string(data.dims) + " but the model expects " +
                         to_string(model.input));
  ExecutionPlan plan = make_plan(model, a.common);
  if (a.arithmetic == "exact") plan.arithmetic = Arithmetic::kExact;
  if (a.cosine == "exact") plan.cosine = CosineMode::kExact;
  const CostTable table = load_cost_table(a.common.cost_table);

  const auto inputs = data.tensors();
  const NetworkResult result = run_network(model, plan, inputs, a.common.threads);
  const double acc = top1(result.predictions, data.labels);
  const CostReport report = fold_trace(result.trace, table);
  const std::string csv = report_csv(report, a.common.peak_utilization);

  std::size_t correct = 0;
  for (std::size_t i = 0; i < data.size(); ++i) correct += result.predictions[i] == data.labels[i];
  out << "samples: " << data.size() << "\n";
  out << "top1: " << fmt(acc) << " (" << correct << "/" << data.size() << ")\n";
  out << "hash_lengths: " << join(plan.hash_lengths) << "\n";
  print_cost_summary(out, report, a.common.peak_utilization);

  if (!a.out_dir.empty()) {
    fs::create_directories(a.out_dir);
    KeyValueConfig summary;
    summary.set("samples", std::to_string(data.size()));
    summary.set("correct", std::to_string(correct));
    summary.set("top1", fmt(acc));
    summary.set("arithmetic", a.arithmetic);
    summary.set("cosine", a.cosine);
    summary.set("dataflow", to_string(plan.dataflow));
    summary.set("rows", std::to_string(plan.cam.rows));
    summary.set("seed", std::to_string(plan.seed));
    summary.set("hash_lengths", join(plan.hash_lengths));
    summary.set("cycles", fmt(report.cycles));
    summary.set("energy_pj", fmt(report.energy_pj));
    if (report.baseline_cycles) summary.set("baseline_cycles", fmt(*report.baseline_cycles));
    write_text(fs::path(a.out_dir) / "summary.txt", summary.to_string());
    write_text(fs::path(a.out_dir) / "cost.csv", csv);
  } else {
    out << csv;
  }
  plot_costs(a.common.plot_dir, "run_cycles.svg", report);
  return kOk;
}

// --- dotbench ----------------------------------------------------------

struct DotbenchArgs {
  std::string ks = "64,128,256,512,1024";
  DotbenchConfig cfg;
  std::string out_file, plot_dir;
};

int cmd_dotbench(const DotbenchArgs& a, std::ostream& out) {
  DotbenchConfig cfg = a.cfg;
  cfg.ks = parse_size_list(a.ks, "k");
  const auto rows = dotbench(cfg);
  const std::string csv = dotbench_csv(rows);
  if (a.out_file.empty()) out << csv;
  else write_text(a.out_file, csv);

  if (!a.plot_dir.empty() && cfg.trials > 0) {
    std::vector<double> x(cfg.ks.begin(), cfg.ks.end());
    plot::Series pw{"piecewise", {}}, ex{"exact cos", {}};
    for (const auto& r : rows) {
      if (r.kind != "random") continue;
      (r.variant == "piecewise" ? pw : ex).values.push_back(r.median_abs);
    }
    write_plot(a.plot_dir, "dotbench.svg", plot::line_chart("Median |approx - exact|", "k", x, {pw, ex}, true));
  }
  return kOk;
}

// --- tune --------------------------------------------------------------

struct TuneArgs {
  Common common;
  std::string model, data, test, out_dir, candidates = "256,512,768,1024";
  double tolerance = 1.0;
  std::optional<std::size_t> limit;
};

int cmd_tune(const TuneArgs& a, std::ostream& out) {
  precheck(a.common);
  const NetworkModel model = load_model(a.model);
  const Dataset calib = a.limit ? load_dataset(a.data, *a.limit) : load_dataset(a.data);
  if (calib.dims != model.input) throw DimensionError("calibration samples do not match the model input");

  TuneConfig cfg;
  cfg.tolerance_points = a.tolerance;
  cfg.candidates = parse_size_list(a.candidates, "candidate");
  cfg.seed = a.common.seed;
  cfg.threads = a.common.threads;
  cfg.validate();
  Common common = a.common;
  common.hash = "uniform:" + std::to_string(cfg.candidates.back());
  const ExecutionPlan plan = make_plan(model, common);

  const TuneResult result = tune_hash_lengths(model, plan, calib, cfg);
  out << "hash_lengths: " << join(result.hash_lengths) << "\n";
  out << "total_bits: " << result.total_bits() << " (uniform max: "
      << cfg.candidates.back() * result.hash_lengths.size() << ")\n";
  out << "calibration baseline: " << fmt(result.baseline_accuracy) << "\n";
  out << "calibration achieved: " << fmt(result.achieved_accuracy) << "\n";

  if (!a.test.empty()) {
    const Dataset test = load_dataset(a.test);
    const auto inputs = test.tensors();
    ExecutionPlan tuned = plan;
    tuned.hash_lengths = result.hash_lengths;
    tuned.record_trace = false;
    out << "test top1 (tuned): " << fmt(top1(run_network(model, tuned, inputs, cfg.threads).predictions, test.labels))
        << "\n";
  }
  if (!a.out_dir.empty()) {
    fs::create_directories(a.out_dir);
    write_text(fs::path(a.out_dir) / "tuned.cfg", result.to_config_text());
    write_text(fs::path(a.out_dir) / "sensitivity.csv", result.sensitivity_csv());
  } else {
    out << result.sensitivity_csv();
  }
  if (!a.common.plot_dir.empty()) {
    std::vector<double> x(cfg.candidates.begin(), cfg.candidates.end());
    std::vector<plot::Series> series;
    for (std::size_t d = 0; d < result.dot_layers.size(); ++d)
      series.push_back({"L" + std::to_string(result.dot_layers[d]), result.sensitivity[d]});
    write_plot(a.common.plot_dir, "sensitivity.svg",
               plot::line_chart("Calibration Top-1, one layer varied", "k", x, series));
  }
  return kOk;
}

// --- cost --------------------------------------------------------------

struct CostArgs {
  Common common;
  std::string model, input, kernel = "5", out_file;
  std::uint32_t kernels = 0, stride = 1, pad = 0, runs = 1;
};

int cmd_cost(const CostArgs& a, std::ostream& out) {
  const CostTable table = load_cost_table(a.common.cost_table);
  const Dataflow dataflow = parse_dataflow(a.common.dataflow);
  CamConfig cam;
  cam.rows = a.common.rows;
  cam.validate();
  if (a.runs == 0) throw ConfigError("--runs must be at least 1");

  CostTrace trace;
  if (!a.model.empty()) {
    if (!a.input.empty() || a.kernels) throw ConfigError("--model excludes the single-layer options");
    const NetworkModel model = load_model(a.model);
    const auto ks = resolve_hash_spec(a.common.hash, model.dot_layers().size());
    trace = schedule_trace(model, dataflow, static_cast<std::uint32_t>(cam.rows), ks, a.runs);
  } else {
    if (a.input.empty() || a.kernels == 0) throw ConfigError("need --model, or --input and --kernels");
    const Dims in = parse_dims(a.input);
    ConvGeometry g;
    g.in_c = in.c;
    const auto pos = a.kernel.find('x');
    g.kernel_h = static_cast<std::uint32_t>(parse_size(a.kernel.substr(0, pos), "kernel size"));
    g.kernel_w = pos == std::string::npos ? g.kernel_h
                                          : static_cast<std::uint32_t>(parse_size(a.kernel.substr(pos + 1), "kernel size"));
    g.stride = a.stride;
    g.pad = a.pad;
    const auto ks = resolve_hash_spec(a.common.hash, 1);
    trace = schedule_conv_trace(in, a.kernels, g, dataflow, static_cast<std::uint32_t>(cam.rows), ks[0], a.runs);
  }
  const CostReport report = fold_trace(trace, table);
  const std::string csv = report_csv(report, a.common.peak_utilization);
  if (a.out_file.empty()) {
    out << csv;
  } else {
    write_text(a.out_file, csv);
    print_cost_summary(out, report, a.common.peak_utilization);
  }
  plot_costs(a.common.plot_dir, "cost_cycles.svg", report);
  return kOk;
}

}  // namespace

// --- public helpers -----------------------------------------------------

std::vector<std::size_t> resolve_hash_spec(const std::string& spec, std::size_t dot_layers) {
  const auto colon = spec.find(':');
  if (colon == std::string::npos) throw ConfigError("hash spec must be uniform:<k>, list:<k,...> or file:<path>");
  const std::string kind = spec.substr(0, colon), arg = spec.substr(colon + 1);
  std::vector<std::size_t> ks;
  if (kind == "uniform") ks.assign(dot_layers, parse_size(arg, "hash length"));
  else if (kind == "list") ks = parse_size_list(arg, "hash length");
  else if (kind == "file") ks = load_tuned_hash_lengths(arg);
  else throw ConfigError("unknown hash spec kind '" + kind + "'");
  if (ks.size() != dot_layers)
    throw ConfigError("hash spec gives " + std::to_string(ks.size()) + " lengths for " +
                      std::to_string(dot_layers) + " dot-product layers");
  for (std::size_t k : ks)
    if (!is_allowed_word_bits(k)) throw ConfigError("hash length " + std::to_string(k) + " is not 256/512/768/1024");
  return ks;
}

Dims parse_dims(const std::string& text) {
  std::vector<std::uint32_t> parts;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, 'x')) {
    const std::size_t v = parse_size(item, "dimension");
    if (v == 0 || v > 0xFFFFFFFFu) throw ConfigError("dimension out of range in '" + text + "'");
    parts.push_back(static_cast<std::uint32_t>(v));
  }
  if (parts.size() == 2) return {1, parts[0], parts[1]};
  if (parts.size() == 3) return {parts[0], parts[1], parts[2]};
  throw ConfigError("dims must be CxHxW or HxW, got '" + text + "'");
}

double quantile(std::vector<double> values, double q) {
  if (values.empty()) return NAN;
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

std::vector<DotbenchRow> dotbench(const DotbenchConfig& cfg) {
  if (cfg.ks.empty()) throw ConfigError("dotbench needs at least one k");
  for (std::size_t k : cfg.ks)
    if (k < 8) throw ConfigError("dotbench k must be at least 8");
  if (cfg.dim == 0) throw ConfigError("dotbench dimension must be positive");
  std::vector<DotbenchRow> rows;
  if (cfg.trials == 0) return rows;
  const std::size_t kmax = *std::max_element(cfg.ks.begin(), cfg.ks.end());
  const auto n = static_cast<Eigen::Index>(cfg.dim);
  constexpr CosineMode kModes[] = {CosineMode::kPiecewise, CosineMode::kExact};
  constexpr const char* kNames[] = {"piecewise", "exact_cos"};

  // errors[k index][mode] -> (abs, rel) samples
  std::vector<std::array<std::vector<double>, 2>> abs_err(cfg.ks.size()), rel_err(cfg.ks.size());
  for (std::size_t t = 0; t < cfg.trials; ++t) {
    const std::uint64_t s = splitmix64(cfg.seed ^ splitmix64(t + 1));
    Eigen::VectorXd x(n), y(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      x[i] = counter_normal(s, static_cast<std::uint64_t>(i));
      y[i] = counter_normal(s, static_cast<std::uint64_t>(n + i));
    }
    const ProjectionMatrix c(splitmix64(s), n, static_cast<Eigen::Index>(kmax));
    const Context cx = build_context(x, c), cy = build_context(y, c);
    const double exact = algebraic_dot(x, y);
    for (std::size_t ki = 0; ki < cfg.ks.size(); ++ki) {
      const std::size_t k = cfg.ks[ki];
      const std::size_t hd = hamming_distance(cx.hash.prefix(k), cy.hash.prefix(k));
      for (int m = 0; m < 2; ++m) {
        const double err = std::abs(geometric_dot(cx.norm, cy.norm, hd, k, kModes[m]) - exact);
        abs_err[ki][m].push_back(err);
        rel_err[ki][m].push_back(err / std::abs(exact));
      }
    }
  }
  for (std::size_t ki = 0; ki < cfg.ks.size(); ++ki)
    for (int m = 0; m < 2; ++m) {
      DotbenchRow r;
      r.kind = "random";
      r.k = cfg.ks[ki];
      r.variant = kNames[m];
      r.trials = cfg.trials;
      r.median_abs = quantile(abs_err[ki][m], 0.5);
      r.p95_abs = quantile(abs_err[ki][m], 0.95);
      r.median_rel = quantile(rel_err[ki][m], 0.5);
      r.p95_rel = quantile(rel_err[ki][m], 0.95);
      rows.push_back(std::move(r));
    }

  // The worked pair from the method description, over independent projections.
  const Eigen::Vector4d px(0.6012, 0.8383, 0.6859, 0.5712), py(0.9044, 0.5352, 0.8110, 0.9243);
  const double exact = algebraic_dot(px, py);
  std::vector<std::array<std::vector<double>, 2>> approx(cfg.ks.size());
  for (std::size_t t = 0; t < cfg.pair_seeds; ++t) {
    const ProjectionMatrix c(splitmix64(cfg.seed + 0x9E3779B97F4A7C15ULL * (t + 1)), 4,
                             static_cast<Eigen::Index>(kmax));
    const Context cx = build_context(px, c), cy = build_context(py, c);
    for (std::size_t ki = 0; ki < cfg.ks.size(); ++ki) {
      const std::size_t k = cfg.ks[ki];
      const std::size_t hd = hamming_distance(cx.hash.prefix(k), cy.hash.prefix(k));
      for (int m = 0; m < 2; ++m) approx[ki][m].push_back(geometric_dot(cx.norm, cy.norm, hd, k, kModes[m]));
    }
  }
  for (std::size_t ki = 0; ki < cfg.ks.size() && cfg.pair_seeds > 0; ++ki)
    for (int m = 0; m < 2; ++m) {
      std::vector<double> abs, rel;
      for (double v : approx[ki][m]) {
        abs.push_back(std::abs(v - exact));
        rel.push_back(std::abs(v - exact) / exact);
      }
      DotbenchRow r;
      r.kind = "worked_pair";
      r.k = cfg.ks[ki];
      r.variant = kNames[m];
      r.trials = cfg.pair_seeds;
      r.algebraic = exact;
      r.median_approx = quantile(approx[ki][m], 0.5);
      r.median_abs = quantile(abs, 0.5);
      r.p95_abs = quantile(abs, 0.95);
      r.median_rel = quantile(rel, 0.5);
      r.p95_rel = quantile(rel, 0.95);
      rows.push_back(std::move(r));
    }
  return rows;
}

std::string dotbench_csv(const std::vector<DotbenchRow>& rows) {
  std::string s =
      "kind,k,variant,trials,algebraic,median_approx,median_abs_err,p95_abs_err,median_rel_err,p95_rel_err\n";
  for (const auto& r : rows) {
    const bool pair = r.kind == "worked_pair";
    s += r.kind + ',' + std::to_string(r.k) + ',' + r.variant + ',' + std::to_string(r.trials) + ',' +
         (pair ? fmt(r.algebraic) : "") + ',' + (pair ? fmt(r.median_approx) : "") + ',' + fmt(r.median_abs) +
         ',' + fmt(r.p95_abs) + ',' + fmt(r.median_rel) + ',' + fmt(r.p95_rel) + '\n';
  }
  return s;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Behavioral simulator for CAM-based approximate CNN inference"};
  app.name("deepcam");
  app.require_subcommand(1);

  RunArgs run;
  auto* run_cmd = app.add_subcommand("run", "inference on a dataset with cost report");
  run_cmd->add_option("--model", run.model, "model file")->required();
  run_cmd->add_option("--data", run.data, "dataset file")->required();
  run_cmd->add_option("--hash", run.common.hash, "uniform:<k> | list:<k,...> | file:<tuned.cfg>")
      ->capture_default_str();
  run_cmd->add_option("--limit", run.limit, "use the first N samples");
  run_cmd->add_option("--out", run.out_dir, "write summary.txt and cost.csv here");
  run_cmd->add_option("--arithmetic", run.arithmetic, "approx or exact")->capture_default_str();
  run_cmd->add_option("--cosine", run.cosine, "piecewise or exact")->capture_default_str();
  add_common(run_cmd, run.common);

  DotbenchArgs bench;
  auto* bench_cmd = app.add_subcommand("dotbench", "approximate vs algebraic dot-product error");
  bench_cmd->add_option("--k", bench.ks, "comma-separated hash lengths")->capture_default_str();
  bench_cmd->add_option("--trials", bench.cfg.trials, "random pairs")->capture_default_str();
  bench_cmd->add_option("--dim", bench.cfg.dim, "vector length")->capture_default_str();
  bench_cmd->add_option("--pair-seeds", bench.cfg.pair_seeds, "projections for the worked pair")
      ->capture_default_str();
  bench_cmd->add_option("--seed", bench.cfg.seed)->capture_default_str();
  bench_cmd->add_option("--out", bench.out_file, "CSV path (default stdout)");
  bench_cmd->add_option("--plot", bench.plot_dir, "directory for SVG plots");

  TuneArgs tune;
  auto* tune_cmd = app.add_subcommand("tune", "per-layer hash lengths under an accuracy budget");
  tune_cmd->add_option("--model", tune.model)->required();
  tune_cmd->add_option("--data", tune.data, "calibration dataset")->required();
  tune_cmd->add_option("--test", tune.test, "held-out dataset to score the result on");
  tune_cmd->add_option("--tolerance", tune.tolerance, "allowed drop in points")->capture_default_str();
  tune_cmd->add_option("--candidates", tune.candidates)->capture_default_str();
  tune_cmd->add_option("--limit", tune.limit, "use the first N calibration samples");
  tune_cmd->add_option("--out", tune.out_dir, "write tuned.cfg and sensitivity.csv here");
  add_common(tune_cmd, tune.common);

  CostArgs cost;
  auto* cost_cmd = app.add_subcommand("cost", "schedule-only cost report");
  cost_cmd->add_option("--model", cost.model, "model file");
  cost_cmd->add_option("--input", cost.input, "single conv layer: input CxHxW");
  cost_cmd->add_option("--kernels", cost.kernels, "single conv layer: output channels");
  cost_cmd->add_option("--kernel", cost.kernel, "single conv layer: R or RxS")->capture_default_str();
  cost_cmd->add_option("--stride", cost.stride)->capture_default_str();
  cost_cmd->add_option("--pad", cost.pad)->capture_default_str();
  cost_cmd->add_option("--runs", cost.runs, "inferences to account for")->capture_default_str();
  cost_cmd->add_option("--hash", cost.common.hash, "uniform:<k> | list:<k,...> | file:<tuned.cfg>")
      ->capture_default_str();
  cost_cmd->add_option("--out", cost.out_file, "CSV path (default stdout)");
  add_common(cost_cmd, cost.common);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kValidation;
  }

  try {
    if (*run_cmd) return cmd_run(run, out);
    if (*bench_cmd) return cmd_dotbench(bench, out);
    if (*tune_cmd) return cmd_tune(tune, out);
    if (*cost_cmd) return cmd_cost(cost, out);
  } catch (const IoError& e) {
    err << "error: " << e.what() << "\n";
    return kIo;
  } catch (const FormatError& e) {
    err << "error: " << e.what() << "\n";
    return kIo;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kIo;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kValidation;
  } catch (const DimensionError& e) {
    err << "error: " << e.what() << "\n";
    return kValidation;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return kInternal;
  }
  return kInternal;
}

}  // namespace deepcam::cli
