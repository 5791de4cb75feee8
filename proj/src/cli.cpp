#include "rpi/cli.hpp"

#include <cmath>
#include <filesystem>
#include <ostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "rpi/config.hpp"
#include "rpi/diagnostics.hpp"
#include "rpi/errors.hpp"
#include "rpi/io.hpp"
#include "rpi/process.hpp"

namespace rpi {

namespace {

using Json = nlohmann::ordered_json;
namespace fs = std::filesystem;

struct Context {
  ExperimentConfig cfg;
  fs::path out_dir;
  bool verbose = false;
  bool dump_window = false;
  std::ostream* log = nullptr;

  void info(const std::string& msg) const { *log << "[rpi] " << msg << '\n'; }
  void detail(const std::string& msg) const {
    if (verbose) info(msg);
  }
  void write(const std::string& name, const std::string& content) const {
    write_file_atomic(out_dir / name, content);
    detail("wrote " + (out_dir / name).string());
  }
  void write(const std::string& name, const Json& j) const { write(name, j.dump(2) + "\n"); }
};

struct Outcome {
  int code = kExitPass;
  Json summary;
};

const InterarrivalLaw& need_law(const ExperimentConfig& c) {
  if (!c.law) throw ConfigError("law", "required for this command");
  return *c.law;
}

const KernelSpec& need_kernel(const ExperimentConfig& c) {
  if (!c.kernel) throw ConfigError("kernel", "required for this command");
  return *c.kernel;
}

Json metadata(const Context& ctx, const std::string& command) {
  Json j;
  j["command"] = command;
  j["config"] = ctx.cfg.source;
  return j;
}

Outcome cmd_simulate(const Context& ctx) {
  const auto& cfg = ctx.cfg;
  const auto& law = need_law(cfg);
  const auto& kernel = need_kernel(cfg);
  if (!cfg.t) throw ConfigError("t", "required for simulate");
  ctx.info("transient fdd sample: t = " + format_shortest(*cfg.t) + ", " +
           std::to_string(cfg.n_replicates) + " replicates");
  const FddMatrix m = fdd_sample(law, kernel, FddMode::transient(*cfg.t), cfg.u_grid,
                                 cfg.n_replicates, RngStream(cfg.seed));
  ctx.write("fdd.csv", fdd_csv(m));
  Json meta = metadata(ctx, "simulate");
  meta["rows"] = m.rows;
  meta["cols"] = m.cols();
  ctx.write("metadata.json", meta);
  Outcome o;
  o.summary["rows"] = m.rows;
  o.summary["cols"] = m.cols();
  return o;
}

Outcome cmd_stationary(const Context& ctx) {
  const auto& cfg = ctx.cfg;
  const auto& law = need_law(cfg);
  const auto& kernel = need_kernel(cfg);
  StationaryOptions opts;
  opts.c_max = cfg.c_max;
  Outcome o;
  FddMatrix m;
  try {
    m = fdd_sample(law, kernel, FddMode::stationary_mode(cfg.tol, opts), cfg.u_grid,
                   cfg.n_replicates, RngStream(cfg.seed));
  } catch (const TruncationError& e) {
    ctx.info(std::string("truncation failed: ") + e.what());
    Json rep = metadata(ctx, "stationary");
    rep["error"] = "truncation";
    rep["message"] = e.what();
    rep["c_reached"] = json_number(e.c_reached());
    rep["bound"] = json_number(e.bound());
    rep["tol"] = cfg.tol;
    ctx.write("truncation.json", rep);
    o.code = kExitReject;
    o.summary["error"] = "truncation";
    o.summary["bound"] = json_number(e.bound());
    return o;
  }
  ctx.info("stationary fdd sample: c = " + format_shortest(m.plan->c) +
           ", truncation bound = " + format_shortest(m.plan->bound));
  ctx.write("fdd.csv", fdd_csv(m));
  Json meta = metadata(ctx, "stationary");
  meta["rows"] = m.rows;
  meta["cols"] = m.cols();
  meta["c"] = m.plan->c;
  meta["truncation_bound"] = json_number(m.plan->bound);
  meta["quantile_majorant"] = m.plan->quantile_majorant;
  if (ctx.dump_window) {
    // Same streams as replicate 0, so the dump shows that replicate's points.
    const double c = cfg.window_c.value_or(m.plan->c);
    const StationaryWindow w =
        StationaryWindow::build(law, c, RngStream(cfg.seed).child(0).child(20));
    ctx.write("window.csv", window_csv(w));
    meta["window_c"] = c;
  }
  ctx.write("metadata.json", meta);
  o.summary["rows"] = m.rows;
  o.summary["c"] = m.plan->c;
  o.summary["truncation_bound"] = json_number(m.plan->bound);
  return o;
}

Outcome cmd_converge(const Context& ctx) {
  const auto& cfg = ctx.cfg;
  const auto& law = need_law(cfg);
  const auto& kernel = need_kernel(cfg);
  if (cfg.t_list.empty()) throw ConfigError("t_list", "required for converge");
  ConvergenceOptions opts;
  opts.n_permutations = cfg.n_permutations;
  opts.tol = cfg.tol;
  opts.stationary.c_max = cfg.c_max;
  ctx.info("convergence test over " + std::to_string(cfg.t_list.size()) + " times, " +
           std::to_string(cfg.n_replicates) + " replicates each");
  const ConvergenceResult res = convergence_test(law, kernel, cfg.t_list, cfg.u_grid,
                                                 cfg.n_replicates, cfg.alpha, cfg.seed, opts);
  for (const auto& w : res.warnings) ctx.info("warning: " + w);

  std::string csv = "t";
  for (double u : cfg.u_grid) csv += ",ks_p_u=" + format_shortest(u);
  csv += ",energy_p,reject\n";
  for (std::size_t i = 0; i < res.reports.size(); ++i) {
    const auto& r = res.reports[i];
    ctx.write("comparison_" + std::to_string(i) + ".json", to_json(r));
    csv += format_g17(r.t);
    for (const auto& k : r.ks) csv += "," + format_g17(k.p_value);
    csv += "," + format_g17(r.energy.p_value) + "," + (r.reject ? "1" : "0") + "\n";
    ctx.info("t = " + format_shortest(r.t) + ": " + (r.reject ? "reject" : "no rejection") +
             " (energy p = " + format_shortest(r.energy.p_value) + ")");
  }
  if (!res.reports.empty()) ctx.write("summary.csv", csv);

  Json rep = metadata(ctx, "converge");
  rep["warnings"] = res.warnings;
  rep["hypothesis_violation"] =
      res.hypothesis_violation ? Json(*res.hypothesis_violation) : Json(nullptr);
  rep["rejection_decays"] = res.rejection_decays;
  auto tmax = Json::array();
  for (double v : res.transient_max_abs) tmax.push_back(json_number(v));
  rep["transient_max_abs"] = tmax;
  auto decisions = Json::array();
  for (const auto& r : res.reports) decisions.push_back({{"t", r.t}, {"reject", r.reject}});
  rep["decisions"] = decisions;

  Outcome o;
  if (res.hypothesis_violation) {
    ctx.info("hypothesis violation: " + *res.hypothesis_violation);
    o.code = kExitInconclusive;
  } else if (!res.warnings.empty()) {
    o.code = kExitInconclusive;
  } else {
    o.code = res.reports.back().reject ? kExitReject : kExitPass;
  }
  ctx.write("converge.json", rep);
  o.summary["warnings"] = res.warnings;
  o.summary["hypothesis_violation"] = res.hypothesis_violation.has_value();
  o.summary["rejection_decays"] = res.rejection_decays;
  o.summary["final_reject"] = res.reports.empty() ? Json(nullptr) : Json(res.reports.back().reject);
  return o;
}

Outcome cmd_dri(const Context& ctx) {
  const auto& cfg = ctx.cfg;
  const auto& kernel = need_kernel(cfg);
  const RngStream rng(cfg.seed);
  const DriReport mean =
      dri_mean_check(kernel, cfg.dri.k_max, cfg.dri.grid_per_unit, cfg.dri.n_mc, rng);
  const DriReport path = dri_path_check(kernel, cfg.dri.k_max, cfg.dri.n_mc, rng);
  ctx.info("mean criterion: " + to_string(mean.verdict) + " (" + mean.reason + ")");
  ctx.info("path criterion: " + to_string(path.verdict) + " (" + path.reason + ")");
  ctx.write("dri_mean.json", to_json(mean));
  ctx.write("dri_path.json", to_json(path));
  ctx.write("dri.csv", dri_csv(mean, path));

  Outcome o;
  std::string explanation;
  if (mean.verdict == Verdict::ConvergentEvidence && path.verdict == Verdict::ConvergentEvidence) {
    o.code = kExitPass;
    explanation = "both criteria show convergent evidence";
  } else if (mean.verdict == Verdict::DivergentEvidence &&
             path.verdict == Verdict::DivergentEvidence) {
    o.code = kExitReject;
    explanation = "both criteria show divergent evidence";
  } else {
    o.code = kExitInconclusive;
    explanation = "mean criterion " + to_string(mean.verdict) + ", path criterion " +
                  to_string(path.verdict);
  }
  ctx.info(explanation);
  o.summary["mean_verdict"] = to_string(mean.verdict);
  o.summary["path_verdict"] = to_string(path.verdict);
  o.summary["explanation"] = explanation;
  return o;
}

Outcome cmd_pointprocess(const Context& ctx) {
  const auto& cfg = ctx.cfg;
  const auto& law = need_law(cfg);
  const auto& pp = cfg.pointprocess;
  const RngStream root(cfg.seed);
  std::vector<std::string> warnings;
  if (law.is_lattice())
    warnings.push_back("interarrival law is lattice with span " +
                       format_shortest(*law.lattice_span()));
  bool pass = true;
  Json rep = metadata(ctx, "pointprocess");

  auto intensity = Json::array();
  for (const auto& r : intensity_check(law, pp.intervals, pp.n_windows, root.child(0))) {
    const bool ok = std::abs(r.z_score) < 4.0;
    pass = pass && ok;
    intensity.push_back({{"a", r.a},
                         {"b", r.b},
                         {"empirical_mean", r.empirical_mean},
                         {"expected", r.expected},
                         {"standard_error", r.standard_error},
                         {"z_score", json_number(r.z_score)},
                         {"pass", ok}});
  }
  rep["intensity"] = intensity;

  const OvershootReport over =
      overshoot_check(law, pp.horizon, pp.n_realizations, root.child(1));
  if (over.short_horizon_warning)
    warnings.push_back("overshoot horizon is shorter than 20 mean interarrival times");
  const bool over_ok = over.ks.p_value > cfg.alpha;
  pass = pass && over_ok;
  rep["overshoot"] = {{"horizon", over.horizon},
                      {"ks", to_json(over.ks)},
                      {"lattice_warning", over.lattice_warning},
                      {"short_horizon_warning", over.short_horizon_warning},
                      {"pass", over_ok}};

  const TestResult shift = shift_invariance_check(law, pp.shift, pp.shift_windows, root.child(2));
  const bool shift_ok = shift.p_value > cfg.alpha;
  pass = pass && shift_ok;
  rep["shift_invariance"] = {{"shift", pp.shift}, {"test", to_json(shift)}, {"pass", shift_ok}};

  const LaplaceComparison lap =
      laplace_functional_compare(law, pp.laplace_h, pp.laplace_t, pp.laplace_n_mc, root.child(3));
  const double gap = std::abs(lap.transient_estimate - lap.stationary_estimate);
  const double allowed = std::hypot(lap.transient_halfwidth, lap.stationary_halfwidth);
  const bool lap_ok = gap <= allowed;
  pass = pass && lap_ok;
  rep["laplace"] = {{"t", pp.laplace_t},
                    {"transient_estimate", lap.transient_estimate},
                    {"transient_halfwidth", lap.transient_halfwidth},
                    {"stationary_estimate", lap.stationary_estimate},
                    {"stationary_halfwidth", lap.stationary_halfwidth},
                    {"lattice_warning", lap.lattice_warning},
                    {"pass", lap_ok}};
  rep["warnings"] = warnings;
  rep["pass"] = pass;
  ctx.write("pointprocess.json", rep);

  for (const auto& w : warnings) ctx.info("warning: " + w);
  ctx.info(std::string("point process checks ") + (pass ? "pass" : "fail"));
  Outcome o;
  o.code = !warnings.empty() ? kExitInconclusive : (pass ? kExitPass : kExitReject);
  o.summary["pass"] = pass;
  o.summary["warnings"] = warnings;
  return o;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Random processes with immigration: simulation and diagnostics"};
  app.require_subcommand(1);
  std::string config_path, out_dir;
  bool verbose = false, dump_window = false;

  auto add = [&](const std::string& name, const std::string& help) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("config", config_path, "experiment config (JSON)")->required();
    sub->add_option("--out", out_dir, "output directory (overrides output_dir)");
    sub->add_flag("-v,--verbose", verbose, "verbose log");
    return sub;
  };
  add("simulate", "transient fdd sample");
  add("stationary", "stationary fdd sample")
      ->add_flag("--dump-window", dump_window, "also write the stationary window of replicate 0");
  add("converge", "convergence-to-stationarity test");
  add("dri", "direct Riemann integrability criteria");
  add("pointprocess", "stationary point process checks");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    err << app.help();
    return kExitConfig;
  } catch (const CLI::ParseError& e) {
    err << "[rpi] usage error: " << e.what() << '\n' << app.help();
    Json s{{"exit_code", int(kExitConfig)}, {"error", "usage"}, {"message", e.what()}};
    out << s.dump() << '\n';
    return kExitConfig;
  }
  const std::string command = app.get_subcommands().front()->get_name();

  Json summary;
  summary["command"] = command;
  int code = kExitConfig;
  try {
    Context ctx;
    ctx.cfg = load_config(config_path);
    ctx.out_dir = out_dir.empty() ? fs::path(ctx.cfg.output_dir) : fs::path(out_dir);
    ctx.verbose = verbose;
    ctx.dump_window = dump_window;
    ctx.log = &err;
    Outcome o;
    if (command == "simulate") o = cmd_simulate(ctx);
    else if (command == "stationary") o = cmd_stationary(ctx);
    else if (command == "converge") o = cmd_converge(ctx);
    else if (command == "dri") o = cmd_dri(ctx);
    else o = cmd_pointprocess(ctx);
    code = o.code;
    for (auto& [k, v] : o.summary.items()) summary[k] = v;
    summary["out"] = ctx.out_dir.string();
  } catch (const ConfigError& e) {
    err << "[rpi] config error: " << e.what() << '\n';
    summary["error"] = "config";
    summary["field"] = e.field();
    summary["message"] = e.what();
    code = kExitConfig;
  } catch (const std::exception& e) {
    err << "[rpi] error: " << e.what() << '\n';
    summary["error"] = "runtime";
    summary["message"] = e.what();
    code = kExitConfig;
  }
  Json line;
  line["command"] = command;
  line["exit_code"] = code;
  for (auto& [k, v] : summary.items())
    if (k != "command") line[k] = v;
  out << line.dump() << '\n';
  return code;
}

}  // namespace rpi
