#include "cocycle_lab/lab.hpp"

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "cocycle_lab/errors.hpp"

#ifndef COCYCLE_LAB_VERSION
#define COCYCLE_LAB_VERSION "unknown"
#endif

namespace cocycle_lab {

using nlohmann::json;

std::string format_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

const std::vector<std::string>& subcommands() {
  static const std::vector<std::string> names{"spectrum", "bunching", "pinching", "twisting",
                                              "monotone", "perturb", "sweep"};
  return names;
}

// ---------------------------------------------------------------------------
// JSON

json yaml_to_json(const YAML::Node& n) {
  if (!n || n.IsNull()) return nullptr;
  if (n.IsSequence()) {
    json a = json::array();
    for (const auto& x : n) a.push_back(yaml_to_json(x));
    return a;
  }
  if (n.IsMap()) {
    json o = json::object();
    for (const auto& kv : n) o[kv.first.as<std::string>()] = yaml_to_json(kv.second);
    return o;
  }
  const std::string s = n.Scalar();
  if (n.Tag() == "!") return s;  // quoted
  if (s == "true" || s == "false") return s == "true";
  try {
    std::size_t pos = 0;
    const long long i = std::stoll(s, &pos);
    if (pos == s.size()) return i;
  } catch (...) {
  }
  try {
    std::size_t pos = 0;
    const double d = std::stod(s, &pos);
    if (pos == s.size()) return d;
  } catch (...) {
  }
  return s;
}

json matrix_json(const Mat& m) {
  json a = json::array();
  for (int i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (int j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    a.push_back(row);
  }
  return a;
}

json to_json(const LyapunovReport& r) {
  return {{"exponents", r.exponents},
          {"stderr", r.stderr_},
          {"n", r.n},
          {"orbits", r.orbits},
          {"seed", r.seed},
          {"reortho_interval", r.reortho_interval},
          {"symmetry_defect", r.symmetry_defect},
          {"measure", r.measure}};
}

json to_json(const FiberBunchingCertificate& c) {
  return {{"alpha", c.alpha},
          {"c3", c.c3},
          {"theta_rate", c.theta_rate},
          {"tail_theta", c.tail_theta},
          {"pass", c.pass},
          {"grid_resolution", c.grid_resolution},
          {"horizon", c.horizon},
          {"log_sup", c.log_sup},
          {"holonomy_constant", c.holonomy_constant}};
}

json to_json(const PinchingVerdict& v) {
  json j{{"leaf_point", {v.leaf_point(0), v.leaf_point(1)}},
         {"period", v.period},
         {"method", v.method},
         {"estimate", v.estimate},
         {"error", v.error},
         {"exponents", v.exponents},
         {"samples", v.samples},
         {"verdict", to_string(v.verdict)},
         {"gap_fractions", v.gap_fractions},
         {"measure", v.measure}};
  if (v.spectrum) j["spectrum"] = to_json(*v.spectrum);
  return j;
}

json to_json(const TwistingVerdict& v) {
  return {{"j", v.j},
          {"fractions", v.fractions},
          {"epsilon_angle", v.epsilon_angle},
          {"floor", v.floor},
          {"samples", v.samples},
          {"excluded", v.excluded},
          {"verdict", to_string(v.verdict)},
          {"diagnostic", v.diagnostic}};
}

json to_json(const MonotonicityResult& m) {
  return {{"margin", m.margin},       {"pass", m.pass},
          {"worst_t", m.worst_t},     {"worst_w_angle", m.worst_w_angle},
          {"pairs", m.pairs}};
}

json to_json(const PositivityReport& r) {
  json j{{"perturbed", r.perturbed},
         {"obstruction", r.obstruction},
         {"total_size", r.total_size},
         {"budget", r.budget},
         {"success", r.success},
         {"log", r.log}};
  json pin = json::array();
  for (std::size_t i = 0; i < r.pinching.size(); ++i) {
    json p = to_json(r.pinching[i]);
    p["theta"] = r.pinching_thetas[i];
    pin.push_back(p);
  }
  j["pinching"] = pin;
  j["certificate"] = r.certificate ? to_json(*r.certificate) : json(nullptr);
  j["twisting_before"] = r.twisting_before ? to_json(*r.twisting_before) : json(nullptr);
  j["twisting_after"] = r.twisting_after ? to_json(*r.twisting_after) : json(nullptr);
  j["spectrum_before"] = r.spectrum_before ? to_json(*r.spectrum_before) : json(nullptr);
  j["spectrum_after"] = r.spectrum_after ? to_json(*r.spectrum_after) : json(nullptr);
  return j;
}

// ---------------------------------------------------------------------------

namespace {

std::string utc_now() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

struct Context {
  const RunOptions& opts;
  Scenario sc;
  std::ofstream log;
  json results = json::object();
  json perturbations = json::array();
  std::string csv_name;

  Context(const RunOptions& o, Scenario s) : opts(o), sc(std::move(s)) {}

  void note(const std::string& s) { log << s << '\n'; }

  PeriodicLeaf leaf(const SkewProduct& f) const { return select_leaf(f, sc.leaf_period, sc.leaf_index); }

  LyapunovOptions spectrum_options() const {
    LyapunovOptions lo;
    lo.n = sc.spectrum.n;
    lo.orbits = sc.spectrum.orbits;
    lo.warmup = sc.spectrum.warmup;
    lo.reortho_interval = sc.spectrum.reortho_interval;
    lo.seed = derive_seed(sc.seed, 0);
    lo.jobs = opts.jobs;
    return lo;
  }

  PinchingOptions pinching_options() const {
    auto p = sc.pinching;
    p.jobs = opts.jobs;
    return p;
  }

  void write_csv(const std::string& name, const std::vector<std::vector<std::string>>& rows, int dim) {
    csv_name = name;
    std::ofstream out(std::filesystem::path(opts.out_dir) / name, std::ios::binary);
    out << "# cocycle_lab " << opts.subcommand << " generated " << utc_now() << '\n';
    out << "parameter";
    for (int i = 1; i <= dim; ++i) out << ",lambda_" << i;
    out << ",stderr,n,verdict\n";
    for (const auto& row : rows) {
      for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << row[i];
      out << '\n';
    }
  }

  std::vector<std::string> csv_row(double param, const LyapunovReport& r, const std::string& verdict) {
    std::vector<std::string> row{format_number(param)};
    for (double e : r.exponents) row.push_back(format_number(e));
    row.push_back(format_number(r.max_stderr()));
    row.push_back(std::to_string(r.n));
    row.push_back(verdict);
    return row;
  }

  int spectrum() {
    const auto f = sc.skew_product();
    const auto rep = lyapunov_spectrum(SkewCocycle(sc.cocycle(), f), spectrum_options());
    note("spectrum: lambda = " + json(rep.exponents).dump() + " stderr = " + json(rep.stderr_).dump());
    results["spectrum"] = to_json(rep);
    write_csv("spectrum.csv", {csv_row(0.0, rep, "-")}, 2 * sc.half_dim);
    return kExitOk;
  }

  int bunching() {
    const auto cert = certify_fiber_bunching(sc.cocycle(), sc.skew_product(), sc.bunching.horizon, sc.bunching.grid);
    note("bunching: theta_rate=" + format_number(cert.theta_rate) + " C3=" + format_number(cert.c3) +
         (cert.pass ? " pass" : " fail"));
    results["certificate"] = to_json(cert);
    return cert.pass ? kExitOk : kExitInconclusive;
  }

  int pinching() {
    const auto f = sc.skew_product();
    const auto v = weak_pinching_test(sc.cocycle(), f, leaf(f), pinching_options());
    note(std::string("pinching: ") + v.method + " estimate=" + format_number(v.estimate) + " +- " +
         format_number(v.error) + " verdict=" + to_string(v.verdict));
    results["pinching"] = to_json(v);
    return v.verdict == Verdict::Positive ? kExitOk : kExitInconclusive;
  }

  int twisting() {
    const auto f = sc.skew_product();
    const auto lf = leaf(f);
    CocycleField a = sc.cocycle();
    const auto pv = weak_pinching_test(a, f, lf, pinching_options());
    results["pinching"] = to_json(pv);
    note(std::string("pinching: ") + to_string(pv.verdict));
    if (pv.verdict != Verdict::Positive) {
      note("twisting: skipped, Oseledets frames need a pinching leaf");
      results["twisting"] = nullptr;
      return kExitInconclusive;
    }
    json loops = json::array();
    bool twisting = false;
    for (int idx : sc.homoclinic_indices) {
      const HomoclinicLoop loop = make_loop(f, lf, idx, sc.homoclinic_budget);
      CocycleField b = a;
      if (!sc.twisting_sigma.empty()) {
        auto pert = transvection_perturbation(a, f, loop, sc.twisting_sigma, sc.perturb.bump_radius,
                                              sc.homoclinic_budget);
        b = pert.field;
        perturbations.push_back({{"name", "transvection"},
                                 {"homoclinic_index", idx},
                                 {"radius", pert.radius},
                                 {"sup_change", pert.sup_change},
                                 {"holder_change", pert.holder_change},
                                 {"closest_iterate", pert.closest_iterate}});
      }
      const auto cert = certify_fiber_bunching(b, f, sc.bunching.horizon, sc.bunching.grid);
      json entry{{"homoclinic_index", idx},
                 {"z", {loop.z.z(0), loop.z.z(1)}},
                 {"shift", loop.shift},
                 {"certificate", to_json(cert)}};
      if (!cert.pass) {
        note("twisting: loop " + std::to_string(idx) + " skipped, cocycle not fiber bunched");
        entry["twisting"] = nullptr;
        loops.push_back(entry);
        continue;
      }
      const auto tv = weak_twisting_test(b, f, cert, loop, sc.twisting);
      note("twisting: loop " + std::to_string(idx) + " verdict=" + to_string(tv.verdict) +
           " j=" + std::to_string(tv.j) + " fractions=" + json(tv.fractions).dump());
      entry["twisting"] = to_json(tv);
      entry["continuity_modulus"] = loop_continuity_modulus(b, f, cert, loop, 32, sc.twisting.holonomy);
      twisting = twisting || tv.verdict == Verdict::Positive;
      loops.push_back(entry);
    }
    results["twisting"] = {{"verdict", twisting ? "twisting" : "not-twisting"}, {"loops", loops}};
    return twisting ? kExitOk : kExitInconclusive;
  }

  int monotone() {
    const auto f = sc.skew_product();
    const auto b = restrict_to_leaf(sc.cocycle(), f, leaf(f));
    MonotonicityOptions mo;
    mo.epsilon = sc.monotone.epsilon;
    mo.grid = sc.monotone.grid;
    mo.w_samples = sc.monotone.w_samples;
    mo.window = sc.monotone.window;
    mo.seed = derive_seed(sc.seed, 6);
    const auto m = epsilon_monotonicity_test([&](double t) { return b.at(t); }, mo);
    note("monotone: margin=" + format_number(m.margin) + " epsilon=" + format_number(mo.epsilon) +
         (m.pass ? " pass" : " fail"));
    results["monotonicity"] = to_json(m);
    results["monotonicity"]["epsilon"] = mo.epsilon;
    results["monotonicity"]["grid"] = mo.grid;
    return m.pass ? kExitOk : kExitInconclusive;
  }

  int perturb() {
    auto cfg = sc.perturb;
    cfg.spectrum.jobs = opts.jobs;
    cfg.pinching.jobs = opts.jobs;
    const auto rep = positivity_search(sc.cocycle(), sc.skew_product(), cfg);
    for (const auto& l : rep.log) note(l);
    results["positivity"] = to_json(rep);
    for (const auto& s : rep.stages)
      perturbations.push_back({{"name", s.name}, {"detail", s.detail}, {"size", s.size}});
    return rep.success ? kExitOk : kExitInconclusive;
  }

  int sweep() {
    const auto f = sc.skew_product();
    const CocycleField a = sc.cocycle();
    const auto& sw = sc.sweep;
    if (sw.values.empty()) throw InvalidArgument("sweep: no parameter values configured");
    std::vector<std::vector<std::string>> rows;
    json out = json::array();
    const auto lf = leaf(f);
    for (double v : sw.values) {
      CocycleField b = a;
      if (sw.parameter == "theta") {
        b = rotate_perturbation(leaf_shear(a, sw.leaf_shear), v);
      } else {
        auto fs = a.factors();
        auto& e = std::get<ExpFactor>(fs[sw.factor]);
        e.psi = e.psi.scaled(v);
        b = leaf_shear(CocycleField(a.half_dim(), a.alpha(), fs), sw.leaf_shear);
      }
      LyapunovReport rep;
      std::string verdict;
      json row{{"parameter", v}};
      if (sw.measure == "leaf") {
        // The leaf row reports what the pinching test measured: Lyapunov
        // exponents on an irrational leaf, mean log eigenvalue moduli of the
        // return map over the t grid on a rational one.
        const auto pv = weak_pinching_test(b, f, lf, pinching_options());
        rep.exponents = pv.exponents;
        rep.stderr_.assign(pv.exponents.size(), pv.error);
        rep.n = pv.samples;
        rep.orbits = pv.spectrum ? pv.spectrum->orbits : 1;
        rep.seed = pinching_options().seed;
        rep.measure = pv.measure;
        verdict = to_string(pv.verdict);
        row["pinching"] = to_json(pv);
      } else {
        rep = lyapunov_spectrum(SkewCocycle(b, f), spectrum_options());
        const bool pos = rep.top() > std::max(3.0 * rep.top_stderr(), sc.pinching.zero_floor);
        verdict = pos ? "positive" : "zero";
      }
      note("sweep " + sw.parameter + "=" + format_number(v) + " lambda+=" + format_number(rep.top()) +
           " verdict=" + verdict);
      row["spectrum"] = to_json(rep);
      row["verdict"] = verdict;
      out.push_back(row);
      rows.push_back(csv_row(v, rep, verdict));
    }
    results["sweep"] = {{"parameter", sw.parameter}, {"measure", sw.measure},
                        {"leaf_shear", sw.leaf_shear}, {"rows", out}};
    write_csv("sweep.csv", rows, 2 * sc.half_dim);
    return kExitOk;
  }
};

}  // namespace

int run_lab(const RunOptions& opts) {
  const auto t0 = std::chrono::steady_clock::now();
  const std::string started = utc_now();
  json report{{"schema_version", kReportSchemaVersion},
              {"tool", {{"name", "cocycle_lab"}, {"version", COCYCLE_LAB_VERSION}}},
              {"subcommand", opts.subcommand},
              {"scenario_path", opts.scenario_path},
              {"started_at", started},
              {"jobs", opts.jobs}};
  std::filesystem::create_directories(opts.out_dir);
  std::ofstream log(std::filesystem::path(opts.out_dir) / "pipeline.log");
  log << "# cocycle_lab " << opts.subcommand << " started " << started << '\n';
  int code = kExitError;
  json results = json::object(), perturbations = json::array();
  std::string csv;
  try {
    const auto known = subcommands();
    if (std::find(known.begin(), known.end(), opts.subcommand) == known.end())
      throw InvalidArgument("unknown subcommand '" + opts.subcommand + "'");
    Context ctx{opts, load_scenario(opts.scenario_path, opts.overrides, opts.seed)};
    ctx.log.swap(log);
    report["scenario"] = yaml_to_json(ctx.sc.document);
    report["seed"] = ctx.sc.seed;
    ctx.note("scenario " + opts.scenario_path + " seed " + std::to_string(ctx.sc.seed));
    if (opts.subcommand == "spectrum") code = ctx.spectrum();
    else if (opts.subcommand == "bunching") code = ctx.bunching();
    else if (opts.subcommand == "pinching") code = ctx.pinching();
    else if (opts.subcommand == "twisting") code = ctx.twisting();
    else if (opts.subcommand == "monotone") code = ctx.monotone();
    else if (opts.subcommand == "perturb") code = ctx.perturb();
    else code = ctx.sweep();
    results = std::move(ctx.results);
    perturbations = std::move(ctx.perturbations);
    csv = ctx.csv_name;
    ctx.log.swap(log);
    report["status"] = code == kExitOk ? "success" : "inconclusive";
    report["error"] = nullptr;
  } catch (const std::exception& e) {
    code = kExitError;
    report["status"] = "error";
    report["error"] = e.what();
    log << "error: " << e.what() << '\n';
  }
  if (!report.contains("scenario")) report["scenario"] = nullptr;
  if (!report.contains("seed")) report["seed"] = nullptr;
  report["exit_code"] = code;
  report["results"] = results;
  report["perturbations"] = perturbations;
  report["outputs"] = {{"csv", csv.empty() ? json(nullptr) : json(csv)}, {"log", "pipeline.log"}};
  report["wall_clock_seconds"] =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::ofstream(std::filesystem::path(opts.out_dir) / "report.json") << report.dump(2) << '\n';
  log << "# exit " << code << '\n';
  return code;
}

}  // namespace cocycle_lab
