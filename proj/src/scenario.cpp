#include "cocycle_lab/scenario.hpp"

#include <cmath>
#include <set>
#include <sstream>

#include "cocycle_lab/errors.hpp"

namespace cocycle_lab {

namespace {

class Reader {
 public:
  std::vector<std::string> errors;

  void fail(const std::string& path, const std::string& msg) { errors.push_back(path + ": " + msg); }

  bool is_map(const YAML::Node& n, const std::string& path) {
    if (!n || n.IsNull()) return false;
    if (!n.IsMap()) {
      fail(path, "expected a mapping");
      return false;
    }
    return true;
  }

  void allow(const YAML::Node& n, const std::string& path, std::set<std::string> keys) {
    if (!n || !n.IsMap()) return;
    for (const auto& kv : n) {
      const auto k = kv.first.as<std::string>();
      if (!keys.count(k)) fail(join(path, k), "unknown field");
    }
  }

  template <class T>
  bool get(const YAML::Node& n, const std::string& path, const std::string& key, T& out) {
    if (!n || !n.IsMap() || !n[key]) return false;
    try {
      out = n[key].as<T>();
      return true;
    } catch (const YAML::Exception&) {
      fail(join(path, key), std::string("expected ") + type_name<T>());
      return false;
    }
  }

  template <class T>
  void positive(const std::string& path, T v) {
    if (!(v > 0)) fail(path, "must be positive");
  }

  bool matrix(const YAML::Node& n, const std::string& path, int rows, int cols, Mat& out) {
    if (!n || !n.IsSequence() || static_cast<int>(n.size()) != rows) {
      std::ostringstream os;
      os << "expected a " << rows << "x" << cols << " array";
      fail(path, os.str());
      return false;
    }
    out.resize(rows, cols);
    for (int i = 0; i < rows; ++i) {
      if (!n[i].IsSequence() || static_cast<int>(n[i].size()) != cols) {
        std::ostringstream os;
        os << "row " << i << " must have " << cols << " entries";
        fail(path, os.str());
        return false;
      }
      for (int j = 0; j < cols; ++j) {
        try {
          out(i, j) = n[i][j].as<double>();
        } catch (const YAML::Exception&) {
          fail(path, "entries must be numbers");
          return false;
        }
      }
    }
    return true;
  }

  std::vector<FourierTerm> trig(const YAML::Node& n, const std::string& path) {
    std::vector<FourierTerm> out;
    if (!n) return out;
    if (!n.IsSequence()) {
      fail(path, "expected a list of {coef, k, kind}");
      return out;
    }
    for (std::size_t i = 0; i < n.size(); ++i) {
      const std::string p = path + "[" + std::to_string(i) + "]";
      if (!is_map(n[i], p)) continue;
      allow(n[i], p, {"coef", "k", "kind"});
      FourierTerm t;
      if (!get(n[i], p, "coef", t.coef)) fail(join(p, "coef"), "required");
      std::vector<int> k;
      if (get(n[i], p, "k", k)) {
        if (k.size() != 3)
          fail(join(p, "k"), "expected three integer frequencies (x1, x2, t)");
        else
          t.k = {k[0], k[1], k[2]};
      }
      std::string kind = "cos";
      get(n[i], p, "kind", kind);
      if (kind != "cos" && kind != "sin") fail(join(p, "kind"), "must be cos or sin");
      t.is_sin = kind == "sin";
      out.push_back(t);
    }
    return out;
  }

  static std::string join(const std::string& a, const std::string& b) {
    return a.empty() ? b : a + "." + b;
  }

 private:
  template <class T>
  static const char* type_name() {
    if constexpr (std::is_same_v<T, std::string>) return "a string";
    else if constexpr (std::is_same_v<T, bool>) return "a boolean";
    else if constexpr (std::is_integral_v<T>) return "an integer";
    else if constexpr (std::is_floating_point_v<T>) return "a number";
    else return "a list";
  }
};

}  // namespace

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stage) {
  // splitmix64 of (seed, stage)
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stage + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

void apply_override(YAML::Node& doc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0)
    throw InvalidArgument("override '" + assignment + "' is not of the form section.key=value");
  const std::string key = assignment.substr(0, eq);
  YAML::Node value;
  try {
    value = YAML::Load(assignment.substr(eq + 1));
  } catch (const YAML::Exception& e) {
    throw InvalidArgument("override '" + assignment + "': " + e.what());
  }
  std::vector<std::string> parts;
  std::stringstream ss(key);
  for (std::string part; std::getline(ss, part, '.');) parts.push_back(part);
  // Walk with fresh handles; yaml-cpp node assignment rebinds otherwise.
  std::vector<YAML::Node> chain{doc};
  for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
    YAML::Node next = chain.back()[parts[i]];
    if (!next.IsDefined() || next.IsNull()) {
      chain.back()[parts[i]] = YAML::Node(YAML::NodeType::Map);
      next = chain.back()[parts[i]];
    }
    if (!next.IsMap()) throw InvalidArgument("override '" + key + "': " + parts[i] + " is not a section");
    chain.push_back(next);
  }
  chain.back()[parts.back()] = value;
}

SkewProduct Scenario::skew_product() const {
  return SkewProduct(TorusAutomorphism(base_matrix), TrigPoly(theta));
}

CocycleField Scenario::cocycle() const { return CocycleField(half_dim, alpha, factors); }

Scenario parse_scenario(const YAML::Node& doc) {
  Reader r;
  Scenario sc;
  sc.document = doc;
  if (!doc || !doc.IsMap()) throw InvalidArgument("scenario: expected a mapping at the top level");
  r.allow(doc, "", {"name", "seed", "base", "cocycle", "leaf", "homoclinic", "fiber_measure", "spectrum",
                    "bunching", "pinching", "twisting", "monotone", "perturb", "sweep"});
  r.get(doc, "", "name", sc.name);
  if (!r.get(doc, "", "seed", sc.seed)) r.fail("seed", "required (every run needs an explicit seed)");
  r.get(doc, "", "fiber_measure", sc.fiber_measure);
  if (sc.fiber_measure != "lebesgue") r.fail("fiber_measure", "only lebesgue is supported");

  // base
  const YAML::Node base = doc["base"];
  if (!r.is_map(base, "base")) {
    r.fail("base", "required");
  } else {
    r.allow(base, "base", {"matrix", "theta"});
    Mat m;
    if (r.matrix(base["matrix"], "base.matrix", 2, 2, m)) {
      bool integral = true;
      for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) {
          if (m(i, j) != std::round(m(i, j))) integral = false;
          sc.base_matrix(i, j) = static_cast<std::int64_t>(std::llround(m(i, j)));
        }
      if (!integral) r.fail("base.matrix", "entries must be integers");
      const auto det = sc.base_matrix(0, 0) * sc.base_matrix(1, 1) - sc.base_matrix(0, 1) * sc.base_matrix(1, 0);
      const auto tr = sc.base_matrix(0, 0) + sc.base_matrix(1, 1);
      if (det != 1 && det != -1) r.fail("base.matrix", "determinant must be +-1");
      if (std::abs(tr) <= 2) r.fail("base.matrix", "|trace| must exceed 2 (hyperbolic)");
    }
    sc.theta = r.trig(base["theta"], "base.theta");
    for (const auto& t : sc.theta)
      if (t.k[2] != 0) r.fail("base.theta", "theta may not depend on the fiber coordinate");
  }

  // cocycle
  const YAML::Node coc = doc["cocycle"];
  if (!r.is_map(coc, "cocycle")) {
    r.fail("cocycle", "required");
  } else {
    r.allow(coc, "cocycle", {"half_dim", "alpha", "factors"});
    r.get(coc, "cocycle", "half_dim", sc.half_dim);
    r.get(coc, "cocycle", "alpha", sc.alpha);
    if (sc.half_dim < 1 || sc.half_dim > 8) r.fail("cocycle.half_dim", "must lie in 1..8");
    if (!(sc.alpha > 0.0 && sc.alpha <= 1.0)) r.fail("cocycle.alpha", "must lie in (0, 1]");
    const int n = 2 * std::max(1, sc.half_dim);
    const SymplecticForm form(std::max(1, sc.half_dim));
    const YAML::Node fs = coc["factors"];
    if (fs && !fs.IsSequence()) r.fail("cocycle.factors", "expected a list");
    for (std::size_t i = 0; fs && fs.IsSequence() && i < fs.size(); ++i) {
      const std::string p = "cocycle.factors[" + std::to_string(i) + "]";
      const YAML::Node fnode = fs[i];
      if (!r.is_map(fnode, p)) continue;
      std::string type;
      if (!r.get(fnode, p, "type", type)) {
        r.fail(p + ".type", "required (exp, const or rotation)");
        continue;
      }
      if (type == "exp") {
        r.allow(fnode, p, {"type", "generator", "hamiltonian", "psi", "winding"});
        Mat s;
        bool ok = false;
        if (fnode["generator"]) {
          ok = r.matrix(fnode["generator"], p + ".generator", n, n, s);
        } else if (fnode["hamiltonian"]) {
          Mat h;
          ok = r.matrix(fnode["hamiltonian"], p + ".hamiltonian", n, n, h);
          if (ok) s = hamiltonian_from_symmetric(h);
        } else {
          r.fail(p, "needs generator or hamiltonian");
        }
        if (ok && !form.is_hamiltonian(s)) {
          r.fail(p + ".generator", "not in the symplectic Lie algebra (S^T J + J S != 0)");
          ok = false;
        }
        // Without psi the factor is the constant exp(S).
        std::vector<FourierTerm> psi{FourierTerm{1.0, {0, 0, 0}, false}};
        if (fnode["psi"]) psi = r.trig(fnode["psi"], p + ".psi");
        ExpFactor e{s, TrigPoly(psi)};
        std::vector<int> w;
        if (r.get(fnode, p, "winding", w)) {
          if (w.size() != 3) r.fail(p + ".winding", "expected three integers");
          else e.winding = {w[0], w[1], w[2]};
        }
        if (ok && e.winds() && op_norm(hamiltonian_exp(s) - Mat::Identity(n, n)) > 1e-9)
          r.fail(p + ".winding", "a winding factor needs exp(generator) = I, e.g. generator = 2 pi J");
        if (ok) sc.factors.push_back(std::move(e));
      } else if (type == "const") {
        r.allow(fnode, p, {"type", "matrix", "label"});
        Mat m;
        std::string label;
        r.get(fnode, p, "label", label);
        if (r.matrix(fnode["matrix"], p + ".matrix", n, n, m)) {
          if (form.drift(m) > 1e-10 * std::max(1.0, op_norm(m) * op_norm(m)))
            r.fail(p + ".matrix", "not symplectic");
          else
            sc.factors.push_back(ConstFactor{m, label});
        }
      } else if (type == "rotation") {
        r.allow(fnode, p, {"type", "angle"});
        double ang = 0.0;
        if (!r.get(fnode, p, "angle", ang)) r.fail(p + ".angle", "required");
        sc.factors.push_back(ConstFactor{block_rotation(std::max(1, sc.half_dim), ang), "rotation"});
      } else {
        r.fail(p + ".type", "unknown factor type '" + type + "'");
      }
    }
  }

  if (const YAML::Node leaf = doc["leaf"]; r.is_map(leaf, "leaf")) {
    r.allow(leaf, "leaf", {"period", "index"});
    r.get(leaf, "leaf", "period", sc.leaf_period);
    r.get(leaf, "leaf", "index", sc.leaf_index);
    r.positive("leaf.period", sc.leaf_period);
    if (sc.leaf_index < 0) r.fail("leaf.index", "must be >= 0");
  }
  if (const YAML::Node h = doc["homoclinic"]; r.is_map(h, "homoclinic")) {
    r.allow(h, "homoclinic", {"indices", "budget"});
    r.get(h, "homoclinic", "indices", sc.homoclinic_indices);
    r.get(h, "homoclinic", "budget", sc.homoclinic_budget);
    if (sc.homoclinic_indices.empty()) r.fail("homoclinic.indices", "needs at least one index");
    r.positive("homoclinic.budget", sc.homoclinic_budget);
  }
  if (const YAML::Node s = doc["spectrum"]; r.is_map(s, "spectrum")) {
    r.allow(s, "spectrum", {"n", "orbits", "warmup", "reortho_interval"});
    r.get(s, "spectrum", "n", sc.spectrum.n);
    r.get(s, "spectrum", "orbits", sc.spectrum.orbits);
    r.get(s, "spectrum", "warmup", sc.spectrum.warmup);
    r.get(s, "spectrum", "reortho_interval", sc.spectrum.reortho_interval);
  }
  r.positive("spectrum.n", sc.spectrum.n);
  r.positive("spectrum.orbits", sc.spectrum.orbits);
  if (const YAML::Node s = doc["bunching"]; r.is_map(s, "bunching")) {
    r.allow(s, "bunching", {"horizon", "grid"});
    r.get(s, "bunching", "horizon", sc.bunching.horizon);
    r.get(s, "bunching", "grid", sc.bunching.grid);
  }
  if (sc.bunching.horizon < 10) r.fail("bunching.horizon", "must be >= 10");
  r.positive("bunching.grid", sc.bunching.grid);
  if (const YAML::Node s = doc["pinching"]; r.is_map(s, "pinching")) {
    r.allow(s, "pinching", {"n", "orbits", "t_grid", "zero_floor", "eig_tol"});
    r.get(s, "pinching", "n", sc.pinching.n);
    r.get(s, "pinching", "orbits", sc.pinching.orbits);
    r.get(s, "pinching", "t_grid", sc.pinching.t_grid);
    r.get(s, "pinching", "zero_floor", sc.pinching.zero_floor);
    r.get(s, "pinching", "eig_tol", sc.pinching.eig_tol);
  }
  r.positive("pinching.n", sc.pinching.n);
  r.positive("pinching.orbits", sc.pinching.orbits);
  if (const YAML::Node s = doc["twisting"]; r.is_map(s, "twisting")) {
    r.allow(s, "twisting", {"j_max", "samples", "epsilon_angle", "floor", "frame_n", "frame_residual", "sigma"});
    r.get(s, "twisting", "j_max", sc.twisting.j_max);
    r.get(s, "twisting", "samples", sc.twisting.samples);
    r.get(s, "twisting", "epsilon_angle", sc.twisting.epsilon_angle);
    r.get(s, "twisting", "floor", sc.twisting.floor);
    r.get(s, "twisting", "frame_n", sc.twisting.frame.n);
    r.get(s, "twisting", "frame_residual", sc.twisting.frame.residual_threshold);
    if (const YAML::Node sig = s["sigma"]; sig) {
      if (!sig.IsSequence()) r.fail("twisting.sigma", "expected a list of {direction, strength}");
      for (std::size_t i = 0; sig.IsSequence() && i < sig.size(); ++i) {
        const std::string p = "twisting.sigma[" + std::to_string(i) + "]";
        if (!r.is_map(sig[i], p)) continue;
        r.allow(sig[i], p, {"direction", "strength"});
        std::vector<double> dir;
        double a = 0.0;
        r.get(sig[i], p, "direction", dir);
        if (!r.get(sig[i], p, "strength", a)) r.fail(p + ".strength", "required");
        if (static_cast<int>(dir.size()) != 2 * sc.half_dim) {
          r.fail(p + ".direction", "length must be 2d");
          continue;
        }
        Vec v = Eigen::Map<Vec>(dir.data(), dir.size());
        if (v.norm() == 0.0) {
          r.fail(p + ".direction", "must be nonzero");
          continue;
        }
        sc.twisting_sigma.push_back({v / v.norm(), a});
      }
    }
  }
  if (!(sc.twisting.epsilon_angle > 0.0)) r.fail("twisting.epsilon_angle", "must be > 0");
  r.positive("twisting.j_max", sc.twisting.j_max);
  r.positive("twisting.samples", sc.twisting.samples);
  if (const YAML::Node s = doc["monotone"]; r.is_map(s, "monotone")) {
    r.allow(s, "monotone", {"epsilon", "grid", "w_samples", "window"});
    r.get(s, "monotone", "epsilon", sc.monotone.epsilon);
    r.get(s, "monotone", "grid", sc.monotone.grid);
    r.get(s, "monotone", "w_samples", sc.monotone.w_samples);
    r.get(s, "monotone", "window", sc.monotone.window);
  }
  r.positive("monotone.epsilon", sc.monotone.epsilon);
  if (sc.monotone.grid < 2) r.fail("monotone.grid", "must be >= 2");
  if (const YAML::Node s = doc["perturb"]; r.is_map(s, "perturb")) {
    r.allow(s, "perturb", {"theta_grid", "leaf_shear", "delta_total", "separation_delta", "bump_radius"});
    r.get(s, "perturb", "theta_grid", sc.perturb.theta_grid);
    r.get(s, "perturb", "leaf_shear", sc.perturb.leaf_shear);
    r.get(s, "perturb", "delta_total", sc.perturb.delta_total);
    r.get(s, "perturb", "separation_delta", sc.perturb.separation_delta);
    r.get(s, "perturb", "bump_radius", sc.perturb.bump_radius);
  }
  r.positive("perturb.delta_total", sc.perturb.delta_total);
  r.positive("perturb.bump_radius", sc.perturb.bump_radius);
  if (sc.perturb.leaf_shear < 0.0) r.fail("perturb.leaf_shear", "must be >= 0");
  if (const YAML::Node s = doc["sweep"]; r.is_map(s, "sweep")) {
    r.allow(s, "sweep", {"parameter", "values", "start", "stop", "step", "factor", "measure", "leaf_shear"});
    r.get(s, "sweep", "parameter", sc.sweep.parameter);
    r.get(s, "sweep", "factor", sc.sweep.factor);
    r.get(s, "sweep", "measure", sc.sweep.measure);
    r.get(s, "sweep", "leaf_shear", sc.sweep.leaf_shear);
    if (sc.sweep.parameter != "theta" && sc.sweep.parameter != "coefficient")
      r.fail("sweep.parameter", "must be theta or coefficient");
    if (sc.sweep.measure != "leaf" && sc.sweep.measure != "global")
      r.fail("sweep.measure", "must be leaf or global");
    if (s["values"]) {
      r.get(s, "sweep", "values", sc.sweep.values);
    } else if (s["start"] || s["stop"] || s["step"]) {
      double a = 0, b = 0, h = 0;
      const bool ok = r.get(s, "sweep", "start", a) & r.get(s, "sweep", "stop", b) & r.get(s, "sweep", "step", h);
      if (!ok || !(h > 0) || b < a) {
        r.fail("sweep", "start/stop/step need step > 0 and stop >= start");
      } else {
        const long m = std::lround((b - a) / h);
        for (long i = 0; i <= m; ++i) sc.sweep.values.push_back(a + i * h);
      }
    }
    if (sc.sweep.parameter == "coefficient" &&
        (sc.sweep.factor < 0 || sc.sweep.factor >= static_cast<int>(sc.factors.size()) ||
         !std::holds_alternative<ExpFactor>(sc.factors[sc.sweep.factor])))
      r.fail("sweep.factor", "must index an exp factor");
  }

  if (!r.errors.empty()) {
    std::ostringstream os;
    os << "scenario has " << r.errors.size() << " invalid field(s):";
    for (const auto& e : r.errors) os << "\n  " << e;
    throw InvalidArgument(os.str());
  }

  // Stage seeds and shared settings.
  sc.pinching.seed = derive_seed(sc.seed, 1);
  sc.twisting.seed = derive_seed(sc.seed, 2);
  sc.twisting.frame.seed = derive_seed(sc.seed, 3);
  auto& pc = sc.perturb;
  pc.leaf_period = sc.leaf_period;
  pc.leaf_index = sc.leaf_index;
  pc.homoclinic_index = sc.homoclinic_indices.front();
  pc.homoclinic_budget = sc.homoclinic_budget;
  pc.bunching_horizon = sc.bunching.horizon;
  pc.bunching_grid = sc.bunching.grid;
  pc.pinching = sc.pinching;
  pc.twisting = sc.twisting;
  pc.spectrum.n = sc.spectrum.n;
  pc.spectrum.orbits = sc.spectrum.orbits;
  pc.spectrum.warmup = sc.spectrum.warmup;
  pc.spectrum.reortho_interval = sc.spectrum.reortho_interval;
  pc.spectrum.seed = derive_seed(sc.seed, 0);
  pc.seed = derive_seed(sc.seed, 4);
  return sc;
}

Scenario load_scenario(const std::string& path, const std::vector<std::string>& overrides,
                       std::optional<std::uint64_t> seed) {
  YAML::Node doc;
  try {
    doc = YAML::LoadFile(path);
  } catch (const YAML::BadFile&) {
    throw InvalidArgument("cannot read scenario file " + path);
  } catch (const YAML::Exception& e) {
    throw InvalidArgument("scenario " + path + ": " + e.what());
  }
  for (const auto& o : overrides) apply_override(doc, o);
  if (seed) doc["seed"] = *seed;
  return parse_scenario(doc);
}

}  // namespace cocycle_lab
