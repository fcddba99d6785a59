#include "ldlab/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "ldlab/error.hpp"

namespace ldlab {
namespace {

using json = nlohmann::json;

std::string kind_name(const json& j) {
  if (j.is_boolean()) return "boolean";
  if (j.is_number()) return "number";
  if (j.is_string()) return "string";
  if (j.is_array()) return "array";
  if (j.is_object()) return "object";
  return "null";
}

// Strict view on one JSON object: every key must be consumed before finish().
class Obj {
 public:
  Obj(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j.is_object()) throw ConfigError(path_ + ": expected an object, got " + kind_name(j));
  }

  bool has(const std::string& key) const { return j_.contains(key); }
  std::string where(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  const json& at(const std::string& key) {
    if (!j_.contains(key)) throw ConfigError(where(key) + ": required key is missing");
    seen_.insert(key);
    return j_.at(key);
  }

  double number(const std::string& key) {
    const auto& v = at(key);
    if (!v.is_number()) throw ConfigError(where(key) + ": expected a number, got " + kind_name(v));
    return v.get<double>();
  }
  double number(const std::string& key, double def) { return has(key) ? number(key) : def; }

  int integer(const std::string& key) {
    const auto& v = at(key);
    if (!v.is_number_integer()) throw ConfigError(where(key) + ": expected an integer, got " + kind_name(v));
    return v.get<int>();
  }
  int integer(const std::string& key, int def) { return has(key) ? integer(key) : def; }

  bool boolean(const std::string& key, bool def) {
    if (!has(key)) return def;
    const auto& v = at(key);
    if (!v.is_boolean()) throw ConfigError(where(key) + ": expected a boolean, got " + kind_name(v));
    return v.get<bool>();
  }

  std::string string(const std::string& key) {
    const auto& v = at(key);
    if (!v.is_string()) throw ConfigError(where(key) + ": expected a string, got " + kind_name(v));
    return v.get<std::string>();
  }
  std::string string(const std::string& key, const std::string& def) { return has(key) ? string(key) : def; }

  std::vector<int> integers(const std::string& key) {
    const auto& v = at(key);
    if (!v.is_array()) throw ConfigError(where(key) + ": expected an array of integers");
    std::vector<int> out;
    for (const auto& x : v) {
      if (!x.is_number_integer()) throw ConfigError(where(key) + ": expected an array of integers");
      out.push_back(x.get<int>());
    }
    return out;
  }

  std::vector<double> numbers(const std::string& key) {
    const auto& v = at(key);
    if (!v.is_array()) throw ConfigError(where(key) + ": expected an array of numbers");
    std::vector<double> out;
    for (const auto& x : v) {
      if (!x.is_number()) throw ConfigError(where(key) + ": expected an array of numbers");
      out.push_back(x.get<double>());
    }
    return out;
  }

  Matrix matrix(const std::string& key) {
    const auto& v = at(key);
    const std::string msg = where(key) + ": expected a square matrix given row by row";
    if (!v.is_array() || v.empty()) throw ConfigError(msg);
    const auto n = static_cast<Eigen::Index>(v.size());
    Matrix a(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto& row = v[static_cast<std::size_t>(i)];
      if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != n) throw ConfigError(msg);
      for (Eigen::Index k = 0; k < n; ++k) {
        if (!row[static_cast<std::size_t>(k)].is_number()) throw ConfigError(msg);
        a(i, k) = row[static_cast<std::size_t>(k)].get<double>();
      }
    }
    return a;
  }

  std::vector<Vector> points(const std::string& key, int dim) {
    const auto& v = at(key);
    const std::string msg = where(key) + ": expected a list of " + std::to_string(dim) + "-vectors";
    if (!v.is_array()) throw ConfigError(msg);
    std::vector<Vector> out;
    for (const auto& p : v) {
      if (!p.is_array() || static_cast<int>(p.size()) != dim) throw ConfigError(msg);
      Vector x(dim);
      for (int i = 0; i < dim; ++i) {
        if (!p[static_cast<std::size_t>(i)].is_number()) throw ConfigError(msg);
        x(i) = p[static_cast<std::size_t>(i)].get<double>();
      }
      out.push_back(x);
    }
    return out;
  }

  Vector point(const std::string& key, int dim) {
    const auto& v = at(key);
    const std::string msg = where(key) + ": expected a " + std::to_string(dim) + "-vector";
    if (!v.is_array() || static_cast<int>(v.size()) != dim) throw ConfigError(msg);
    Vector x(dim);
    for (int i = 0; i < dim; ++i) {
      if (!v[static_cast<std::size_t>(i)].is_number()) throw ConfigError(msg);
      x(i) = v[static_cast<std::size_t>(i)].get<double>();
    }
    return x;
  }

  Obj child(const std::string& key) { return Obj(at(key), where(key)); }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.count(it.key())) throw ConfigError(where(it.key()) + ": unknown key");
    }
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

CutoffSpline::Kind spline_kind(const std::string& s, const std::string& where) {
  if (s == "cubic") return CutoffSpline::Kind::Cubic;
  if (s == "quintic") return CutoffSpline::Kind::Quintic;
  throw ConfigError(where + ": spline must be \"cubic\" or \"quintic\"");
}

std::shared_ptr<const RadialFunction> radial(Obj o, const std::string& path) {
  const std::string type = o.string("type");
  std::shared_ptr<const RadialFunction> out;
  if (type == "morse") {
    const double alpha = o.number("alpha");
    const double lo = o.number("r_lo"), hi = o.number("r_hi");
    const auto kind = spline_kind(o.string("spline", "cubic"), path);
    out = std::make_shared<MorseFunction>(alpha, CutoffSpline(lo, hi, kind), o.number("r0", 1.0),
                                          o.number("epsilon", 1.0));
  } else if (type == "exponential") {
    const double beta = o.number("beta");
    const double lo = o.number("r_lo"), hi = o.number("r_hi");
    const auto kind = spline_kind(o.string("spline", "cubic"), path);
    out = std::make_shared<ExponentialFunction>(beta, CutoffSpline(lo, hi, kind), o.number("r0", 1.0));
  } else if (type == "harmonic") {
    out = std::make_shared<HarmonicFunction>(o.number("stiffness", 1.0), o.number("r0", 1.0), o.number("cutoff"));
  } else {
    throw ConfigError(path + ".type: unknown radial function \"" + type + "\"");
  }
  o.finish();
  return out;
}

std::shared_ptr<const SitePotential> potential(Obj o, const std::string& path) {
  const std::string type = o.string("type");
  std::shared_ptr<const SitePotential> out;
  if (type == "morse") {
    const auto kind = spline_kind(o.string("spline", "cubic"), path);
    out = make_morse(o.number("alpha", 4.0), o.number("r_lo", 1.5), o.number("r_hi", 2.3), kind, o.number("r0", 1.0),
                     o.number("epsilon", 1.0));
  } else if (type == "pair") {
    out = std::make_shared<PairPotential>(radial(o.child("phi"), path + ".phi"));
  } else if (type == "eam") {
    out = std::make_shared<EamPotential>(radial(o.child("pair"), path + ".pair"),
                                         radial(o.child("density"), path + ".density"), o.number("embedding"));
  } else if (type == "laplacian") {
    out = std::make_shared<LaplacianPotential>(o.number("stiffness", 1.0));
  } else if (type == "linearized") {
    out = std::make_shared<LinearizedPotential>(potential(o.child("base"), path + ".base"));
  } else {
    throw ConfigError(path + ".type: unknown potential \"" + type + "\"");
  }
  o.finish();
  return out;
}

void solver_options(Obj o, SolverOptions& s) {
  s.tol_grad_inf = o.number("tol_grad_inf", s.tol_grad_inf);
  s.max_iter = o.integer("max_iter", s.max_iter);
  s.armijo = o.number("armijo", s.armijo);
  s.backtrack = o.number("backtrack", s.backtrack);
  s.restart = o.integer("restart", s.restart);
  s.precondition = o.boolean("precondition", s.precondition);
  s.mu = o.number("mu", s.mu);
  s.shift_ratio = o.number("shift_ratio", s.shift_ratio);
  s.max_step = o.number("max_step", s.max_step);
  s.newton_refine = o.boolean("newton_refine", s.newton_refine);
  s.newton_tol = o.number("newton_tol", s.newton_tol);
  s.newton_switch = o.number("newton_switch", s.newton_switch);
  s.newton_max_iter = o.integer("newton_max_iter", s.newton_max_iter);
  s.linear_max_iter = o.integer("linear_max_iter", s.linear_max_iter);
  o.finish();
  if (!(s.tol_grad_inf > 0.0)) throw ConfigError(o.where("tol_grad_inf") + ": must be positive");
  if (!(s.armijo > 0.0 && s.armijo < 0.5)) throw ConfigError(o.where("armijo") + ": must lie in (0, 0.5)");
  if (!(s.backtrack > 0.0 && s.backtrack < 1.0)) throw ConfigError(o.where("backtrack") + ": must lie in (0, 1)");
  if (s.max_iter < 0 || s.restart < 1) throw ConfigError(o.where("max_iter") + ": iteration limits must be positive");
  if (s.shift_ratio < 0.0 || s.mu < 0.0) throw ConfigError(o.where("mu") + ": must be non-negative");
}

void spectrum_options(Obj o, SpectrumOptions& s) {
  s.n_eigs = o.integer("eigenvalues", s.n_eigs);
  s.max_steps = o.integer("max_steps", s.max_steps);
  s.tol = o.number("tol", s.tol);
  s.seed = static_cast<unsigned>(o.integer("seed", static_cast<int>(s.seed)));
  o.finish();
  if (s.n_eigs < 1 || s.max_steps < s.n_eigs) throw ConfigError(o.where("eigenvalues") + ": need 1 <= eigenvalues <= max_steps");
}

std::vector<double> norms(Obj& o, const std::string& key) {
  const auto& v = o.at(key);
  const std::string msg = o.where(key) + ": expected numbers >= 2 or \"inf\"";
  if (!v.is_array() || v.empty()) throw ConfigError(msg);
  std::vector<double> out;
  for (const auto& x : v) {
    if (x.is_string() && x.get<std::string>() == "inf") {
      out.push_back(kInfinity);
    } else if (x.is_number() && x.get<double>() >= 2.0) {
      out.push_back(x.get<double>());
    } else {
      throw ConfigError(msg);
    }
  }
  return out;
}

void check_half_periods(const std::vector<int>& ns, const std::string& where) {
  if (ns.empty()) throw ConfigError(where + ": list is empty");
  for (std::size_t i = 0; i < ns.size(); ++i) {
    if (ns[i] < 1) throw ConfigError(where + ": half-periods must be positive");
    if (i > 0 && ns[i] <= ns[i - 1]) throw ConfigError(where + ": half-periods must be strictly increasing");
  }
}

std::string line_column(const std::string& text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  // nlohmann reports the byte after the offending token
  if (col > 1) --col;
  return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

}  // namespace

LatticePreset lattice_preset(const std::string& name) {
  LatticePreset p;
  p.name = name;
  if (name == "square") {
    p.unit_basis = Matrix::Identity(2, 2);
  } else if (name == "triangular") {
    p.unit_basis.resize(2, 2);
    p.unit_basis << 1.0, 0.5, 0.0, std::sqrt(3.0) / 2.0;
  } else if (name == "cubic") {
    p.unit_basis = Matrix::Identity(3, 3);
  } else if (name == "fcc") {
    p.unit_basis.resize(3, 3);
    p.unit_basis << 0.0, 0.5, 0.5, 0.5, 0.0, 0.5, 0.5, 0.5, 0.0;
    p.multiplier.resize(3, 3);
    p.multiplier << -1, 1, 1, 1, -1, 1, 1, 1, -1;
  } else if (name == "bcc") {
    p.unit_basis.resize(3, 3);
    p.unit_basis << -0.5, 0.5, 0.5, 0.5, -0.5, 0.5, 0.5, 0.5, -0.5;
    p.multiplier.resize(3, 3);
    p.multiplier << 0, 1, 1, 1, 0, 1, 1, 1, 0;
  } else {
    throw ConfigError("unknown lattice preset \"" + name + "\" (square, triangular, cubic, fcc, bcc)");
  }
  if (p.multiplier.size() == 0) p.multiplier = IntMatrix::Identity(p.unit_basis.rows(), p.unit_basis.rows());
  return p;
}

Config parse_config(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("malformed JSON at " + line_column(text, e.byte) + ": " + e.what());
  }
  Config c;
  c.canonical = root.dump();
  Obj top(root, "");
  c.schema_version = top.integer("schema_version");
  if (c.schema_version != kSchemaVersion) {
    throw ConfigError("schema_version " + std::to_string(c.schema_version) + " is not supported (expected " +
                      std::to_string(kSchemaVersion) + ")");
  }

  c.potential = potential(top.child("potential"), "potential");

  // lattice
  {
    Obj o = top.child("lattice");
    if (o.has("preset") == o.has("basis")) throw ConfigError("lattice: give exactly one of preset or basis");
    if (o.has("preset")) {
      auto p = lattice_preset(o.string("preset"));
      c.lattice_name = p.name;
      c.unit_basis = p.unit_basis;
      c.multiplier = p.multiplier;
    } else {
      c.lattice_name = "custom";
      c.unit_basis = o.matrix("basis").transpose();  // rows in the file are basis vectors
      c.multiplier = IntMatrix::Identity(c.unit_basis.rows(), c.unit_basis.rows());
    }
    const int d = static_cast<int>(c.unit_basis.rows());
    if (d < 1 || d > kMaxDim) throw ConfigError("lattice: dimension must be 1, 2 or 3");
    if (o.has("multiplier")) {
      const Matrix mm = o.matrix("multiplier").transpose();
      if (mm.rows() != d) throw ConfigError("lattice.multiplier: dimension mismatch");
      c.multiplier = IntMatrix(d, d);
      for (int i = 0; i < d; ++i) {
        for (int k = 0; k < d; ++k) {
          if (mm(i, k) != std::round(mm(i, k))) throw ConfigError("lattice.multiplier: entries must be integers");
          c.multiplier(i, k) = static_cast<std::int64_t>(mm(i, k));
        }
      }
    }
    c.symbol = o.string("symbol", "X");
    int range_dim = o.integer("range_dim", 0);
    // potentials that accept any range default to a scalar field
    if (range_dim == 0) range_dim = c.potential->required_range_dim(d) > 0 ? c.potential->required_range_dim(d) : 1;
    if (range_dim < 1) throw ConfigError("lattice.range_dim: must be positive");

    if (o.has("lattice_constant")) {
      const auto& v = o.at("lattice_constant");
      if (v.is_string() && v.get<std::string>() == "auto") {
        c.lattice_constant_from_potential = true;
      } else if (v.is_number() && v.get<double>() > 0.0) {
        c.lattice_constant = v.get<double>();
      } else {
        throw ConfigError("lattice.lattice_constant: expected a positive number or \"auto\"");
      }
    } else {
      c.lattice_constant_from_potential = c.potential->cutoff() > 0.0;
    }
    if (c.lattice_constant_from_potential) {
      if (!(c.potential->cutoff() > 0.0)) throw ConfigError("lattice.lattice_constant: \"auto\" needs a potential with a cut-off");
      const auto lp = find_lattice_parameter(*c.potential, c.unit_basis);
      c.lattice_constant = lp.a0;
      c.energy_per_site = lp.energy_per_site;
    }
    const double a = c.lattice_constant;
    double cutoff = c.potential->cutoff();
    if (o.has("cutoff")) cutoff = o.number("cutoff");
    if (!(cutoff > 0.0)) throw ConfigError("lattice.cutoff: required for potentials without a cut-off radius");
    if (cutoff + 1e-12 < c.potential->cutoff()) throw ConfigError("lattice.cutoff: smaller than the potential cut-off");
    c.homogeneous = std::make_shared<const LatticeModel>(LatticeModel::homogeneous(a * c.unit_basis, range_dim, cutoff));

    c.model = c.homogeneous;
    if (o.has("defect")) {
      Obj dfn = o.child("defect");
      const std::string type = dfn.string("type");
      std::vector<Vector> removed, added, offsets;
      if (type == "none") {
      } else if (type == "vacancy") {
        removed.push_back(Vector::Zero(d));
      } else if (type == "interstitial") {
        Vector x(d);
        if (!dfn.has("site")) {
          throw ConfigError("lattice.defect.site: required for interstitials (\"octahedral\", \"center\" or a position)");
        }
        if (dfn.at("site").is_array()) {
          x = dfn.point("site", d);
        } else {
          const std::string site = dfn.string("site");
          if (site == "octahedral") {
            if (c.lattice_name != "fcc" && c.lattice_name != "bcc") {
              throw ConfigError("lattice.defect.site: octahedral needs an fcc or bcc lattice");
            }
            x = Vector::Zero(3);
            x(0) = 0.5;
          } else if (site == "center") {
            x = c.unit_basis.rowwise().sum() / static_cast<double>(d + 1);
          } else {
            throw ConfigError("lattice.defect.site: unknown site \"" + site + "\"");
          }
        }
        added.push_back(x);
        if (dfn.has("initial_offset")) offsets.push_back(dfn.point("initial_offset", d));
      } else if (type == "custom") {
        if (dfn.has("removed")) removed = dfn.points("removed", d);
        if (dfn.has("added")) added = dfn.points("added", d);
        if (dfn.has("initial_offsets")) {
          offsets = dfn.points("initial_offsets", d);
          if (offsets.size() != added.size()) {
            throw ConfigError("lattice.defect.initial_offsets: need one offset per added site");
          }
        }
      } else {
        throw ConfigError("lattice.defect.type: unknown defect \"" + type + "\"");
      }
      double reach = 0.0;
      for (const auto& x : removed) reach = std::max(reach, x.norm());
      for (const auto& x : added) reach = std::max(reach, x.norm());
      const double radius = dfn.number("radius", reach + 0.5);
      dfn.finish();
      for (auto& x : removed) x *= a;
      for (auto& x : added) x *= a;
      for (auto& x : offsets) x *= a;
      c.initial_added = offsets;
      if (!removed.empty() || !added.empty()) {
        c.model = std::make_shared<const LatticeModel>(c.homogeneous->with_defect(removed, added, a * radius));
      }
    }
    o.finish();
  }

  if (top.has("solver")) solver_options(top.child("solver"), c.solver);
  if (top.has("spectrum")) spectrum_options(top.child("spectrum"), c.spectrum);
  c.phonon_grid = top.integer("phonon_grid", c.phonon_grid);
  if (c.phonon_grid < 4) throw ConfigError("phonon_grid: must be at least 4");

  if (top.has("relax")) {
    Obj o = top.child("relax");
    RelaxSpec r;
    r.half_period = o.integer("half_period");
    r.stability = o.boolean("stability", r.stability);
    r.write_xyz = o.boolean("write_xyz", r.write_xyz);
    o.finish();
    if (r.half_period < 1) throw ConfigError("relax.half_period: must be positive");
    c.relax = r;
  }

  if (top.has("study")) {
    Obj o = top.child("study");
    StudyConfig s;
    s.model = c.model;
    s.initial_added = c.initial_added;
    s.multiplier = c.multiplier;
    s.potential = c.potential;
    s.half_periods = o.integers("half_periods");
    check_half_periods(s.half_periods, "study.half_periods");
    s.reference = o.integer("reference", 0);
    if (o.has("norms")) s.norms = norms(o, "norms");
    s.exclude_smallest = o.integer("exclude_smallest", s.exclude_smallest);
    if (s.exclude_smallest < 0) throw ConfigError("study.exclude_smallest: must be non-negative");
    s.solver = c.solver;
    if (o.has("reference_solver")) solver_options(o.child("reference_solver"), s.reference_solver);
    s.continuation = o.boolean("continuation", s.continuation);
    s.stability = o.boolean("stability", s.stability);
    s.spectrum = c.spectrum;
    s.phonon_grid = c.phonon_grid;
    if (o.has("planted")) {
      Obj p = o.child("planted");
      s.planted.enabled = true;
      s.planted.amplitude = p.number("amplitude", s.planted.amplitude);
      s.planted.exponent = p.number("exponent", s.planted.exponent);
      p.finish();
    }
    o.finish();
    if (s.reference != 0 && s.reference <= s.half_periods.back()) {
      throw ConfigError("study.reference: must exceed the largest half-period");
    }
    c.study = s;
  }

  if (top.has("greens")) {
    Obj o = top.child("greens");
    GreensSpec g;
    if (o.has("half_periods")) g.half_periods = o.integers("half_periods");
    check_half_periods(g.half_periods, "greens.half_periods");
    if (o.has("orders")) g.orders = o.integers("orders");
    for (int j : g.orders) {
      if (j < 1 || j > 3) throw ConfigError("greens.orders: orders must lie in 1..3");
    }
    g.big = o.integer("big", g.big);
    if (g.big < 4 * g.half_periods.back()) throw ConfigError("greens.big: must be at least 4 times the largest half-period");
    g.decay_half_period = o.integer("decay_half_period", 0);
    if (o.has("decay_radii")) g.decay_radii = o.numbers("decay_radii");
    g.decay_ratio = o.number("decay_ratio", g.decay_ratio);
    o.finish();
    c.greens = g;
  }

  if (top.has("checks")) {
    Obj o = top.child("checks");
    ChecksSpec k;
    k.decay = o.boolean("decay", k.decay);
    k.decay_ratio = o.number("decay_ratio", k.decay_ratio);
    k.caccioppoli = o.boolean("caccioppoli", k.caccioppoli);
    k.sample_cutoff = o.number("sample_cutoff", 0.0);
    k.seed = static_cast<unsigned>(o.integer("seed", 1));
    if (o.has("poincare")) {
      Obj p = o.child("poincare");
      k.poincare_half_period = p.integer("half_period");
      for (const auto& a : p.points("annuli", 2)) k.poincare_annuli.emplace_back(a(0), a(1));
      k.poincare_samples = p.integer("samples", k.poincare_samples);
      p.finish();
    }
    if (o.has("truncation")) {
      Obj t = o.child("truncation");
      k.truncation_half_period = t.integer("half_period");
      k.truncation_radii = t.numbers("radii");
      k.truncation_samples = t.integer("samples", k.truncation_samples);
      t.finish();
    }
    o.finish();
    if ((k.decay || k.caccioppoli) && !c.study) throw ConfigError("checks: decay and Caccioppoli checks need a study section");
    c.checks = k;
  }

  top.finish();
  return c;
}

Config load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

}  // namespace ldlab
