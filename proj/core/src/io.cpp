#include "ldlab/io.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "ldlab/error.hpp"

#ifndef LDLAB_VERSION
#define LDLAB_VERSION "0.0.0"
#endif

namespace ldlab {
namespace {

using json = nlohmann::json;

json num(double x) {
  if (std::isfinite(x)) return x;
  if (std::isnan(x)) return "nan";
  return x > 0 ? "inf" : "-inf";
}

json vec(const Vector& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(num(v(i)));
  return a;
}

json vec(const std::vector<double>& v) {
  json a = json::array();
  for (double x : v) a.push_back(num(x));
  return a;
}

json prov(const Provenance& p) {
  return {{"config_hash", p.config_hash},
          {"version", p.version},
          {"timestamp", p.timestamp},
          {"threads", p.threads},
          {"deterministic", p.deterministic}};
}

json doc(const std::string& kind, const Provenance& p) {
  return {{"kind", kind}, {"schema_version", kSchemaVersion}, {"provenance", prov(p)}};
}

json fit(const FitResult& f) {
  json n = json::array();
  for (const auto& s : f.notices) n.push_back(s);
  return {{"slope", num(f.slope)},
          {"intercept", num(f.intercept)},
          {"residual", num(f.residual)},
          {"points", f.points},
          {"notices", n}};
}

json fit(const std::optional<FitResult>& f) { return f ? fit(*f) : json(nullptr); }

json phonon(const PhononCheck& p) {
  return {{"stable", p.stable},
          {"c0_estimate", num(p.c0_estimate)},
          {"min_eigenvalue", num(p.min_eigenvalue)},
          {"worst_k", vec(p.worst_k)},
          {"grid", p.grid},
          {"points", p.points}};
}

json spectrum(const StabilityReport& s) {
  return {{"eigenvalues", vec(s.eigenvalues)},
          {"residuals", vec(s.residuals)},
          {"index", s.index},
          {"inf_sup", num(s.inf_sup)},
          {"iterations", s.iterations},
          {"converged", s.converged},
          {"message", s.message}};
}

json spectrum(const std::optional<StabilityReport>& s) { return s ? spectrum(*s) : json(nullptr); }

json relax_summary(const RelaxResult& r) {
  return {{"converged", r.converged},
          {"iterations", r.iterations},
          {"newton_iterations", r.newton_iterations},
          {"linear_iterations", r.linear_iterations},
          {"grad_inf", num(r.grad_inf)},
          {"energy", num(r.energy)},
          {"message", r.message}};
}

json relax_run(const RelaxRun& r) {
  json j = relax_summary(r.result);
  j["half_period"] = r.cell->half_period();
  j["sites"] = r.cell->size();
  j["phonon"] = phonon(r.phonon);
  j["stability"] = spectrum(r.stability);
  return j;
}

json profile(const std::optional<DecayProfile>& d) {
  if (!d) return nullptr;
  return {{"radii", vec(d->radii)}, {"values", vec(d->values)}, {"fit", fit(d->fit)}};
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

std::string norm_label(double p) { return std::isinf(p) ? "inf" : format_double(p); }

// Required top-level keys and their JSON types per document kind.
using Schema = std::map<std::string, json::value_t>;

const std::map<std::string, Schema>& schemas() {
  using V = json::value_t;
  static const std::map<std::string, Schema> s = {
      {"a0", {{"lattice", V::string}, {"a0", V::number_float}, {"energy_per_site", V::number_float},
              {"from_potential", V::boolean}}},
      {"stability", {{"phonon", V::object}, {"relax", V::null}}},
      {"relax", {{"relax", V::object}}},
      {"study", {{"norms", V::array}, {"rows", V::array}, {"fits", V::array}, {"notices", V::array},
                 {"phonon", V::null}, {"reference", V::object}}},
      {"greens", {{"half_periods", V::array}, {"orders", V::array}, {"big", V::number_unsigned},
                  {"errors", V::array}, {"fits", V::array}, {"decay", V::null}, {"invariants", V::object}}},
      {"checks", {{"decay", V::null}, {"caccioppoli", V::array}, {"poincare", V::array}, {"truncation", V::array},
                  {"notices", V::array}}},
      {"diagnostic", {{"command", V::string}, {"error", V::string}, {"message", V::string}}},
  };
  return s;
}

bool type_matches(const json& v, json::value_t want) {
  using V = json::value_t;
  switch (want) {
    case V::null: return true;  // nullable or structured, checked loosely
    case V::number_float: return v.is_number() || v.is_string();
    case V::number_unsigned: return v.is_number_integer();
    case V::object: return v.is_object();
    case V::array: return v.is_array();
    case V::string: return v.is_string();
    case V::boolean: return v.is_boolean();
    default: return false;
  }
}

}  // namespace

std::string version() { return LDLAB_VERSION; }

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.16e", x);
  return buf;
}

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string fnv1a_hex(std::string_view bytes) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(bytes)));
  return buf;
}

Provenance make_provenance(const Config& cfg, int threads, bool deterministic) {
  Provenance p;
  p.config_hash = fnv1a_hex(cfg.canonical);
  p.version = version();
  p.threads = threads;
  p.deterministic = deterministic;
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  p.timestamp = buf;
  return p;
}

std::string a0_json(const A0Run& r, const Provenance& p) {
  json j = doc("a0", p);
  j["lattice"] = r.lattice;
  j["a0"] = num(r.a0);
  j["energy_per_site"] = num(r.energy_per_site);
  j["from_potential"] = r.from_potential;
  return dump(j);
}

std::string stability_json(const StabilityRun& r, const Provenance& p) {
  json j = doc("stability", p);
  j["phonon"] = phonon(r.phonon);
  j["relax"] = r.relaxed ? relax_run(*r.relaxed) : json(nullptr);
  return dump(j);
}

std::string relax_json(const RelaxRun& r, const Provenance& p) {
  json j = doc("relax", p);
  j["relax"] = relax_run(r);
  return dump(j);
}

std::string study_json(const StudyResult& r, const Provenance& p) {
  json j = doc("study", p);
  json norms = json::array();
  for (double x : r.norms) norms.push_back(num(x));
  j["norms"] = norms;
  json rows = json::array();
  for (const auto& row : r.rows) {
    rows.push_back({{"half_period", row.half_period},
                    {"sites", row.sites},
                    {"converged", row.converged},
                    {"iterations", row.iterations},
                    {"newton_iterations", row.newton_iterations},
                    {"grad_inf", num(row.grad_inf)},
                    {"energy", num(row.energy)},
                    {"message", row.message},
                    {"errors", vec(row.errors)},
                    {"error_inf_half", num(row.error_inf_half)},
                    {"stability", spectrum(row.stability)}});
  }
  j["rows"] = rows;
  json fits = json::array();
  for (const auto& f : r.fits) fits.push_back(fit(f));
  j["fits"] = fits;
  j["notices"] = r.notices;
  j["phonon"] = r.phonon ? phonon(*r.phonon) : json(nullptr);
  json ref = relax_summary(r.reference);
  ref["half_period"] = r.reference_half_period;
  ref["sites"] = r.reference_cell ? r.reference_cell->size() : 0;
  j["reference"] = ref;
  return dump(j);
}

std::string greens_json(const GreensRun& r, const Provenance& p) {
  json j = doc("greens", p);
  j["half_periods"] = r.study.half_periods;
  j["orders"] = r.study.orders;
  j["big"] = r.study.big;
  json errs = json::array();
  for (const auto& e : r.study.errors) errs.push_back(vec(e));
  j["errors"] = errs;
  json fits = json::array();
  for (const auto& f : r.study.fits) fits.push_back(fit(f));
  j["fits"] = fits;
  j["decay"] = profile(r.decay);
  j["decay_half_period"] = r.decay_half_period;
  j["decay_notice"] = r.decay_notice;
  j["invariants"] = {{"residual", num(r.residual)},
                     {"symmetry", num(r.symmetry)},
                     {"mean", num(r.mean)},
                     {"third_difference_sum", num(r.third_sum)}};
  return dump(j);
}

std::string checks_json(const ChecksRun& r, const Provenance& p) {
  json j = doc("checks", p);
  if (r.decay) {
    j["decay"] = {{"skipped", r.decay->skipped},
                  {"notice", r.decay->notice},
                  {"first", profile(r.decay->first)},
                  {"second", profile(r.decay->second)}};
  } else {
    j["decay"] = nullptr;
  }
  json cac = json::array();
  for (const auto& [n, c] : r.caccioppoli) {
    json entries = json::array();
    for (const auto& e : c.entries) {
      entries.push_back({{"r", num(e.r)},
                         {"inner", num(e.inner)},
                         {"outer", num(e.outer)},
                         {"ratio", e.ratio ? num(*e.ratio) : json(nullptr)}});
    }
    cac.push_back({{"half_period", n},
                   {"entries", entries},
                   {"max_ratio", c.max_ratio ? num(*c.max_ratio) : json(nullptr)}});
  }
  j["caccioppoli"] = cac;
  json poi = json::array();
  for (const auto& [r1, r2, c] : r.poincare) {
    poi.push_back({{"r1", num(r1)},
                   {"r2", num(r2)},
                   {"samples", c.samples},
                   {"max_ratio", num(c.max_ratio)},
                   {"max_ratio_inf", num(c.max_ratio_inf)}});
  }
  j["poincare"] = poi;
  json tr = json::array();
  for (const auto& [rad, c] : r.truncation) {
    tr.push_back({{"radius", num(rad)},
                  {"samples", c.samples},
                  {"max_global", num(c.max_global)},
                  {"max_err1", num(c.max_err1)}});
  }
  j["truncation"] = tr;
  j["notices"] = r.notices;
  return dump(j);
}

std::string diagnostic_json(const std::string& command, const std::string& kind, const std::string& message,
                            const Provenance* p) {
  json j = {{"kind", "diagnostic"}, {"schema_version", kSchemaVersion}};
  j["provenance"] = p ? prov(*p) : json(nullptr);
  j["command"] = command;
  j["error"] = kind;
  j["message"] = message;
  return dump(j);
}

std::string study_errors_csv(const StudyResult& r) {
  std::string out = "N,p,err\n";
  for (const auto& row : r.rows) {
    for (std::size_t k = 0; k < r.norms.size(); ++k) {
      out += std::to_string(row.half_period) + "," + norm_label(r.norms[k]) + "," + format_double(row.errors[k]) + "\n";
    }
  }
  return out;
}

std::string study_slopes_csv(const StudyResult& r) {
  std::string out = "p,slope,intercept,residual,points\n";
  for (std::size_t k = 0; k < r.norms.size(); ++k) {
    if (!r.fits[k]) continue;
    const auto& f = *r.fits[k];
    out += norm_label(r.norms[k]) + "," + format_double(f.slope) + "," + format_double(f.intercept) + "," +
           format_double(f.residual) + "," + std::to_string(f.points) + "\n";
  }
  return out;
}

std::string history_csv(const RelaxResult& r) {
  std::string out = "iter,energy,grad_inf,step\n";
  for (const auto& h : r.history) {
    out += std::to_string(h.iter) + "," + format_double(h.energy) + "," + format_double(h.grad_inf) + "," +
           format_double(h.step) + "\n";
  }
  return out;
}

std::string greens_table_csv(const GreensTable& t) {
  const auto& cell = *t.cell;
  std::string out;
  for (int i = 0; i < cell.dim(); ++i) out += (i ? ",n" : "n") + std::to_string(i + 1);
  for (int a = 0; a < t.range_dim; ++a) {
    for (int b = 0; b < t.range_dim; ++b) out += ",g" + std::to_string(a + 1) + std::to_string(b + 1);
  }
  out += "\n";
  for (std::size_t s = 0; s < cell.size(); ++s) {
    const auto n = cell.coords(s);
    for (Eigen::Index i = 0; i < n.size(); ++i) out += (i ? "," : "") + std::to_string(n(i));
    const Matrix g = t.at(s);
    for (int a = 0; a < t.range_dim; ++a) {
      for (int b = 0; b < t.range_dim; ++b) out += "," + format_double(g(a, b));
    }
    out += "\n";
  }
  return out;
}

void write_xyz(std::ostream& os, const Supercell& cell, const Vector& u, const std::string& symbol) {
  const int d = cell.dim();
  const int m = cell.range_dim();
  if (u.size() != static_cast<Eigen::Index>(cell.dofs())) throw ConfigError("field does not match the cell");
  const Matrix period = 2.0 * cell.half_period() * cell.cell();
  Eigen::Matrix3d lat = Eigen::Matrix3d::Identity();
  lat.topLeftCorner(d, d) = period;
  os << cell.size() << "\n";
  os << "Lattice=\"";
  for (int c = 0; c < 3; ++c) {
    for (int r = 0; r < 3; ++r) os << (c || r ? " " : "") << format_double(lat(r, c));
  }
  os << "\" Properties=species:S:1:pos:R:3 pbc=\"" << (d >= 1 ? "T" : "F") << (d >= 2 ? " T" : " F")
     << (d >= 3 ? " T" : " F") << "\"\n";
  for (std::size_t i = 0; i < cell.size(); ++i) {
    Eigen::Vector3d x = Eigen::Vector3d::Zero();
    for (int a = 0; a < d; ++a) {
      x(a) = cell.position(i)(a);
      if (m == d) x(a) += u(static_cast<Eigen::Index>(i) * m + a);
    }
    os << symbol << " " << format_double(x(0)) << " " << format_double(x(1)) << " " << format_double(x(2)) << "\n";
  }
}

void validate_results(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("results document is not valid JSON: ") + e.what());
  }
  if (!j.is_object() || !j.contains("kind") || !j["kind"].is_string()) throw ConfigError("results document has no kind");
  const auto kind = j["kind"].get<std::string>();
  const auto it = schemas().find(kind);
  if (it == schemas().end()) throw ConfigError("unknown results kind \"" + kind + "\"");
  if (!j.contains("schema_version") || j["schema_version"] != kSchemaVersion) {
    throw ConfigError("results document has an unsupported schema_version");
  }
  if (!j.contains("provenance")) throw ConfigError("results document has no provenance");
  if (kind != "diagnostic" || !j["provenance"].is_null()) {
    const auto& p = j["provenance"];
    for (const char* k : {"config_hash", "version", "timestamp", "threads", "deterministic"}) {
      if (!p.is_object() || !p.contains(k)) throw ConfigError(std::string("provenance lacks ") + k);
    }
  }
  Schema allowed = it->second;
  allowed["kind"] = json::value_t::string;
  allowed["schema_version"] = json::value_t::number_unsigned;
  allowed["provenance"] = json::value_t::null;
  if (kind == "greens") {
    allowed["decay_half_period"] = json::value_t::number_unsigned;
    allowed["decay_notice"] = json::value_t::string;
  }
  for (const auto& [key, type] : allowed) {
    if (!j.contains(key)) throw ConfigError(kind + " results lack key \"" + key + "\"");
    if (!type_matches(j[key], type)) throw ConfigError(kind + " results: key \"" + key + "\" has the wrong type");
  }
  for (auto e = j.begin(); e != j.end(); ++e) {
    if (!allowed.count(e.key())) throw ConfigError(kind + " results: unexpected key \"" + e.key() + "\"");
  }
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path);
  out << content;
  if (!out) throw ConfigError("failed writing " + path);
}

}  // namespace ldlab
