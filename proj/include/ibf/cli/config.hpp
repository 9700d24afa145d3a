#pragma once

// Strict JSON run configuration. Every field is validated before any
// computation; the first offending field is reported by its dotted path.
// Physical parameters (dt, T, measures, radii, path counts) have no defaults;
// purely numerical knobs (resolutions, strides, tolerances) do.
//
// Top-level keys: model, command, params, output (optional), seed.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "ibf/covariance.hpp"
#include "ibf/drift_field.hpp"
#include "ibf/error.hpp"
#include "ibf/flow_engine.hpp"
#include "ibf/rkhs.hpp"
#include "ibf/spectral.hpp"

namespace ibf::cli {

using json = nlohmann::json;

inline const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names{
      "covariance", "check-condition", "verify-identity", "lyapunov",
      "squeeze",    "expand",          "track-control",   "length-decay"};
  return names;
}

struct CovarianceParams {
  double s_min = 0.0;
  double s_max = 0.0;
  int n_points = 0;
};

struct CheckConditionParams {
  double rho = 0.0;
  double tol = kDefaultConditionTol;
};

struct VerifyIdentityParams {
  std::vector<double> rho;
  int resolution = 0;  // 0: 512 (d=2), 48 (d=3), 4096 Monte-Carlo nodes (d>=4)
};

struct LyapunovCommand {
  LyapunovParams p;
};

struct SqueezeCommand {
  SqueezeParams p;  // p.expansion distinguishes `expand`
};

struct TrackControlParams {
  double rho = 0.0;
  std::vector<double> c_values;
  double T = 0.0;
  double dt = 0.0;
  std::size_t n_paths = 0;
  int n_points = 8;
  TrackingOptions options;
};

struct LengthDecayCommand {
  LengthDecayParams p;
  Mat curve;  // d x n vertices
};

using CommandParams =
    std::variant<CovarianceParams, CheckConditionParams, VerifyIdentityParams, LyapunovCommand,
                 SqueezeCommand, TrackControlParams, LengthDecayCommand>;

struct OutputSpec {
  std::string dir = ".";
  std::string csv;     // default "<command>.csv"
  std::string report;  // default "<command>.json"
};

struct RunConfig {
  std::string command;
  std::optional<IbfModel> model;
  CommandParams params;
  OutputSpec output;
  std::uint64_t seed = 0;
  /// Normalized, defaults-filled document; parsing it again yields the same run.
  json echo;

  const IbfModel& get_model() const { return *model; }
};

namespace detail {

/// Object view that remembers which keys were read, so leftovers can be
/// rejected as unknown fields.
class Fields {
public:
  Fields(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_.empty() ? "<document>" : path_, "must be an object");
  }

  std::string sub(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  const json* find(const std::string& key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  const json& need(const std::string& key) {
    const json* v = find(key);
    if (v == nullptr) throw ConfigError(sub(key), "is required");
    return *v;
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.count(it.key())) throw ConfigError(sub(it.key()), "unknown field");
    }
  }

private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

inline double as_real(const json& v, const std::string& path) {
  if (!v.is_number()) throw ConfigError(path, "must be a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) throw ConfigError(path, "must be finite");
  return x;
}

inline long long as_int(const json& v, const std::string& path) {
  if (!v.is_number_integer()) throw ConfigError(path, "must be an integer");
  return v.get<long long>();
}

inline bool as_bool(const json& v, const std::string& path) {
  if (!v.is_boolean()) throw ConfigError(path, "must be true or false");
  return v.get<bool>();
}

inline std::string as_string(const json& v, const std::string& path) {
  if (!v.is_string()) throw ConfigError(path, "must be a string");
  return v.get<std::string>();
}

inline std::vector<double> as_reals(const json& v, const std::string& path) {
  if (!v.is_array()) throw ConfigError(path, "must be an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    out.push_back(as_real(v[i], path + "[" + std::to_string(i) + "]"));
  }
  return out;
}

inline double positive(Fields& f, const std::string& key) {
  const double x = as_real(f.need(key), f.sub(key));
  if (!(x > 0.0)) throw ConfigError(f.sub(key), "must be > 0");
  return x;
}

inline double real_or(Fields& f, const std::string& key, double fallback) {
  const json* v = f.find(key);
  return v ? as_real(*v, f.sub(key)) : fallback;
}

inline long long int_or(Fields& f, const std::string& key, long long fallback) {
  const json* v = f.find(key);
  return v ? as_int(*v, f.sub(key)) : fallback;
}

inline bool bool_or(Fields& f, const std::string& key, bool fallback) {
  const json* v = f.find(key);
  return v ? as_bool(*v, f.sub(key)) : fallback;
}

inline long long at_least(Fields& f, const std::string& key, long long lo,
                          std::optional<long long> fallback = std::nullopt) {
  const json* v = fallback ? f.find(key) : &f.need(key);
  if (v == nullptr) return *fallback;
  const long long x = as_int(*v, f.sub(key));
  if (x < lo) throw ConfigError(f.sub(key), "must be >= " + std::to_string(lo));
  return x;
}

inline SamplerBasis basis_or_default(Fields& f) {
  const json* v = f.find("sampler_basis");
  if (v == nullptr) return SamplerBasis::anchored;
  const std::string s = as_string(*v, f.sub("sampler_basis"));
  if (s == "anchored") return SamplerBasis::anchored;
  if (s == "absolute") return SamplerBasis::absolute;
  throw ConfigError(f.sub("sampler_basis"), "must be \"anchored\" or \"absolute\"");
}

inline const char* basis_name(SamplerBasis b) {
  return b == SamplerBasis::anchored ? "anchored" : "absolute";
}

inline void check_time_grid(double T, double dt, const std::string& dt_path) {
  if (dt > T) throw ConfigError(dt_path, "must be <= the time horizon");
}

inline SpectralMeasure parse_measure(const json& j, const std::string& path) {
  Fields f(j, path);
  std::vector<Atom> atoms;
  std::vector<DensityPiece> density;
  if (const json* a = f.find("atoms")) {
    if (!a->is_array()) throw ConfigError(f.sub("atoms"), "must be an array");
    for (std::size_t i = 0; i < a->size(); ++i) {
      const std::string p = f.sub("atoms") + "[" + std::to_string(i) + "]";
      Fields af((*a)[i], p);
      const double loc = as_real(af.need("location"), af.sub("location"));
      const double w = as_real(af.need("weight"), af.sub("weight"));
      af.finish();
      if (!(loc > 0.0)) throw ConfigError(af.sub("location"), "must be > 0 (spectral support lies in (0, inf))");
      if (!(w >= 0.0)) throw ConfigError(af.sub("weight"), "must be >= 0");
      atoms.push_back({loc, w});
    }
  }
  if (const json* dpieces = f.find("density")) {
    if (!dpieces->is_array()) throw ConfigError(f.sub("density"), "must be an array");
    for (std::size_t i = 0; i < dpieces->size(); ++i) {
      const std::string p = f.sub("density") + "[" + std::to_string(i) + "]";
      Fields pf((*dpieces)[i], p);
      const double lo = as_real(pf.need("lo"), pf.sub("lo"));
      const double hi = as_real(pf.need("hi"), pf.sub("hi"));
      const double h = as_real(pf.need("height"), pf.sub("height"));
      pf.finish();
      if (!(lo > 0.0)) throw ConfigError(pf.sub("lo"), "must be > 0 (spectral support lies in (0, inf))");
      if (!(hi > lo)) throw ConfigError(pf.sub("hi"), "must be > lo");
      if (!(h >= 0.0)) throw ConfigError(pf.sub("height"), "must be >= 0");
      density.push_back({lo, hi, h});
    }
  }
  f.finish();
  if (atoms.empty() && density.empty()) throw ConfigError(path, "needs at least one atom or density piece");
  try {
    return SpectralMeasure(std::move(atoms), std::move(density));
  } catch (const ParameterError& e) {
    throw ConfigError(path, e.what());
  }
}

inline json measure_to_json(const SpectralMeasure& m) {
  json out = json::object();
  json atoms = json::array();
  for (const auto& a : m.atoms()) atoms.push_back({{"location", a.location}, {"weight", a.weight}});
  json dens = json::array();
  for (const auto& p : m.density()) dens.push_back({{"lo", p.lo}, {"hi", p.hi}, {"height", p.height}});
  if (!atoms.empty()) out["atoms"] = atoms;
  if (!dens.empty()) out["density"] = dens;
  return out;
}

inline DriftField parse_drift(const json& j, const std::string& path, int d) {
  Fields f(j, path);
  const std::string kind = as_string(f.need("kind"), f.sub("kind"));
  DriftField out;
  if (kind == "none") {
    out = NoDrift{};
  } else if (kind == "linear") {
    const json& m = f.need("matrix");
    const std::string mp = f.sub("matrix");
    if (!m.is_array() || m.size() != static_cast<std::size_t>(d)) {
      throw ConfigError(mp, "must be a d x d array of rows");
    }
    Mat a(d, d);
    for (int i = 0; i < d; ++i) {
      const auto row = as_reals(m[i], mp + "[" + std::to_string(i) + "]");
      if (row.size() != static_cast<std::size_t>(d)) throw ConfigError(mp, "must be a d x d array of rows");
      for (int k = 0; k < d; ++k) a(i, k) = row[static_cast<std::size_t>(k)];
    }
    out = LinearDrift{a};
  } else if (kind == "radial_rkhs") {
    RadialRkhsDrift r;
    r.rho = positive(f, "rho");
    r.scale = as_real(f.need("scale"), f.sub("scale"));
    r.resolution = static_cast<int>(at_least(f, "resolution", 0, 0));
    out = r;
  } else if (kind == "custom_table") {
    TableDrift t;
    const json& axes = f.need("axes");
    const std::string ap = f.sub("axes");
    if (!axes.is_array() || axes.size() != static_cast<std::size_t>(d)) {
      throw ConfigError(ap, "must list one grid axis per dimension");
    }
    std::size_t total = 1;
    for (int k = 0; k < d; ++k) {
      const std::string p = ap + "[" + std::to_string(k) + "]";
      auto ax = as_reals(axes[static_cast<std::size_t>(k)], p);
      if (ax.empty()) throw ConfigError(p, "must not be empty");
      for (std::size_t i = 1; i < ax.size(); ++i) {
        if (!(ax[i] > ax[i - 1])) throw ConfigError(p, "must be strictly increasing");
      }
      total *= ax.size();
      t.axes.push_back(std::move(ax));
    }
    const json& vals = f.need("values");
    const std::string vp = f.sub("values");
    if (!vals.is_array() || vals.size() != total) {
      throw ConfigError(vp, "must hold one d-vector per grid node (" + std::to_string(total) + ")");
    }
    t.values.resize(d, static_cast<Eigen::Index>(total));
    for (std::size_t i = 0; i < total; ++i) {
      const auto v = as_reals(vals[i], vp + "[" + std::to_string(i) + "]");
      if (v.size() != static_cast<std::size_t>(d)) {
        throw ConfigError(vp + "[" + std::to_string(i) + "]", "must have d entries");
      }
      for (int k = 0; k < d; ++k) t.values(k, static_cast<Eigen::Index>(i)) = v[static_cast<std::size_t>(k)];
    }
    out = t;
  } else {
    throw ConfigError(f.sub("kind"), "must be one of none, linear, radial_rkhs, custom_table");
  }
  f.finish();
  return out;
}

inline json drift_to_json(const DriftField& v) {
  struct Visitor {
    json operator()(const NoDrift&) const { return {{"kind", "none"}}; }
    json operator()(const LinearDrift& l) const {
      json rows = json::array();
      for (Eigen::Index i = 0; i < l.a.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index k = 0; k < l.a.cols(); ++k) row.push_back(l.a(i, k));
        rows.push_back(row);
      }
      return {{"kind", "linear"}, {"matrix", rows}};
    }
    json operator()(const RadialRkhsDrift& r) const {
      return {{"kind", "radial_rkhs"}, {"rho", r.rho}, {"scale", r.scale}, {"resolution", r.resolution}};
    }
    json operator()(const TableDrift& t) const {
      json vals = json::array();
      for (Eigen::Index i = 0; i < t.values.cols(); ++i) {
        json v = json::array();
        for (Eigen::Index k = 0; k < t.values.rows(); ++k) v.push_back(t.values(k, i));
        vals.push_back(v);
      }
      return {{"kind", "custom_table"}, {"axes", t.axes}, {"values", vals}};
    }
  };
  return std::visit(Visitor{}, v);
}

inline json points_to_json(const Mat& x) {
  json pts = json::array();
  for (Eigen::Index i = 0; i < x.cols(); ++i) {
    json p = json::array();
    for (Eigen::Index k = 0; k < x.rows(); ++k) p.push_back(x(k, i));
    pts.push_back(p);
  }
  return pts;
}

inline std::pair<IbfModel, json> parse_model(const json& j) {
  Fields f(j, "model");
  const long long d = as_int(f.need("d"), "model.d");
  if (d < kMinDimension || d > kMaxDimension) throw ConfigError("model.d", "must lie in [2, 16]");
  const double mu0 = real_or(f, "mu0", 0.0);
  const double mu1 = real_or(f, "mu1", 0.0);
  const double mu2 = real_or(f, "mu2", 0.0);
  for (const auto& [name, mu] : {std::pair{"mu0", mu0}, {"mu1", mu1}, {"mu2", mu2}}) {
    if (!(mu >= 0.0)) throw ConfigError(std::string("model.") + name, "must be >= 0");
  }
  if (std::abs(mu0 + mu1 + mu2 - 1.0) > 1e-12) {
    throw ConfigError("model.mu", "mu0+mu1+mu2 must equal 1");
  }
  ModelOptions opt;
  opt.allow_trivial = bool_or(f, "allow_trivial", false);
  opt.quad_nodes_per_piece = static_cast<int>(at_least(f, "quad_nodes", 1, kDefaultQuadNodes));
  if (mu0 == 1.0 && !opt.allow_trivial) {
    throw ConfigError("model.mu0", "mu0 = 1 is the trivial translation flow; set allow_trivial");
  }
  std::optional<SpectralMeasure> mp, ms;
  if (const json* p = f.find("potential")) mp = parse_measure(*p, "model.potential");
  if (const json* s = f.find("solenoidal")) ms = parse_measure(*s, "model.solenoidal");
  if (mu1 > 0.0 && !mp) throw ConfigError("model.potential", "is required when mu1 > 0");
  if (mu2 > 0.0 && !ms) throw ConfigError("model.solenoidal", "is required when mu2 > 0");
  std::optional<DriftField> drift;
  if (const json* v = f.find("drift")) drift = parse_drift(*v, "model.drift", static_cast<int>(d));
  f.finish();

  if (mu1 == 0.0) mp.reset();
  if (mu2 == 0.0) ms.reset();
  // Raw measures are rescaled to the required mass. Measures that already carry
  // it (such as a report's config echo) are left bit-for-bit unchanged.
  auto needs_scaling = [](const SpectralMeasure& m, double target) {
    return std::abs(total_mass(m) - target) > 1e-12 * target;
  };
  const double dd = static_cast<double>(d);
  if (mp && needs_scaling(*mp, dd)) mp = normalize_potential(*mp, static_cast<int>(d));
  if (ms && needs_scaling(*ms, dd / (dd - 1.0))) ms = normalize_solenoidal(*ms, static_cast<int>(d));
  IbfModel model = [&] {
    try {
      return IbfModel::create(static_cast<int>(d), mu0, mu1, mu2, mp, ms, drift, opt);
    } catch (const ModelError& e) {
      throw ConfigError("model", e.what());
    }
  }();

  json echo = {{"d", d}, {"mu0", mu0}, {"mu1", mu1}, {"mu2", mu2},
               {"allow_trivial", opt.allow_trivial}, {"quad_nodes", opt.quad_nodes_per_piece}};
  if (mp) echo["potential"] = measure_to_json(*mp);
  if (ms) echo["solenoidal"] = measure_to_json(*ms);
  if (drift) echo["drift"] = drift_to_json(*drift);
  return {std::move(model), std::move(echo)};
}

inline Mat parse_curve(const json& j, const std::string& path, int d, json& echo) {
  Fields f(j, path);
  Mat out;
  const json* pts = f.find("points");
  const json* seg = f.find("segment");
  if ((pts == nullptr) == (seg == nullptr)) {
    throw ConfigError(path, "needs exactly one of points, segment");
  }
  if (pts != nullptr) {
    if (!pts->is_array() || pts->size() < 2) throw ConfigError(f.sub("points"), "needs >= 2 vertices");
    out.resize(d, static_cast<Eigen::Index>(pts->size()));
    for (std::size_t i = 0; i < pts->size(); ++i) {
      const std::string p = f.sub("points") + "[" + std::to_string(i) + "]";
      const auto v = as_reals((*pts)[i], p);
      if (v.size() != static_cast<std::size_t>(d)) throw ConfigError(p, "must have d entries");
      for (int k = 0; k < d; ++k) out(k, static_cast<Eigen::Index>(i)) = v[static_cast<std::size_t>(k)];
    }
  } else {
    Fields sf(*seg, f.sub("segment"));
    const auto a = as_reals(sf.need("start"), sf.sub("start"));
    const auto b = as_reals(sf.need("end"), sf.sub("end"));
    const long long n = at_least(sf, "n_vertices", 2);
    sf.finish();
    if (a.size() != static_cast<std::size_t>(d)) throw ConfigError(sf.sub("start"), "must have d entries");
    if (b.size() != static_cast<std::size_t>(d)) throw ConfigError(sf.sub("end"), "must have d entries");
    out.resize(d, n);
    for (long long i = 0; i < n; ++i) {
      const double s = static_cast<double>(i) / static_cast<double>(n - 1);
      for (int k = 0; k < d; ++k) {
        const auto kk = static_cast<std::size_t>(k);
        out(k, i) = (1.0 - s) * a[kk] + s * b[kk];
      }
    }
  }
  f.finish();
  echo = {{"points", points_to_json(out)}};
  return out;
}

inline std::pair<CommandParams, json> parse_params(const std::string& cmd, const json& j,
                                                   const IbfModel& model) {
  Fields f(j, "params");
  const int d = model.dim();
  json echo;
  CommandParams out;
  if (cmd == "covariance") {
    CovarianceParams p;
    p.s_min = real_or(f, "s_min", 0.0);
    if (!(p.s_min >= 0.0)) throw ConfigError("params.s_min", "must be >= 0");
    p.s_max = positive(f, "s_max");
    if (!(p.s_max > p.s_min)) throw ConfigError("params.s_max", "must be > s_min");
    p.n_points = static_cast<int>(at_least(f, "n_points", 2));
    echo = {{"s_min", p.s_min}, {"s_max", p.s_max}, {"n_points", p.n_points}};
    out = p;
  } else if (cmd == "check-condition") {
    CheckConditionParams p;
    p.rho = positive(f, "rho");
    p.tol = real_or(f, "tol", kDefaultConditionTol);
    if (!(p.tol > 0.0)) throw ConfigError("params.tol", "must be > 0");
    echo = {{"rho", p.rho}, {"tol", p.tol}};
    out = p;
  } else if (cmd == "verify-identity") {
    VerifyIdentityParams p;
    p.rho = as_reals(f.need("rho"), "params.rho");
    if (p.rho.empty()) throw ConfigError("params.rho", "must list at least one radius");
    for (std::size_t i = 0; i < p.rho.size(); ++i) {
      if (!(p.rho[i] > 0.0)) throw ConfigError("params.rho[" + std::to_string(i) + "]", "must be > 0");
    }
    const int fallback = d == 2 ? 512 : d == 3 ? 48 : 4096;
    p.resolution = static_cast<int>(at_least(f, "resolution", 1, fallback));
    echo = {{"rho", p.rho}, {"resolution", p.resolution}};
    out = p;
  } else if (cmd == "lyapunov") {
    LyapunovCommand c;
    c.p.T = positive(f, "T");
    c.p.dt = positive(f, "dt");
    check_time_grid(c.p.T, c.p.dt, "params.dt");
    c.p.n_pairs = static_cast<std::size_t>(at_least(f, "n_pairs", 1));
    c.p.renorm_eps = real_or(f, "renorm_eps", 1e-3);
    if (!(c.p.renorm_eps > 1e-8 && c.p.renorm_eps < 1e-2)) {
      throw ConfigError("params.renorm_eps", "must lie in (1e-8, 1e-2)");
    }
    c.p.basis = basis_or_default(f);
    echo = {{"T", c.p.T}, {"dt", c.p.dt}, {"n_pairs", c.p.n_pairs},
            {"renorm_eps", c.p.renorm_eps}, {"sampler_basis", basis_name(c.p.basis)}};
    out = c;
  } else if (cmd == "squeeze" || cmd == "expand") {
    SqueezeCommand c;
    c.p.expansion = cmd == "expand";
    c.p.R = positive(f, "R");
    c.p.delta = positive(f, "delta");
    if (!(c.p.delta < c.p.R)) throw ConfigError("params.delta", "must be < R");
    c.p.T1 = positive(f, "T1");
    c.p.T2 = positive(f, "T2");
    if (!(c.p.T2 > c.p.T1)) throw ConfigError("params.T2", "must be > T1");
    c.p.dt = positive(f, "dt");
    check_time_grid(c.p.T2, c.p.dt, "params.dt");
    c.p.n_paths = static_cast<std::size_t>(at_least(f, "n_paths", 1));
    c.p.n_boundary = static_cast<int>(at_least(f, "n_boundary", 8, 64));
    c.p.snapshot_stride = static_cast<int>(at_least(f, "snapshot_stride", 1, 10));
    c.p.noise_scale = bool_or(f, "noise", true) ? 1.0 : 0.0;
    c.p.basis = basis_or_default(f);
    echo = {{"R", c.p.R}, {"delta", c.p.delta}, {"T1", c.p.T1}, {"T2", c.p.T2}, {"dt", c.p.dt},
            {"n_paths", c.p.n_paths}, {"n_boundary", c.p.n_boundary},
            {"snapshot_stride", c.p.snapshot_stride}, {"noise", c.p.noise_scale != 0.0},
            {"sampler_basis", basis_name(c.p.basis)}};
    out = c;
  } else if (cmd == "track-control") {
    TrackControlParams p;
    p.rho = positive(f, "rho");
    p.c_values = as_reals(f.need("c_values"), "params.c_values");
    if (p.c_values.empty()) throw ConfigError("params.c_values", "must list at least one scale");
    for (std::size_t i = 0; i < p.c_values.size(); ++i) {
      if (!(p.c_values[i] >= 1.0)) throw ConfigError("params.c_values[" + std::to_string(i) + "]", "must be >= 1");
    }
    p.T = positive(f, "T");
    p.dt = positive(f, "dt");
    check_time_grid(p.T, p.dt, "params.dt");
    p.n_paths = static_cast<std::size_t>(at_least(f, "n_paths", 1));
    p.n_points = static_cast<int>(at_least(f, "n_points", 1, 8));
    p.options.noise_scale = bool_or(f, "noise", true) ? 1.0 : 0.0;
    p.options.inverse_drift = bool_or(f, "inverse_drift", true);
    p.options.sphere_resolution = static_cast<int>(at_least(f, "resolution", 0, 0));
    p.options.basis = basis_or_default(f);
    if (!(model.mu1() > 0.0)) {
      throw ConfigError("model.mu1", "track-control needs mu1 > 0 (the inward field vanishes otherwise)");
    }
    echo = {{"rho", p.rho}, {"c_values", p.c_values}, {"T", p.T}, {"dt", p.dt},
            {"n_paths", p.n_paths}, {"n_points", p.n_points},
            {"noise", p.options.noise_scale != 0.0}, {"inverse_drift", p.options.inverse_drift},
            {"resolution", p.options.sphere_resolution},
            {"sampler_basis", basis_name(p.options.basis)}};
    out = p;
  } else if (cmd == "length-decay") {
    LengthDecayCommand c;
    c.p.T = positive(f, "T");
    c.p.dt = positive(f, "dt");
    check_time_grid(c.p.T, c.p.dt, "params.dt");
    c.p.n_paths = static_cast<std::size_t>(at_least(f, "n_paths", 1));
    json curve_echo;
    c.curve = parse_curve(f.need("curve"), "params.curve", d, curve_echo);
    if (!(curve_length(c.curve, false) > 0.0)) throw ConfigError("params.curve", "must have positive length");
    c.p.closed = bool_or(f, "closed", false);
    c.p.snapshot_stride = static_cast<int>(at_least(f, "snapshot_stride", 1, 10));
    c.p.shrink_factor = real_or(f, "shrink_factor", 0.1);
    if (!(c.p.shrink_factor > 0.0 && c.p.shrink_factor < 1.0)) {
      throw ConfigError("params.shrink_factor", "must lie in (0, 1)");
    }
    c.p.basis = basis_or_default(f);
    echo = {{"T", c.p.T}, {"dt", c.p.dt}, {"n_paths", c.p.n_paths}, {"curve", curve_echo},
            {"closed", c.p.closed}, {"snapshot_stride", c.p.snapshot_stride},
            {"shrink_factor", c.p.shrink_factor}, {"sampler_basis", basis_name(c.p.basis)}};
    out = c;
  }
  f.finish();
  return {std::move(out), std::move(echo)};
}

}  // namespace detail

/// Parses and validates a configuration document. Throws ConfigError naming
/// the first offending field.
inline RunConfig parse_config(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("<document>", std::string("not valid JSON: ") + e.what());
  }
  detail::Fields top(doc, "");
  RunConfig cfg;
  cfg.command = detail::as_string(top.need("command"), "command");
  const auto& names = command_names();
  if (std::find(names.begin(), names.end(), cfg.command) == names.end()) {
    throw ConfigError("command", "unknown command '" + cfg.command + "'");
  }
  const json& seed = top.need("seed");
  if (!seed.is_number_unsigned()) throw ConfigError("seed", "must be a non-negative integer");
  cfg.seed = seed.get<std::uint64_t>();
  auto [model, model_echo] = detail::parse_model(top.need("model"));
  cfg.model.emplace(std::move(model));
  auto [params, params_echo] = detail::parse_params(cfg.command, top.need("params"), *cfg.model);
  cfg.params = std::move(params);
  if (const json* out = top.find("output")) {
    detail::Fields of(*out, "output");
    if (const json* v = of.find("dir")) cfg.output.dir = detail::as_string(*v, "output.dir");
    if (const json* v = of.find("csv")) cfg.output.csv = detail::as_string(*v, "output.csv");
    if (const json* v = of.find("report")) cfg.output.report = detail::as_string(*v, "output.report");
    of.finish();
  }
  top.finish();
  if (cfg.output.csv.empty()) cfg.output.csv = cfg.command + ".csv";
  if (cfg.output.report.empty()) cfg.output.report = cfg.command + ".json";
  cfg.echo = {{"model", model_echo},
              {"command", cfg.command},
              {"params", params_echo},
              {"output", {{"dir", cfg.output.dir}, {"csv", cfg.output.csv}, {"report", cfg.output.report}}},
              {"seed", cfg.seed}};
  return cfg;
}

}  // namespace ibf::cli
