#pragma once

// Euler integration of the Kunita flow on point clouds, the deterministic RK4
// flow of a drift, the tilted (large-drift) tracking study and the observables
// used by the experiments: containment, diameter, curve length, Lyapunov
// exponent and curve-length decay.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "ibf/covariance.hpp"
#include "ibf/drift_field.hpp"
#include "ibf/error.hpp"
#include "ibf/field_sampler.hpp"
#include "ibf/parallel.hpp"
#include "ibf/point_cloud.hpp"

namespace ibf {

// ---------------------------------------------------------------------------
// Statistics

struct Summary {
  std::size_t n = 0;
  double mean = std::numeric_limits<double>::quiet_NaN();
  double sd = std::numeric_limits<double>::quiet_NaN();  // sample SD (n - 1)
  double se = std::numeric_limits<double>::quiet_NaN();  // sd / sqrt(n)
  double min = std::numeric_limits<double>::quiet_NaN();
  double max = std::numeric_limits<double>::quiet_NaN();
};

inline Summary summarize(const std::vector<double>& v) {
  Summary s;
  s.n = v.size();
  if (v.empty()) return s;
  double sum = 0.0;
  for (double x : v) sum += x;
  s.mean = sum / static_cast<double>(v.size());
  s.min = *std::min_element(v.begin(), v.end());
  s.max = *std::max_element(v.begin(), v.end());
  if (v.size() >= 2) {
    double ss = 0.0;
    for (double x : v) ss += (x - s.mean) * (x - s.mean);
    s.sd = std::sqrt(ss / static_cast<double>(v.size() - 1));
    s.se = s.sd / std::sqrt(static_cast<double>(v.size()));
  }
  return s;
}

/// Success count with a 95% Wilson score interval.
struct Proportion {
  std::size_t successes = 0;
  std::size_t trials = 0;
  double frequency = 0.0;
  double lo = 0.0;
  double hi = 1.0;
};

inline Proportion wilson_interval(std::size_t k, std::size_t n, double z = 1.959963984540054) {
  Proportion p;
  p.successes = k;
  p.trials = n;
  if (n == 0) return p;
  const double nn = static_cast<double>(n);
  const double f = static_cast<double>(k) / nn;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / nn;
  const double centre = (f + z2 / (2.0 * nn)) / denom;
  const double half = z * std::sqrt(f * (1.0 - f) / nn + z2 / (4.0 * nn * nn)) / denom;
  p.frequency = f;
  p.lo = std::max(0.0, centre - half);
  p.hi = std::min(1.0, centre + half);
  return p;
}

/// Generator for path `index` of an experiment.
inline Rng path_rng(std::uint64_t seed, std::uint64_t index) { return Rng(seed ^ index); }

// ---------------------------------------------------------------------------
// Geometry

inline bool containment(const PointCloud& cloud, double radius, const Vec& center) {
  if (!(radius > 0.0)) throw ParameterError("containment: radius must be > 0");
  if (center.size() != cloud.dim()) throw ParameterError("containment: center dimension mismatch");
  for (Eigen::Index i = 0; i < cloud.size(); ++i) {
    if (!((cloud.positions.col(i) - center).norm() < radius)) return false;
  }
  return true;
}

inline bool containment(const PointCloud& cloud, double radius) {
  return containment(cloud, radius, Vec::Zero(cloud.dim()));
}

inline double diameter(const Mat& x) {
  double best = 0.0;
  for (Eigen::Index i = 0; i < x.cols(); ++i) {
    for (Eigen::Index j = i + 1; j < x.cols(); ++j) {
      best = std::max(best, (x.col(i) - x.col(j)).squaredNorm());
    }
  }
  return std::sqrt(best);
}

inline double diameter(const PointCloud& cloud) { return diameter(cloud.positions); }

inline double curve_length(const Mat& x, bool closed = false) {
  double len = 0.0;
  for (Eigen::Index i = 1; i < x.cols(); ++i) len += (x.col(i) - x.col(i - 1)).norm();
  if (closed && x.cols() > 2) len += (x.col(0) - x.col(x.cols() - 1)).norm();
  return len;
}

inline double curve_length(const PointCloud& cloud, bool closed = false) {
  return curve_length(cloud.positions, closed);
}

/// Winding number of the closed planar polygon around the origin.
inline int winding_number(const Mat& x) {
  if (x.rows() != 2) throw ParameterError("winding_number: planar curves only");
  double total = 0.0;
  const Eigen::Index n = x.cols();
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto a = x.col(i);
    const auto b = x.col((i + 1) % n);
    total += std::atan2(a(0) * b(1) - a(1) * b(0), a.dot(b));
  }
  return static_cast<int>(std::lround(total / (2.0 * std::numbers::pi)));
}

/// n points on the sphere of the given radius: uniform angles (d = 2), a
/// Fibonacci lattice (d = 3), normalized Gaussian draws (d >= 4).
inline Mat sphere_tracers(int d, int n, double radius, std::uint64_t seed = kDefaultSphereSeed) {
  if (n < 1) throw ParameterError("sphere_tracers: need at least one tracer");
  Mat x(d, n);
  if (d == 2) {
    for (int k = 0; k < n; ++k) {
      const double a = 2.0 * std::numbers::pi * k / n;
      x(0, k) = std::cos(a);
      x(1, k) = std::sin(a);
    }
  } else if (d == 3) {
    const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
    for (int k = 0; k < n; ++k) {
      const double z = 1.0 - (2.0 * k + 1.0) / n;
      const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
      x(0, k) = r * std::cos(golden * k);
      x(1, k) = r * std::sin(golden * k);
      x(2, k) = z;
    }
  } else {
    Rng rng(seed);
    std::normal_distribution<double> normal;
    for (int k = 0; k < n; ++k) {
      Vec g(d);
      do {
        for (int i = 0; i < d; ++i) g(i) = normal(rng);
      } while (g.norm() == 0.0);
      x.col(k) = g / g.norm();
    }
  }
  return radius * x;
}

// ---------------------------------------------------------------------------
// Time grid

namespace detail {

inline void check_interval(double t0, double t1, double dt) {
  if (!std::isfinite(t0) || !std::isfinite(t1) || !(t1 > t0)) {
    throw ParameterError("flow: need finite t1 > t0");
  }
  if (!(dt > 0.0) || !(dt <= t1 - t0)) {
    throw ParameterError("flow: need 0 < dt <= t1 - t0");
  }
}

/// Number of steps; the last one is shortened to land on t1. Remainders below
/// 1e-9 dt are merged into the previous step.
inline std::size_t step_count(double t0, double t1, double dt) {
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil((t1 - t0) / dt - 1e-9)));
}

inline double grid_time(double t0, double t1, double dt, std::size_t k, std::size_t n) {
  return k >= n ? t1 : t0 + static_cast<double>(k) * dt;
}

template <class F>
decltype(auto) with_path_context(std::size_t path, F&& f) {
  const std::string where = "path " + std::to_string(path) + ": ";
  try {
    return f();
  } catch (const DegenerateConfigurationError& e) {
    throw DegenerateConfigurationError(where + e.what(), e.first(), e.second());
  } catch (const NumericUnderflowError& e) {
    throw NumericUnderflowError(where + e.what());
  } catch (const EvaluationError& e) {
    throw EvaluationError(where + e.what(), e.abscissa());
  }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Stochastic flow

struct FlowOptions {
  /// Multiplies the martingale increment; 0 switches the noise off.
  double noise_scale = 1.0;
  /// Snapshots are kept every `snapshot_stride` steps (and at the final time).
  int snapshot_stride = 10;
  SamplerBasis basis = SamplerBasis::anchored;
};

struct Trajectory {
  std::vector<PointCloud> snapshots;
  double jitter_max = 0.0;
};

/// Euler scheme x <- x + noise_scale dM + v(x) dt. `drift` is a callable
/// (x, t) -> d-vector or nullptr-like `std::nullopt` via `has_drift = false`.
/// `observe(k, t, x)` runs after step k (k = 0 is the initial state) and may
/// modify x. Returns the largest jitter used by any sampler.
template <class Drift, class Observer>
double euler_integrate(const IbfModel& m, Mat& x, double t0, double t1, double dt,
                       const Drift& drift, bool has_drift, Rng& rng, const FlowOptions& opt,
                       Observer&& observe) {
  detail::check_interval(t0, t1, dt);
  if (x.rows() != m.dim() || x.cols() < 1) {
    throw ParameterError("flow: cloud dimension does not match the model");
  }
  if (!x.allFinite()) throw ParameterError("flow: positions must be finite");
  const std::size_t n = detail::step_count(t0, t1, dt);
  double jitter_max = 0.0;
  observe(std::size_t{0}, t0, x);
  for (std::size_t k = 1; k <= n; ++k) {
    const double ta = detail::grid_time(t0, t1, dt, k - 1, n);
    const double tb = detail::grid_time(t0, t1, dt, k, n);
    const double h = tb - ta;
    Mat step;
    if (opt.noise_scale != 0.0) {
      const auto sampler = build_sampler(m, PointCloud{x, ta}, opt.basis);
      jitter_max = std::max(jitter_max, sampler.jitter_used());
      step = sample_increment(sampler, h, rng);
      if (opt.noise_scale != 1.0) step *= opt.noise_scale;
    } else {
      step = Mat::Zero(x.rows(), x.cols());
    }
    if (has_drift) {
      for (Eigen::Index i = 0; i < x.cols(); ++i) step.col(i) += h * drift(x.col(i), ta);
    }
    x += step;
    if (!x.allFinite()) {
      throw EvaluationError("flow: tracer position became non-finite", tb);
    }
    observe(k, tb, x);
  }
  return jitter_max;
}

/// Trajectory of the Kunita flow with drift `v`, snapshots at the configured
/// stride (always including t0 and t1).
inline Trajectory euler_flow(const IbfModel& m, const PointCloud& cloud, double t0, double t1,
                             double dt, const DriftField& v, Rng& rng,
                             const FlowOptions& opt = {}) {
  if (opt.snapshot_stride < 1) throw ParameterError("flow: snapshot_stride must be >= 1");
  const DriftEvaluator drift(v, m);
  const std::size_t n = detail::step_count(t0, t1, dt);
  Trajectory traj;
  Mat x = cloud.positions;
  const auto stride = static_cast<std::size_t>(opt.snapshot_stride);
  traj.jitter_max = euler_integrate(
      m, x, t0, t1, dt, drift, !drift.is_zero(), rng, opt,
      [&](std::size_t k, double t, Mat& pos) {
        if (k % stride == 0 || k == n) traj.snapshots.push_back(PointCloud{pos, t});
      });
  return traj;
}

// ---------------------------------------------------------------------------
// Deterministic flow

struct OdeTrajectory {
  std::vector<double> times;
  std::vector<Vec> states;
};

/// Classical RK4 for x' = f(x, t) on [0, t1], final step shortened to land on t1.
template <class F>
OdeTrajectory rk4_flow(const F& f, const Vec& x0, double t1, double dt) {
  detail::check_interval(0.0, t1, dt);
  if (!x0.allFinite()) throw ParameterError("ode_flow: x0 must be finite");
  const std::size_t n = detail::step_count(0.0, t1, dt);
  OdeTrajectory out;
  out.times.reserve(n + 1);
  out.states.reserve(n + 1);
  Vec x = x0;
  out.times.push_back(0.0);
  out.states.push_back(x);
  for (std::size_t k = 1; k <= n; ++k) {
    const double ta = detail::grid_time(0.0, t1, dt, k - 1, n);
    const double tb = detail::grid_time(0.0, t1, dt, k, n);
    const double h = tb - ta;
    const Vec k1 = f(x, ta);
    const Vec k2 = f(Vec(x + 0.5 * h * k1), ta + 0.5 * h);
    const Vec k3 = f(Vec(x + 0.5 * h * k2), ta + 0.5 * h);
    const Vec k4 = f(Vec(x + h * k3), tb);
    x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    out.times.push_back(tb);
    out.states.push_back(x);
  }
  return out;
}

/// RK4 flow of a drift field. radial_rkhs fields need `model`.
inline OdeTrajectory ode_flow(const DriftField& v, const Vec& x0, double t1, double dt,
                              const IbfModel* model = nullptr) {
  const double lip = lipschitz_constant(v, model);
  if (!std::isfinite(lip)) throw ParameterError("ode_flow: drift must be Lipschitz");
  if (std::holds_alternative<RadialRkhsDrift>(v)) {
    const DriftEvaluator drift(v, *model);
    return rk4_flow([&](const Vec& x, double t) { return drift(x, t); }, x0, t1, dt);
  }
  const DriftContext ctx{model, nullptr};
  return rk4_flow([&](const Vec& x, double t) { return eval_drift(v, x, ctx, t); }, x0, t1, dt);
}

// ---------------------------------------------------------------------------
// Tilted dynamics: Y = x + \int V ds + c^{-1/2} M + c^{-1} \int v ds

struct TrackingOptions {
  /// Multiplies c^{-1/2}; 0 removes the noise (deterministic limit).
  double noise_scale = 1.0;
  /// Include the c^{-1} v term (v = the model's own drift, if any).
  bool inverse_drift = true;
  int sphere_resolution = 0;
  SamplerBasis basis = SamplerBasis::anchored;
  unsigned jobs = 1;
};

struct TrackingReport {
  double c = 0.0;
  std::vector<double> sup_deviation;  // per path
  std::vector<double> jitter_max;     // per path
  Summary summary;
};

inline TrackingReport tilted_tracking_error(const IbfModel& m, double rho, double c,
                                            const PointCloud& x0, double T, double dt,
                                            std::uint64_t seed, std::size_t n_paths,
                                            const TrackingOptions& opt = {}) {
  if (!(c >= 1.0) || !std::isfinite(c)) throw ParameterError("tilted_tracking: need c >= 1");
  if (!(rho > 0.0)) throw ParameterError("tilted_tracking: rho must be > 0");
  if (n_paths < 1) throw ParameterError("tilted_tracking: n_paths must be >= 1");
  detail::check_interval(0.0, T, dt);
  const DriftEvaluator field(RadialRkhsDrift{rho, 1.0, opt.sphere_resolution}, m);
  const DriftField own = m.drift().value_or(NoDrift{});
  const DriftEvaluator small(own, m);
  const bool use_small = opt.inverse_drift && !small.is_zero();

  // reference ODE on the same time grid
  const std::size_t n = detail::step_count(0.0, T, dt);
  std::vector<Mat> xi(n + 1, Mat(x0.dim(), x0.size()));
  for (Eigen::Index i = 0; i < x0.size(); ++i) {
    const auto ode = rk4_flow([&](const Vec& x, double t) { return field(x, t); },
                              Vec(x0.positions.col(i)), T, dt);
    for (std::size_t k = 0; k <= n; ++k) xi[k].col(i) = ode.states[k];
  }

  TrackingReport report;
  report.c = c;
  report.sup_deviation.assign(n_paths, 0.0);
  report.jitter_max.assign(n_paths, 0.0);
  const double inv_c = 1.0 / c;
  FlowOptions fopt;
  fopt.noise_scale = opt.noise_scale / std::sqrt(c);
  fopt.basis = opt.basis;
  auto drift = [&](const Eigen::Ref<const Vec>& x, double t) -> Vec {
    Vec out = field(x, t);
    if (use_small) out += inv_c * small(x, t);
    return out;
  };
  parallel_for(n_paths, opt.jobs, [&](std::size_t p) {
    detail::with_path_context(p, [&] {
      Rng rng = path_rng(seed, p);
      Mat x = x0.positions;
      double sup = 0.0;
      report.jitter_max[p] = euler_integrate(
          m, x, 0.0, T, dt, drift, true, rng, fopt, [&](std::size_t k, double, Mat& pos) {
            for (Eigen::Index i = 0; i < pos.cols(); ++i) {
              sup = std::max(sup, (pos.col(i) - xi[k].col(i)).norm());
            }
          });
      report.sup_deviation[p] = sup;
    });
  });
  report.summary = summarize(report.sup_deviation);
  return report;
}

/// Least-squares slope of log(y) against log(x).
inline double log_log_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw ParameterError("log_log_slope: need >= 2 pairs");
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += std::log(x[i]);
    my += std::log(y[i]);
  }
  mx /= static_cast<double>(x.size());
  my /= static_cast<double>(y.size());
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = std::log(x[i]) - mx;
    sxy += dx * (std::log(y[i]) - my);
    sxx += dx * dx;
  }
  return sxy / sxx;
}

// ---------------------------------------------------------------------------
// Squeeze / expansion experiment

struct PathRecord {
  std::vector<double> times;
  std::vector<double> diameters;
  std::vector<double> lengths;            // empty unless the experiment tracks a curve
  std::vector<bool> containment_flags;    // empty unless the experiment tests containment
  std::uint64_t seed = 0;
  double jitter_max = 0.0;
  bool success = false;
};

struct SqueezeParams {
  double R = 1.0;
  double delta = 0.1;
  double T1 = 0.5;
  double T2 = 1.0;
  double dt = 1e-3;
  int n_boundary = 64;
  std::size_t n_paths = 100;
  /// false: tracers on |x| = R + delta must stay inside B(0, R - delta).
  /// true: tracers on |x| = R - delta must stay outside B(0, R + delta) and
  /// (d = 2) still wind once around the origin.
  bool expansion = false;
  int snapshot_stride = 10;
  double noise_scale = 1.0;
  SamplerBasis basis = SamplerBasis::anchored;
  unsigned jobs = 1;
};

struct ExperimentReport {
  std::vector<PathRecord> paths;
  Proportion success;
  double jitter_max = 0.0;
};

inline ExperimentReport squeeze_experiment(const IbfModel& m, const SqueezeParams& p,
                                           const DriftField& v, std::uint64_t seed) {
  if (!(p.T1 > 0.0) || !(p.T2 > p.T1)) throw ParameterError("squeeze: need 0 < T1 < T2");
  if (p.n_boundary < 8) throw ParameterError("squeeze: n_boundary must be >= 8");
  if (!(p.R > 0.0) || !(p.delta > 0.0) || !(p.delta < p.R)) {
    throw ParameterError("squeeze: need 0 < delta < R");
  }
  if (p.n_paths < 1) throw ParameterError("squeeze: n_paths must be >= 1");
  if (p.snapshot_stride < 1) throw ParameterError("squeeze: snapshot_stride must be >= 1");
  detail::check_interval(0.0, p.T2, p.dt);
  const int d = m.dim();
  const double start_radius = p.expansion ? p.R - p.delta : p.R + p.delta;
  const Mat tracers = sphere_tracers(d, p.n_boundary, start_radius, seed);
  const DriftEvaluator drift(v, m);
  const std::size_t n = detail::step_count(0.0, p.T2, p.dt);
  const auto stride = static_cast<std::size_t>(p.snapshot_stride);
  FlowOptions fopt;
  fopt.noise_scale = p.noise_scale;
  fopt.basis = p.basis;

  auto holds = [&](const Mat& x) {
    if (!p.expansion) return containment(PointCloud{x, 0.0}, p.R - p.delta);
    for (Eigen::Index i = 0; i < x.cols(); ++i) {
      if (!(x.col(i).norm() > p.R + p.delta)) return false;
    }
    return d != 2 || std::abs(winding_number(x)) == 1;
  };

  ExperimentReport report;
  report.paths.resize(p.n_paths);
  parallel_for(p.n_paths, p.jobs, [&](std::size_t path) {
    detail::with_path_context(path, [&] {
      PathRecord& rec = report.paths[path];
      rec.seed = seed ^ path;
      Rng rng = path_rng(seed, path);
      Mat x = tracers;
      bool ok = true;
      rec.jitter_max = euler_integrate(
          m, x, 0.0, p.T2, p.dt, drift, !drift.is_zero(), rng, fopt,
          [&](std::size_t k, double t, Mat& pos) {
            if (k % stride != 0 && k != n) return;
            const bool flag = holds(pos);
            rec.times.push_back(t);
            rec.diameters.push_back(diameter(pos));
            rec.containment_flags.push_back(flag);
            if (t >= p.T1 && !flag) ok = false;
          });
      rec.success = ok;
    });
  });
  std::size_t wins = 0;
  for (const auto& rec : report.paths) {
    if (rec.success) ++wins;
    report.jitter_max = std::max(report.jitter_max, rec.jitter_max);
  }
  report.success = wilson_interval(wins, p.n_paths);
  return report;
}

// ---------------------------------------------------------------------------
// Top Lyapunov exponent

struct LyapunovParams {
  double T = 20.0;
  double dt = 1e-3;
  std::size_t n_pairs = 200;
  double renorm_eps = 1e-3;
  SamplerBasis basis = SamplerBasis::anchored;
  unsigned jobs = 1;
};

struct LyapunovReport {
  std::vector<double> estimates;            // per pair
  std::vector<std::size_t> renormalizations;
  Summary summary;                          // estimate = summary.mean, SE = summary.se
  double jitter_max = 0.0;
};

/// Each pair (x, x + eps u) is its own two-tracer cloud driven by a common field
/// draw. The separation is advanced from the sampled relative increment, so a
/// rigid translation leaves it bit-for-bit unchanged.
inline LyapunovReport lyapunov_estimate(const IbfModel& m, const LyapunovParams& p,
                                        std::uint64_t seed, const DriftField& v = NoDrift{}) {
  if (!(p.renorm_eps > 1e-8 && p.renorm_eps < 1e-2)) {
    throw ParameterError("lyapunov: renorm_eps must lie in (1e-8, 1e-2)");
  }
  if (p.n_pairs < 1) throw ParameterError("lyapunov: n_pairs must be >= 1");
  detail::check_interval(0.0, p.T, p.dt);
  const int d = m.dim();
  const DriftEvaluator drift(v, m);
  const std::size_t n = detail::step_count(0.0, p.T, p.dt);
  const double eps = p.renorm_eps;
  LyapunovReport report;
  report.estimates.assign(p.n_pairs, 0.0);
  report.renormalizations.assign(p.n_pairs, 0);
  std::vector<double> jitter(p.n_pairs, 0.0);

  parallel_for(p.n_pairs, p.jobs, [&](std::size_t pair) {
    detail::with_path_context(pair, [&] {
      Rng rng = path_rng(seed, pair);
      std::normal_distribution<double> normal;
      Vec u(d);
      do {
        for (int i = 0; i < d; ++i) u(i) = normal(rng);
      } while (u.norm() == 0.0);
      Vec base = Vec::Zero(d);
      Vec sep = eps * (u / u.norm());
      double ref = sep.norm();
      double acc = 0.0;
      Mat cloud(d, 2);
      for (std::size_t k = 1; k <= n; ++k) {
        const double ta = detail::grid_time(0.0, p.T, p.dt, k - 1, n);
        const double h = detail::grid_time(0.0, p.T, p.dt, k, n) - ta;
        cloud.col(0) = base;
        cloud.col(1) = base + sep;
        const auto s = build_sampler(m, PointCloud{cloud, ta}, p.basis);
        jitter[pair] = std::max(jitter[pair], s.jitter_used());
        const auto draw = sample_increment_split(s, h, rng);
        Vec dsep = draw.relative.col(1) - draw.relative.col(0);
        Vec dbase = draw.anchor + draw.relative.col(0);
        if (!drift.is_zero()) {
          const Vec v0 = drift(cloud.col(0), ta);
          dbase += h * v0;
          dsep += h * (drift(cloud.col(1), ta) - v0);
        }
        base += dbase;
        sep += dsep;
        const double r = sep.norm();
        if (!(r >= 1e-14)) {
          throw NumericUnderflowError("lyapunov: pair separation collapsed below 1e-14 at t=" +
                                      std::to_string(ta + h));
        }
        if (r < 0.1 * eps || r > 10.0 * eps) {
          acc += std::log(r / ref);
          sep *= eps / r;
          ref = sep.norm();
          ++report.renormalizations[pair];
        }
      }
      acc += std::log(sep.norm() / ref);
      report.estimates[pair] = acc / p.T;
    });
  });
  report.summary = summarize(report.estimates);
  report.jitter_max = *std::max_element(jitter.begin(), jitter.end());
  return report;
}

// ---------------------------------------------------------------------------
// Curve length decay

struct LengthDecayParams {
  double T = 10.0;
  double dt = 1e-3;
  std::size_t n_paths = 50;
  bool closed = false;
  int snapshot_stride = 10;
  /// A path counts as shrinking when diam(T) < shrink_factor * diam(0).
  double shrink_factor = 0.1;
  SamplerBasis basis = SamplerBasis::anchored;
  unsigned jobs = 1;
};

struct LengthDecayReport {
  std::vector<PathRecord> paths;      // success = shrinking
  std::vector<double> terminal_rate;  // (1/T) log(L_T / L_0) per path
  Proportion shrinking;
  Summary all_rates;
  Summary shrinking_rates;
  double jitter_max = 0.0;
};

inline LengthDecayReport length_decay_experiment(const IbfModel& m, const PointCloud& curve,
                                                 const LengthDecayParams& p, std::uint64_t seed,
                                                 const DriftField& v = NoDrift{}) {
  if (curve.size() < 2) throw ParameterError("length_decay: curve needs >= 2 vertices");
  if (p.n_paths < 1) throw ParameterError("length_decay: n_paths must be >= 1");
  if (p.snapshot_stride < 1) throw ParameterError("length_decay: snapshot_stride must be >= 1");
  if (!(p.shrink_factor > 0.0 && p.shrink_factor < 1.0)) {
    throw ParameterError("length_decay: shrink_factor must lie in (0, 1)");
  }
  detail::check_interval(0.0, p.T, p.dt);
  const double l0 = curve_length(curve, p.closed);
  if (!(l0 > 0.0)) throw ParameterError("length_decay: initial curve has zero length");
  const DriftEvaluator drift(v, m);
  const std::size_t n = detail::step_count(0.0, p.T, p.dt);
  const auto stride = static_cast<std::size_t>(p.snapshot_stride);
  FlowOptions fopt;
  fopt.basis = p.basis;

  LengthDecayReport report;
  report.paths.resize(p.n_paths);
  report.terminal_rate.assign(p.n_paths, 0.0);
  parallel_for(p.n_paths, p.jobs, [&](std::size_t path) {
    detail::with_path_context(path, [&] {
      PathRecord& rec = report.paths[path];
      rec.seed = seed ^ path;
      Rng rng = path_rng(seed, path);
      Mat x = curve.positions;
      rec.jitter_max = euler_integrate(
          m, x, 0.0, p.T, p.dt, drift, !drift.is_zero(), rng, fopt,
          [&](std::size_t k, double t, Mat& pos) {
            if (k % stride != 0 && k != n) return;
            rec.times.push_back(t);
            rec.diameters.push_back(diameter(pos));
            rec.lengths.push_back(curve_length(pos, p.closed));
          });
      const double lt = rec.lengths.back();
      if (!(lt > 0.0)) {
        throw NumericUnderflowError("length_decay: curve length underflowed to zero");
      }
      report.terminal_rate[path] = std::log(lt / l0) / p.T;
      rec.success = rec.diameters.back() < p.shrink_factor * rec.diameters.front();
    });
  });
  std::vector<double> shrinking;
  std::size_t count = 0;
  for (std::size_t i = 0; i < p.n_paths; ++i) {
    report.jitter_max = std::max(report.jitter_max, report.paths[i].jitter_max);
    if (report.paths[i].success) {
      ++count;
      shrinking.push_back(report.terminal_rate[i]);
    }
  }
  report.shrinking = wilson_interval(count, p.n_paths);
  report.all_rates = summarize(report.terminal_rate);
  report.shrinking_rates = summarize(shrinking);
  return report;
}

}  // namespace ibf
