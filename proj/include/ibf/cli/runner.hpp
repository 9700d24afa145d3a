#pragma once

// Executes a validated RunConfig: writes one CSV plus one JSON report and
// returns a one-line summary. Numbers are written with 17 significant digits so
// every CSV value round-trips exactly.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ibf/cli/config.hpp"
#include "ibf/covariance.hpp"
#include "ibf/flow_engine.hpp"
#include "ibf/rkhs.hpp"

namespace ibf::cli {

inline constexpr const char* kVersion = "ibf-toolkit 0.1.0";

struct RunOptions {
  std::optional<std::string> out_dir;  // overrides output.dir
  unsigned jobs = 1;
};

struct RunResult {
  std::string summary;
  std::filesystem::path csv_path;
  std::filesystem::path report_path;
  json report;
};

/// `%.17g`; non-finite values are written as nan / inf / -inf.
inline std::string format_real(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

class CsvWriter {
public:
  explicit CsvWriter(const std::vector<std::string>& header) {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (i) text_ += ',';
      text_ += header[i];
    }
    text_ += '\n';
  }

  CsvWriter& real(double x) { return cell(format_real(x)); }
  CsvWriter& integer(std::uint64_t x) { return cell(std::to_string(x)); }
  CsvWriter& end_row() {
    text_ += '\n';
    first_ = true;
    return *this;
  }
  const std::string& text() const noexcept { return text_; }

private:
  CsvWriter& cell(const std::string& s) {
    if (!first_) text_ += ',';
    text_ += s;
    first_ = false;
    return *this;
  }

  std::string text_;
  bool first_ = true;
};

namespace detail {

inline void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw Error("failed writing " + path.string());
}

inline json summary_json(const Summary& s) {
  return {{"n", s.n}, {"mean", s.mean}, {"sd", s.sd}, {"se", s.se}, {"min", s.min}, {"max", s.max}};
}

inline json proportion_json(const Proportion& p) {
  return {{"successes", p.successes}, {"trials", p.trials}, {"frequency", p.frequency},
          {"wilson95_lo", p.lo}, {"wilson95_hi", p.hi}};
}

inline json constants_json(const IbfModel& m) {
  if (m.trivial()) return {{"beta_L", 0.0}, {"beta_N", 0.0}, {"lambda", 0.0}};
  const auto c = flow_constants(m);
  const int d = m.dim();
  return {{"beta_L", c.beta_l},
          {"beta_N", c.beta_n},
          {"lambda", c.lambda},
          {"incompressibility_residual", (d + 1) * c.beta_l - (d - 1) * c.beta_n}};
}

inline std::string fmt_short(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

inline DriftField model_drift(const IbfModel& m) { return m.drift().value_or(NoDrift{}); }

}  // namespace detail

/// Runs the configured command. Throws on validation (ParameterError,
/// ModelError, ConfigError) and numeric failures; the caller maps them to exit
/// codes.
inline RunResult run_command(const RunConfig& cfg, const RunOptions& opt = {}) {
  const auto started = std::chrono::steady_clock::now();
  const IbfModel& m = cfg.get_model();
  const std::filesystem::path dir = opt.out_dir.value_or(cfg.output.dir);
  std::filesystem::create_directories(dir);
  RunResult res;
  res.csv_path = dir / cfg.output.csv;
  res.report_path = dir / cfg.output.report;
  json results;
  std::string csv;
  const std::string& cmd = cfg.command;

  if (cmd == "covariance") {
    const auto& p = std::get<CovarianceParams>(cfg.params);
    CsvWriter w({"s", "B_L", "B_N", "B_PL", "B_PN", "B_SL", "B_SN"});
    const double nan = std::numeric_limits<double>::quiet_NaN();
    for (int i = 0; i < p.n_points; ++i) {
      const double s = p.s_min + (p.s_max - p.s_min) * i / (p.n_points - 1);
      const auto lt = longitudinal_transverse_m1(m, s);
      const bool has_p = m.potential().has_value();
      const bool has_s = m.solenoidal().has_value();
      w.real(s).real(1.0 + lt.l_m1).real(1.0 + lt.n_m1);
      w.real(has_p ? b_scalar(m, ScalarKind::PL, s) : nan);
      w.real(has_p ? b_scalar(m, ScalarKind::PN, s) : nan);
      w.real(has_s ? b_scalar(m, ScalarKind::SL, s) : nan);
      w.real(has_s ? b_scalar(m, ScalarKind::SN, s) : nan);
      w.end_row();
    }
    csv = w.text();
    results = {{"rows", p.n_points}, {"flow_constants", detail::constants_json(m)}};
    const auto c = detail::constants_json(m);
    res.summary = "covariance: " + std::to_string(p.n_points) + " rows; beta_L=" +
                  detail::fmt_short(c["beta_L"]) + " beta_N=" + detail::fmt_short(c["beta_N"]) +
                  " lambda=" + detail::fmt_short(c["lambda"]);
  } else if (cmd == "check-condition") {
    const auto& p = std::get<CheckConditionParams>(cfg.params);
    const auto r = check_condition(m, p.rho, p.tol);
    CsvWriter w({"zero_index", "zero", "scaled_location"});
    for (std::size_t i = 0; i < r.zero_locations_checked.size(); ++i) {
      const double s = r.zero_locations_checked[i];
      w.integer(i).real(s * p.rho).real(s).end_row();
    }
    csv = w.text();
    results = {{"satisfied", r.satisfied}, {"witness_mass", r.witness_mass}, {"rho", p.rho},
               {"tol", p.tol}, {"bessel_order", 0.5 * m.dim()}};
    res.summary = std::string("check-condition: satisfied=") + (r.satisfied ? "true" : "false") +
                  " witness_mass=" + detail::fmt_short(r.witness_mass);
  } else if (cmd == "verify-identity") {
    const auto& p = std::get<VerifyIdentityParams>(cfg.params);
    const SphereRule rule = sphere_rule(m.dim(), p.resolution);
    CsvWriter w({"rho", "lhs", "rhs", "rel_gap"});
    double worst = 0.0;
    json rows = json::array();
    for (double rho : p.rho) {
      const auto f = squeeze_functional(m, rho, rule);
      const double gap = std::abs(f.lhs - f.rhs) / std::max(std::abs(f.rhs), 1e-6);
      worst = std::max(worst, gap);
      w.real(rho).real(f.lhs).real(f.rhs).real(gap).end_row();
    }
    csv = w.text();
    results = {{"max_rel_gap", worst}, {"n_rho", p.rho.size()}, {"sphere_nodes", rule.size()}};
    res.summary = "verify-identity: max relative lhs/rhs gap " + detail::fmt_short(worst) +
                  " over " + std::to_string(p.rho.size()) + " radii";
  } else if (cmd == "lyapunov") {
    auto p = std::get<LyapunovCommand>(cfg.params).p;
    p.jobs = opt.jobs;
    const auto r = lyapunov_estimate(m, p, cfg.seed, detail::model_drift(m));
    CsvWriter w({"pair", "estimate"});
    for (std::size_t i = 0; i < r.estimates.size(); ++i) w.integer(i).real(r.estimates[i]).end_row();
    csv = w.text();
    std::size_t renorm = 0;
    for (auto k : r.renormalizations) renorm += k;
    results = {{"estimate", r.summary.mean}, {"standard_error", r.summary.se},
               {"per_pair", detail::summary_json(r.summary)},
               {"flow_constants", detail::constants_json(m)},
               {"renormalizations", renorm}, {"jitter_max", r.jitter_max}};
    res.summary = "lyapunov: estimate " + detail::fmt_short(r.summary.mean) + " +- " +
                  detail::fmt_short(r.summary.se) + " (analytic " +
                  detail::fmt_short(detail::constants_json(m)["lambda"]) + ")";
  } else if (cmd == "squeeze" || cmd == "expand") {
    auto p = std::get<SqueezeCommand>(cfg.params).p;
    p.jobs = opt.jobs;
    const DriftField v = p.expansion ? negated(detail::model_drift(m)) : detail::model_drift(m);
    const auto r = squeeze_experiment(m, p, v, cfg.seed);
    CsvWriter w({"path", "t", "diam", "contained"});
    json per_path = json::array();
    for (std::size_t i = 0; i < r.paths.size(); ++i) {
      const auto& rec = r.paths[i];
      for (std::size_t k = 0; k < rec.times.size(); ++k) {
        w.integer(i).real(rec.times[k]).real(rec.diameters[k]).integer(rec.containment_flags[k] ? 1 : 0).end_row();
      }
      per_path.push_back({{"path", i}, {"seed", rec.seed}, {"success", rec.success},
                          {"jitter_max", rec.jitter_max}});
    }
    csv = w.text();
    results = {{"success", detail::proportion_json(r.success)},
               {"drift_kind", drift_kind(v)},
               {"jitter_max", r.jitter_max},
               {"paths", per_path},
               {"note", "containment is tested on a finite tracer shell at snapshot times only; "
                        "for non-convex images this is a necessary-condition estimator"}};
    res.summary = cmd + ": success " + std::to_string(r.success.successes) + "/" +
                  std::to_string(r.success.trials) + " (freq " + detail::fmt_short(r.success.frequency) +
                  ", 95% Wilson [" + detail::fmt_short(r.success.lo) + ", " +
                  detail::fmt_short(r.success.hi) + "])";
  } else if (cmd == "track-control") {
    const auto& p = std::get<TrackControlParams>(cfg.params);
    TrackingOptions topt = p.options;
    topt.jobs = opt.jobs;
    const PointCloud x0{sphere_tracers(m.dim(), p.n_points, p.rho, cfg.seed), 0.0};
    CsvWriter w({"c", "path", "sup_deviation"});
    json per_c = json::array();
    std::vector<double> means;
    for (double c : p.c_values) {
      const auto r = tilted_tracking_error(m, p.rho, c, x0, p.T, p.dt, cfg.seed, p.n_paths, topt);
      for (std::size_t i = 0; i < r.sup_deviation.size(); ++i) {
        w.real(c).integer(i).real(r.sup_deviation[i]).end_row();
      }
      double jit = 0.0;
      for (double j : r.jitter_max) jit = std::max(jit, j);
      per_c.push_back({{"c", c}, {"sup_deviation", detail::summary_json(r.summary)}, {"jitter_max", jit}});
      means.push_back(r.summary.mean);
    }
    csv = w.text();
    results = {{"per_c", per_c}};
    double slope = std::numeric_limits<double>::quiet_NaN();
    bool positive = true;
    for (double mval : means) positive = positive && mval > 0.0;
    if (means.size() >= 2 && positive) {
      slope = log_log_slope(p.c_values, means);
      results["log_log_slope"] = slope;
    }
    results["reference_slope"] = -0.5;
    res.summary = "track-control: " + std::to_string(p.c_values.size()) +
                  " scales; log-log slope " + detail::fmt_short(slope) + " (reference -0.5)";
  } else if (cmd == "length-decay") {
    const auto& c = std::get<LengthDecayCommand>(cfg.params);
    auto p = c.p;
    p.jobs = opt.jobs;
    const auto r = length_decay_experiment(m, PointCloud{c.curve, 0.0}, p, cfg.seed, detail::model_drift(m));
    CsvWriter w({"path", "t", "diam", "length"});
    json per_path = json::array();
    for (std::size_t i = 0; i < r.paths.size(); ++i) {
      const auto& rec = r.paths[i];
      for (std::size_t k = 0; k < rec.times.size(); ++k) {
        w.integer(i).real(rec.times[k]).real(rec.diameters[k]).real(rec.lengths[k]).end_row();
      }
      per_path.push_back({{"path", i}, {"seed", rec.seed}, {"terminal_rate", r.terminal_rate[i]},
                          {"shrinking", rec.success}, {"jitter_max", rec.jitter_max}});
    }
    csv = w.text();
    const json consts = detail::constants_json(m);
    const double bound = static_cast<double>(consts["lambda"]) + 0.5 * static_cast<double>(consts["beta_L"]);
    results = {{"terminal_rate_all", detail::summary_json(r.all_rates)},
               {"terminal_rate_shrinking", detail::summary_json(r.shrinking_rates)},
               {"shrinking", detail::proportion_json(r.shrinking)},
               {"growth_bound_lambda_plus_half_beta_L", bound},
               {"flow_constants", consts},
               {"jitter_max", r.jitter_max},
               {"paths", per_path},
               {"note", "terminal_rate = (1/T) log(L_T / L_0); shrinking means diam(T) < shrink_factor * diam(0)"}};
    res.summary = "length-decay: mean terminal rate " + detail::fmt_short(r.all_rates.mean) +
                  ", shrinking " + std::to_string(r.shrinking.successes) + "/" +
                  std::to_string(r.shrinking.trials) + " with mean rate " +
                  detail::fmt_short(r.shrinking_rates.mean);
  } else {
    throw ConfigError("command", "unknown command '" + cmd + "'");
  }

  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  res.report = {{"version", kVersion},
                {"command", cmd},
                {"config", cfg.echo},
                {"results", results},
                {"csv", res.csv_path.filename().string()},
                {"wall_clock_seconds", wall}};
  detail::write_file(res.csv_path, csv);
  detail::write_file(res.report_path, res.report.dump(2) + "\n");
  return res;
}

}  // namespace ibf::cli
