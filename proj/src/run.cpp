#include "fbrd/run.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>

#include "json.hpp"

#include "fbrd/errors.hpp"
#include "fbrd/simulate.hpp"

namespace fbrd::io {

namespace {

using nlohmann::json;

constexpr double kLn2 = 0.6931471805599453;

// Wall-clock laps, active only when timing output is requested (timing makes
// reruns differ byte-for-byte, so it is off by default).
class Stopwatch {
 public:
  explicit Stopwatch(bool enabled) : enabled_(enabled), last_(now()) {}

  double lap_ms() {
    if (!enabled_) return 0.0;
    const auto t = now();
    const double ms =
        std::chrono::duration<double, std::milli>(t - last_).count();
    last_ = t;
    return ms;
  }

 private:
  static std::chrono::steady_clock::time_point now() {
    return std::chrono::steady_clock::now();
  }
  bool enabled_;
  std::chrono::steady_clock::time_point last_;
};

json finite_or_text(double v) {
  return std::isfinite(v) ? json(v) : json(format_sig17(v));
}

Row base_row(const RunConfig& cfg) {
  Row r;
  r.seed = cfg.task.seed;
  r.epsilon = cfg.task.epsilon.value_or(0.0);
  return r;
}

Row bound_row(const RunConfig& cfg, double d, const bounds::BoundResult& b,
              double wall_ms) {
  Row r = base_row(cfg);
  r.n = b.n;
  r.d = d;
  r.theta = b.theta;
  r.rate_nats = b.rate_nats;
  r.rate_bits = b.rate_bits();
  r.dispersion_nats2 = b.dispersion_nats2;
  r.bound_kind = bounds::to_string(b.kind);
  r.log_M_nats = b.log_M_nats;
  r.mc_stderr = b.mc_stderr;
  r.wall_ms = wall_ms;
  return r;
}

void do_spectrum(const RunConfig& cfg, std::vector<Row>& rows, json& summary,
                 Stopwatch& watch) {
  for (std::size_t n : cfg.blocklengths()) {
    const auto spec = spectrum::eigen_spectrum(cfg.source, n, cfg.options);
    const double ms = watch.lap_ms();
    for (double ev : spec.eigenvalues) {
      Row r = base_row(cfg);
      r.n = n;
      r.d = cfg.task.d.value_or(0.0);
      r.theta = ev;
      r.bound_kind = "eigenvalue";
      r.wall_ms = ms;
      rows.push_back(std::move(r));
    }
    summary["spectra"].push_back({{"n", n},
                                  {"max", spec.max_eigenvalue()},
                                  {"min", spec.min_eigenvalue()},
                                  {"avg", spec.average_variance()}});
  }
}

void do_waterfill(const RunConfig& cfg, std::vector<Row>& rows, json& summary,
                  Stopwatch& watch) {
  for (std::size_t n : cfg.blocklengths()) {
    const auto spec = spectrum::eigen_spectrum(cfg.source, n, cfg.options);
    for (double d : cfg.distortions()) {
      const auto sol = waterfill::solve_water_level(spec, d);
      const auto pt = waterfill::rate_dispersion(spec, sol);
      Row r = base_row(cfg);
      r.n = n;
      r.d = d;
      r.theta = sol.theta;
      r.rate_nats = pt.rate_nats;
      r.rate_bits = pt.rate_bits();
      r.dispersion_nats2 = pt.dispersion_nats2;
      r.bound_kind = cfg.task.subcommand;
      r.wall_ms = watch.lap_ms();
      rows.push_back(std::move(r));
      if (cfg.task.thresholds) {
        const auto rep =
            tilted::assumption_report(spec, sol, *cfg.task.thresholds);
        summary["assumption"].push_back({{"n", n},
                                         {"d", d},
                                         {"var_Jprime", rep.var_Jprime},
                                         {"mean_absJpp", rep.mean_absJpp},
                                         {"sixth_moment", rep.sixth_moment},
                                         {"curvature_ok", rep.curvature_ok},
                                         {"variance_ok", rep.variance_ok},
                                         {"moment_ok", rep.moment_ok}});
      }
    }
  }
}

void do_limit(const RunConfig& cfg, std::vector<Row>& rows, json& summary,
              Stopwatch& watch) {
  for (double d : cfg.distortions()) {
    const auto lp = waterfill::limiting_point(cfg.source, d);
    Row r = base_row(cfg);
    r.n = 0;  // the n -> infinity row
    r.d = d;
    r.theta = lp.theta_star;
    r.rate_nats = lp.rate_limit;
    r.rate_bits = lp.rate_limit / kLn2;
    r.dispersion_nats2 = lp.dispersion_limit;
    r.bound_kind = "limit";
    r.wall_ms = watch.lap_ms();
    rows.push_back(std::move(r));
    summary["d_max"] = lp.d_max;
  }
}

void do_bound(const RunConfig& cfg, std::vector<Row>& rows, json& summary,
              Stopwatch& watch) {
  const std::string& sub = cfg.task.subcommand;
  for (std::size_t n : cfg.blocklengths()) {
    for (double d : cfg.distortions()) {
      bounds::BoundQuery q;
      q.n = n;
      q.d = d;
      q.epsilon = *cfg.task.epsilon;
      q.source = cfg.source;
      q.options = cfg.options;

      if (sub == "approx") {
        rows.push_back(bound_row(cfg, d, bounds::gaussian_approx(q),
                                 watch.lap_ms()));
      } else if (sub == "converse") {
        const auto b = bounds::converse_rate(q);
        rows.push_back(bound_row(cfg, d, b, watch.lap_ms()));
        summary["converse"].push_back(
            {{"n", n},
             {"d", d},
             {"gamma_star", b.trace.gamma_star},
             {"gamma_fixed", b.trace.gamma_fixed},
             {"rate_fixed_gamma", b.trace.rate_fixed_gamma},
             {"note", b.trace.note}});
      } else {
        const auto b = bounds::achievability_rate(q, cfg.task.samples,
                                                  cfg.task.seed,
                                                  cfg.task.threads);
        rows.push_back(bound_row(cfg, d, b, watch.lap_ms()));
        summary["achievability"].push_back({{"n", n},
                                            {"d", d},
                                            {"samples", b.trace.samples},
                                            {"bracket_lo", b.trace.bracket_lo},
                                            {"bracket_hi", b.trace.bracket_hi},
                                            {"note", b.trace.note}});
        if (cfg.task.fitted) {
          const auto f = bounds::achievability_formula_rate(q, *cfg.task.fitted);
          rows.push_back(bound_row(cfg, d, f, watch.lap_ms()));
        }
      }
    }
  }
}

void do_codec(const RunConfig& cfg, std::vector<Row>& rows, json& summary,
              Stopwatch& watch) {
  simulate::CodecConfig cc;
  cc.source = cfg.source;
  cc.n = cfg.blocklengths()[0];
  cc.M = cfg.task.M;
  cc.d = cfg.distortions()[0];
  cc.trials = cfg.task.trials;
  cc.seed = cfg.task.seed;
  cc.threads = cfg.task.threads;
  const auto res = simulate::run_random_code(cc);

  double theta = 0.0;
  const auto spec = spectrum::eigen_spectrum(cfg.source, cc.n, cfg.options);
  if (cc.d > 0.0 && cc.d < spec.average_variance())
    theta = waterfill::solve_water_level(spec, cc.d).theta;

  Row r = base_row(cfg);
  r.n = cc.n;
  r.d = cc.d;
  r.epsilon = res.eps_hat;  // empirical excess-distortion probability
  r.theta = theta;
  r.bound_kind = "codec";
  r.log_M_nats = std::log(static_cast<double>(cc.M));
  r.mc_stderr = res.mc_stderr;
  r.wall_ms = watch.lap_ms();
  rows.push_back(std::move(r));
  summary["codec"] = {{"trials", res.trials},
                      {"failures", res.failures},
                      {"wilson_lo", res.wilson_lo},
                      {"wilson_hi", res.wilson_hi}};
}

void do_aep(const RunConfig& cfg, std::vector<Row>& rows, json& summary,
            Stopwatch& watch) {
  simulate::AepConfig ac;
  ac.source = cfg.source;
  ac.d = cfg.distortions()[0];
  ac.n_list = cfg.task.n_list;
  ac.samples = cfg.task.samples;
  ac.seed = cfg.task.seed;
  ac.threads = cfg.task.threads;
  if (cfg.task.fitted) {
    ac.candidate_C0 = cfg.task.fitted->C0;
    ac.candidate_c_nats = cfg.task.fitted->c_log2 * kLn2;
  }
  const auto rep = simulate::aep_experiment(ac);
  const double ms = watch.lap_ms();

  const double s = static_cast<double>(ac.samples);
  for (const auto& row : rep.rows) {
    Row r = base_row(cfg);
    r.n = row.n;
    r.d = ac.d;
    r.epsilon = row.violation_fraction;
    r.theta = row.theta;
    r.bound_kind = "aep";
    r.log_M_nats = row.gap_quantile;
    r.mc_stderr =
        std::sqrt(row.violation_fraction * (1.0 - row.violation_fraction) / s);
    r.wall_ms = ms;
    rows.push_back(std::move(r));
    summary["aep_rows"].push_back({{"n", row.n},
                                   {"gap_quantile_nats", row.gap_quantile},
                                   {"gap_max_nats", row.gap_max},
                                   {"underflow", row.underflow},
                                   {"violation_fraction", row.violation_fraction},
                                   {"candidate_violation", row.candidate_violation},
                                   {"residual_nats", row.residual}});
  }
  summary["aep_fit"] = {{"C0", rep.C0},
                        {"c_nats", rep.c_nats},
                        {"c_bits", rep.c_nats / kLn2},
                        {"K", rep.K},
                        {"candidate_K", rep.candidate_K}};
}

void do_sweep(const RunConfig& cfg, std::vector<Row>& rows, json& summary,
              Stopwatch& watch) {
  simulate::SweepConfig sc;
  sc.source = cfg.source;
  sc.d = cfg.distortions()[0];
  sc.epsilon = *cfg.task.epsilon;
  sc.n_list = cfg.task.n_list;
  sc.samples = cfg.task.samples;
  sc.seed = cfg.task.seed;
  sc.threads = cfg.task.threads;
  const auto rep = simulate::convergence_sweep(sc);
  const double ms = watch.lap_ms();

  for (const auto& row : rep.rows) {
    const double n = static_cast<double>(row.n);
    auto emit = [&](const char* kind, double rate, double log_M,
                    double stderr_mc) {
      Row r = base_row(cfg);
      r.n = row.n;
      r.d = sc.d;
      r.theta = row.theta_n;
      r.rate_nats = rate;
      r.rate_bits = rate / kLn2;
      r.dispersion_nats2 = row.dispersion_n;
      r.bound_kind = kind;
      r.log_M_nats = log_M;
      r.mc_stderr = stderr_mc;
      r.wall_ms = ms;
      rows.push_back(std::move(r));
    };
    emit("rate", row.rate_n, 0.0, 0.0);
    emit("approx", row.approx_rate, n * row.approx_rate, 0.0);
    emit("converse", row.converse_rate, n * row.converse_rate, 0.0);
    emit("achievability", row.achievability_rate, n * row.achievability_rate,
         row.mc_stderr);
    summary["gap_scaled"].push_back(
        {{"n", row.n}, {"value", row.gap_scaled}});
  }
  summary["limit"] = {{"theta_star", rep.limit.theta_star},
                      {"rate_limit_nats", rep.limit.rate_limit},
                      {"dispersion_limit_nats2", rep.limit.dispersion_limit},
                      {"d_max", rep.limit.d_max}};
  summary["slope_theta"] =
      rep.slope_theta ? json(*rep.slope_theta) : json(nullptr);
  summary["slope_rate"] = rep.slope_rate ? json(*rep.slope_rate) : json(nullptr);
  summary["slope_dispersion"] =
      rep.slope_dispersion ? json(*rep.slope_dispersion) : json(nullptr);
  summary["gap_ratio"] = finite_or_text(rep.gap_ratio);
}

json row_to_json(const Row& r) {
  return {{"n", r.n},
          {"d", r.d},
          {"epsilon", r.epsilon},
          {"theta", r.theta},
          {"rate_nats", r.rate_nats},
          {"rate_bits", r.rate_bits},
          {"dispersion_nats2", r.dispersion_nats2},
          {"bound_kind", r.bound_kind},
          {"log_M_nats", r.log_M_nats},
          {"mc_stderr", r.mc_stderr},
          {"seed", r.seed},
          {"wall_ms", r.wall_ms},
          {"status", r.status}};
}

}  // namespace

std::string execute(const RunConfig& config, std::vector<Row>& rows) {
  json summary = json::object();
  summary["units"] = config.output.units;
  Stopwatch watch(config.output.timing);

  const std::string& sub = config.task.subcommand;
  if (sub == "spectrum") {
    do_spectrum(config, rows, summary, watch);
  } else if (sub == "waterfill" || sub == "rate") {
    do_waterfill(config, rows, summary, watch);
  } else if (sub == "limit") {
    do_limit(config, rows, summary, watch);
  } else if (sub == "approx" || sub == "converse" || sub == "achievability") {
    do_bound(config, rows, summary, watch);
  } else if (sub == "simulate-codec") {
    do_codec(config, rows, summary, watch);
  } else if (sub == "aep") {
    do_aep(config, rows, summary, watch);
  } else if (sub == "sweep") {
    do_sweep(config, rows, summary, watch);
  } else {
    throw DomainError("config: task.subcommand: unknown subcommand '" + sub +
                      "'");
  }
  return summary.dump();
}

std::string render(const RunConfig& config, const std::vector<Row>& rows,
                   const std::string& summary_json) {
  if (config.output.format == "csv") return to_csv(rows);
  json root;
  root["config"] = json::parse(config.resolved_json());
  root["rows"] = json::array();
  for (const Row& r : rows) root["rows"].push_back(row_to_json(r));
  root["summary"] = json::parse(summary_json);
  return root.dump(2) + "\n";
}

int run(const RunConfig& config) {
  try {
    config.validate();
  } catch (const DomainError& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return 2;
  }

  std::cout << "config " << config.resolved_json() << "\n";

  std::vector<Row> rows;
  std::string summary = "{}";
  int code = 0;
  std::string failure;
  try {
    summary = execute(config, rows);
  } catch (const std::exception& e) {
    failure = e.what();
    Row sentinel;
    sentinel.seed = config.task.seed;
    sentinel.bound_kind = config.task.subcommand;
    sentinel.status = std::string("error: ") + failure;
    rows.push_back(std::move(sentinel));
    code = 3;
  }

  std::ofstream out(config.output.path, std::ios::binary);
  if (!out) {
    std::cerr << "cannot write output file: " << config.output.path << "\n";
    return 3;
  }
  out << render(config, rows, summary);
  out.close();

  std::cout << "summary " << summary << "\n";
  std::cout << "output " << config.output.path << "\n";
  if (code != 0) std::cerr << "computation error: " << failure << "\n";
  return code;
}

}  // namespace fbrd::io
