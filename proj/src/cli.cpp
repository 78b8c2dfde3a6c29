#include "gmsde/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>

#include "gmsde/error.hpp"
#include "gmsde/verify.hpp"

namespace gmsde::cli {

namespace {

double parse_number(std::string_view s, std::string_view whole) {
  double v = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (!s.empty() && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last || first == last)
    throw InputError("not a number: '" + std::string(whole) + "'");
  return v;
}

std::uint64_t parse_count(const std::string& text, const char* what) {
  const double v = parse_real(text);
  if (!(v >= 0.0) || v != std::floor(v) || v > 9.0e18)
    throw InputError(std::string(what) + " must be a nonnegative integer, got '" + text + "'");
  return static_cast<std::uint64_t>(v);
}

std::string fixed(double v, int digits) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed, digits);
  if (ec != std::errc()) return format_double(v);
  return std::string(buf, ptr);
}

std::string pad(std::string s, std::size_t width) {
  if (s.size() < width) s.append(width - s.size(), ' ');
  return s;
}

double single_h(const CliConfig& config, const char* command) {
  if (config.h_list.size() > 1)
    throw InputError(std::string(command) + " takes a single step size");
  const double h = config.h_list.empty() ? 1.0 / 32.0 : config.h_list.front();
  if (!(h > 0.0) || !std::isfinite(h)) throw InputError("step sizes must be positive");
  return h;
}

SchemeOptions scheme_options(const CliConfig& config) {
  SchemeOptions o;
  o.solver = config.solver;
  return o;
}

}  // namespace

double parse_real(std::string_view text) {
  const auto slash = text.find('/');
  if (slash == std::string_view::npos) return parse_number(text, text);
  const double num = parse_number(text.substr(0, slash), text);
  const double den = parse_number(text.substr(slash + 1), text);
  if (den == 0.0) throw InputError("division by zero in '" + std::string(text) + "'");
  return num / den;
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

std::vector<double> default_h_list(std::string_view problem) {
  if (problem == "gbm") return {1.0 / 16, 1.0 / 20, 1.0 / 24, 1.0 / 32};
  if (problem == "rot2d") return {1.0 / 4, 1.0 / 8, 1.0 / 12, 1.0 / 16, 1.0 / 20};
  if (problem == "ring6d") return {1.0 / 4, 1.0 / 8, 1.0 / 12, 1.0 / 16};
  return {1.0 / 4, 1.0 / 8, 1.0 / 12, 1.0 / 16, 1.0 / 24};
}

void write_converge_row(const ErrorReport& r, std::ostream& csv) {
  const std::uint64_t n = r.samples - r.diagnostics.excluded;
  csv << format_double(r.h) << ',' << n << ',' << format_double(r.estimate) << ','
      << format_double(r.oracle) << ',' << format_double(r.relative_error) << ','
      << format_double(r.sigma_E) << ',' << format_double(r.ci_lo) << ',' << format_double(r.ci_hi)
      << '\n';
}

int cmd_converge(const CliConfig& config, std::ostream& csv, std::ostream& out, std::ostream& err) {
  const BuiltinProblem bp = builtin_problem(config.problem, config.params);
  RunConfig rc;
  rc.scheme = config.scheme;
  rc.options = scheme_options(config);
  rc.horizon = config.horizon.value_or(bp.horizon);
  rc.samples = config.samples;
  rc.slices = config.slices;
  rc.seed = config.seed;
  rc.threads = config.threads;
  const std::vector<double> hs = config.h_list.empty() ? default_h_list(config.problem) : config.h_list;

  // Reject a bad grid before spending any time on simulation.
  for (double h : hs) step_count(rc.horizon, h);
  if (rc.slices < 2 || rc.samples == 0 || rc.samples % rc.slices != 0)
    throw InputError("samples (" + std::to_string(rc.samples) + ") must be a positive multiple of slices (" +
                     std::to_string(rc.slices) + "), with at least two slices");

  csv << kConvergeHeader << '\n';
  std::vector<ErrorReport> reports;
  for (double h : hs) {
    rc.h = h;
    reports.push_back(run_weak_error(bp, rc));
    write_converge_row(reports.back(), csv);
    csv.flush();
    const RunDiagnostics& d = reports.back().diagnostics;
    if (d.negative_variance || d.deterministic_fallback || d.correction_fallback || d.excluded)
      err << "h=" << format_double(h) << ": negative_variance=" << d.negative_variance
          << " deterministic_fallback=" << d.deterministic_fallback << " clipped_eigs=" << d.clipped_eigs
          << " correction_fallback=" << d.correction_fallback << " excluded=" << d.excluded
          << " of steps=" << d.steps << '\n';
  }
  if (reports.size() >= 3) {
    try {
      const OrderFit fit = fit_order(reports);
      out << "order = " << fixed(fit.slope, 4) << " (r2 = " << fixed(fit.r2, 4) << ")\n";
    } catch (const InputError&) {
      out << "order = nan (fewer than three positive errors)\n";
    }
  }
  return kOk;
}

int cmd_hist(const CliConfig& config, std::ostream& csv, std::ostream& out) {
  const BuiltinProblem bp = builtin_problem(config.problem, config.params);
  if (bp.problem.dim != 1) throw InputError("hist supports one-dimensional problems only");
  if (config.bins <= 0) throw InputError("bins must be positive");
  const double h = single_h(config, "hist");
  const double horizon = config.horizon.value_or(h);
  const std::uint64_t steps = step_count(horizon, h);
  const double h_ref = h * h * h;
  const std::uint64_t steps_ref = step_count(horizon, h_ref);
  const SchemeOptions options = scheme_options(config);

  struct Series {
    std::string name;
    std::vector<double> x;
  };
  std::vector<Series> series;
  series.push_back({std::string(to_string(config.scheme)),
                    simulate_endpoints(bp.problem, config.scheme, options, bp.x0, h, steps, config.samples,
                                       config.seed, config.threads)});
  if (config.scheme != SchemeKind::em)
    series.push_back({"em", simulate_endpoints(bp.problem, SchemeKind::em, options, bp.x0, h, steps,
                                               config.samples, config.seed, config.threads)});
  series.push_back({"reference", simulate_endpoints(bp.problem, SchemeKind::em, options, bp.x0, h_ref,
                                                    steps_ref, config.samples, config.seed, config.threads)});

  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (const Series& s : series)
    for (double v : s.x) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  if (lo == hi) {
    lo -= 0.5;
    hi += 0.5;
  }
  const auto bins = static_cast<std::size_t>(config.bins);
  const double width = (hi - lo) / static_cast<double>(bins);

  std::vector<std::vector<std::uint64_t>> counts(series.size(), std::vector<std::uint64_t>(bins, 0));
  for (std::size_t k = 0; k < series.size(); ++k)
    for (double v : series[k].x) {
      auto idx = static_cast<std::size_t>((v - lo) / width);
      counts[k][std::min(idx, bins - 1)]++;
    }

  csv << "bin_center";
  for (const Series& s : series) csv << ',' << s.name;
  csv << '\n';
  for (std::size_t b = 0; b < bins; ++b) {
    csv << format_double(lo + (static_cast<double>(b) + 0.5) * width);
    for (std::size_t k = 0; k < series.size(); ++k)
      csv << ','
          << format_double(static_cast<double>(counts[k][b]) /
                           (static_cast<double>(series[k].x.size()) * width));
    csv << '\n';
  }

  for (const Series& s : series) {
    const SampleMoments m = sample_moments(s.x);
    out << s.name << ": mean = " << format_double(m.mean) << " variance = " << format_double(m.variance)
        << " skewness = " << fixed(m.skewness, 4) << " kurtosis = " << fixed(m.kurtosis, 4) << '\n';
  }
  return kOk;
}

int cmd_moments(const CliConfig& config, std::ostream& out) {
  const BuiltinProblem bp = builtin_problem(config.problem, config.params);
  const double h = single_h(config, "moments");
  if (config.samples < 10000) throw InputError("moments needs at least 10^4 samples");
  const SchemeOptions options = scheme_options(config);
  const std::size_t d = bp.problem.dim;

  const std::vector<double> pts = simulate_endpoints(bp.problem, config.scheme, options, bp.x0, h, 1,
                                                     config.samples, config.seed, config.threads);
  out << "one step of " << to_string(config.scheme) << " on " << bp.problem.name << ", h = " << format_double(h)
      << ", N = " << config.samples << '\n';
  for (std::size_t i = 0; i < d; ++i) {
    const SampleMoments m = sample_moments(pts, d, i);
    out << "x[" << i << "]: mean = " << format_double(m.mean) << " variance = " << format_double(m.variance)
        << " skewness = " << fixed(m.skewness, 4) << " kurtosis = " << fixed(m.kurtosis, 4) << '\n';
  }
  const SecondMomentBound b = second_moment_bound(bp.problem, config.scheme, options, bp.x0, h, config.samples,
                                                  config.seed, config.threads);
  out << "M2 = " << format_double(b.m2) << " (sigma = " << format_double(b.m2_sigma)
      << ") bound = " << format_double(b.bound) << " M2/h = " << format_double(b.m2 / h)
      << " tr Lambda(x0) = " << format_double(b.trace_at_x0) << '\n';
  return kOk;
}

int cmd_verify(const CliConfig& config, std::ostream& out) {
  VerifyOptions vo;
  if (config.inject_weight) vo.order_condition_w1 = *config.inject_weight;
  vo.seed = static_cast<unsigned>(config.seed);
  const std::vector<CheckResult> rows = run_verification(vo);
  bool all = true;
  for (const CheckResult& r : rows) {
    all = all && r.passed;
    out << (r.passed ? "PASS " : "FAIL ") << pad(r.name, 48) << " measured = " << pad(format_double(r.measured), 24)
        << (r.upper_bound ? " <= " : " >= ") << format_double(r.threshold) << '\n';
  }
  out << (all ? "all checks passed" : "verification FAILED") << '\n';
  return all ? kOk : kVerification;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Weak second-order Gaussian-mixture schemes for SDEs", "sde"};
  app.set_help_flag("--help", "print this help");  // -h would clash with --h
  app.require_subcommand(1, 1);
  app.set_config("--config", "", "key=value file; command-line flags take precedence");

  CliConfig config;
  std::string scheme = "gm-ode", solver = "rk4", horizon, samples = "1000000";
  std::vector<std::string> h_list, params;
  double inject = std::numeric_limits<double>::quiet_NaN();

  app.add_option("--problem", config.problem, "quad1d, gbm, rot2d or ring6d")
      ->check(CLI::IsMember(builtin_problem_names()));
  app.add_option("--scheme", scheme, "em, gm-ode or gm-var")->check(CLI::IsMember({"em", "gm-ode", "gm-var"}));
  app.add_option("--solver", solver, "rk2 or rk4")->check(CLI::IsMember({"rk2", "rk4"}));
  app.add_option("--h", h_list, "step sizes, e.g. 1/4,1/8,0.05")->delimiter(',');
  app.add_option("--T", horizon, "time horizon");
  app.add_option("--samples", samples, "trajectories N");
  app.add_option("--slices", config.slices, "slices k for the error bars");
  app.add_option("--seed", config.seed, "master seed");
  auto* threads_opt = app.add_option("--threads", config.threads, "worker threads, 0 for all (default: $SDE_THREADS)")
                          ->check(CLI::NonNegativeNumber);
  app.add_option("--out", config.out, "write CSV here instead of stdout");
  app.add_option("--param", params, "problem parameter k=v (lambda, sigma, x0, T)");
  app.add_option("--bins", config.bins, "histogram bins")->check(CLI::PositiveNumber);
  app.add_option("--inject-weight", inject)->group("");

  auto* converge = app.add_subcommand("converge", "weak error against the closed-form oracle over --h");
  auto* hist = app.add_subcommand("hist", "endpoint densities against fine-step Euler-Maruyama");
  auto* moments = app.add_subcommand("moments", "one-step moments and the second-moment bound");
  auto* verify = app.add_subcommand("verify", "deterministic order-condition and positivity checks");
  for (auto* sub : {converge, hist, moments, verify}) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    // Flags and config entries both count; the environment only fills the default.
    if (threads_opt->count() == 0) {
      if (const char* env = std::getenv("SDE_THREADS"); env != nullptr && *env != '\0') {
        const std::uint64_t t = parse_count(env, "SDE_THREADS");
        if (t > 4096) throw InputError("SDE_THREADS is out of range");
        config.threads = static_cast<int>(t);
      }
    }
    config.scheme = parse_scheme(scheme);
    config.solver = parse_solver(solver);
    for (const auto& s : h_list) config.h_list.push_back(parse_real(s));
    if (!horizon.empty()) config.horizon = parse_real(horizon);
    config.samples = parse_count(samples, "samples");
    for (const auto& p : params) {
      const auto eq = p.find('=');
      if (eq == std::string::npos || eq == 0) throw InputError("--param expects k=v, got '" + p + "'");
      config.params[p.substr(0, eq)] = parse_real(p.substr(eq + 1));
    }
    if (!std::isnan(inject)) config.inject_weight = inject;

    if (*verify) return cmd_verify(config, out);
    if (*moments) return cmd_moments(config, out);

    std::ofstream file;
    if (!config.out.empty()) {
      file.open(config.out, std::ios::binary);
      if (!file) throw InputError("cannot open '" + config.out + "' for writing");
    }
    std::ostream& csv = config.out.empty() ? out : static_cast<std::ostream&>(file);
    const int code = *hist ? cmd_hist(config, csv, out) : cmd_converge(config, csv, out, err);
    if (file.is_open()) {
      file.close();
      if (!file) throw NumericalError("failed writing '" + config.out + "'");
    }
    return code;
  } catch (const InputError& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kNumerical;
  }
}

}  // namespace gmsde::cli
