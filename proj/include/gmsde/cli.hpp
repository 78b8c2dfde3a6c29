#pragma once

// Front end behind the `sde` executable. Commands write CSV to one stream and
// human-readable summary lines to another so tests can drive them in-process.

#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gmsde/flow.hpp"
#include "gmsde/mc.hpp"
#include "gmsde/model.hpp"
#include "gmsde/schemes.hpp"

namespace gmsde::cli {

enum ExitCode : int { kOk = 0, kUsage = 2, kNumerical = 3, kVerification = 4 };

struct CliConfig {
  std::string problem = "quad1d";
  ParamMap params;
  SchemeKind scheme = SchemeKind::gm_ode;
  OdeSolver solver = OdeSolver::rk4;
  std::vector<double> h_list;      // empty: per-command default
  std::optional<double> horizon;   // empty: problem default (converge) or h
  std::uint64_t samples = 1000000;
  std::uint64_t slices = 10;
  std::uint64_t seed = 1;
  int threads = 0;
  std::string out;
  int bins = 100;
  std::optional<double> inject_weight;
};

/// "0.25", "1/12", "-3e-2". Throws InputError on anything else.
double parse_real(std::string_view text);

/// Shortest round-trip decimal, locale-independent.
std::string format_double(double v);

/// Step sizes used by `converge` when --h is not given.
std::vector<double> default_h_list(std::string_view problem);

inline constexpr std::string_view kConvergeHeader = "h,N,estimate,oracle,rel_error,sigma_E,ci_lo,ci_hi";

void write_converge_row(const ErrorReport& r, std::ostream& csv);

/// Weak-error study over h_list: CSV rows, then `order = <slope> (r2 = <r2>)`
/// on `out` when there are at least three step sizes.
int cmd_converge(const CliConfig& config, std::ostream& csv, std::ostream& out, std::ostream& err);

/// Densities of X_T for the chosen scheme, em at the same h and em at h^3
/// on shared bins, then skewness/kurtosis lines. d = 1 only.
int cmd_hist(const CliConfig& config, std::ostream& csv, std::ostream& out);

/// One-step moments from x0 and the second-moment bound.
int cmd_moments(const CliConfig& config, std::ostream& out);

/// Verification table, one check per line.
int cmd_verify(const CliConfig& config, std::ostream& out);

/// Parses argv and dispatches. Returns the process exit code.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace gmsde::cli
