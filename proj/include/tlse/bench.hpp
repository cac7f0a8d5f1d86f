#pragma once

// Test-problem generators, perturbation injection and the experiment driver
// behind the table1/table2/table3 reproductions.

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "tlse/conditioning.hpp"
#include "tlse/densekit.hpp"
#include "tlse/tlse_core.hpp"

namespace tlse::bench {

/// C_tilde = Y [D 0] Z^T with Householder Y, Z and cond(C_tilde) = kappa_C;
/// [A b] has uniform(0,1) entries.
struct EquilibratorySpec {
  Index p = 5, q = 20, n = 15;
  double kappa_C = 1e2;
  std::uint64_t seed = 0;
};

/// [L h] = Y [diag(n, ..., 2, 1, delta); 0] Z^T, first p rows become [C d].
struct HouseholderSpectrumSpec {
  Index p = 5, q = 45, n = 10;
  double delta = 1e-3;
  std::uint64_t seed = 0;

  /// p = m/10, n = m/5.
  static HouseholderSpectrumSpec from_m(Index m, double delta, std::uint64_t seed);
};

/// Piecewise cubic fit with C^1 continuity at the breakpoint a.
struct PiecewisePolySpec {
  Index M = 200, N = 400;
  double a = 0.5;
  std::uint64_t seed = 0;
  /// true: x5, x6 are solved from the continuity conditions, so b = A x_true
  /// with C x_true = 0 and the residual is zero. false: all eight coefficients
  /// are drawn independently and the samples do not fit any admissible x.
  bool continuous_truth = true;
};

TlseProblem gen_equilibratory(const EquilibratorySpec& spec);
TlseProblem gen_householder_spectrum(const HouseholderSpectrumSpec& spec);

struct PiecewisePolyProblem {
  TlseProblem problem;
  Vec x_true;  // coefficients of the generating piecewise cubic
  Vec t;       // sample abscissae
};

PiecewisePolyProblem gen_piecewise_poly(const PiecewisePolySpec& spec);

enum class PerturbMode { Normwise, Componentwise };

struct PerturbationSample {
  Mat dL;
  Vec dh;
  double scale = 0.0;
  PerturbMode mode = PerturbMode::Normwise;
};

/// Normwise: scale * uniform(0,1) in every entry of [dL dh].
/// Componentwise: dC = s E.*C, dA = s E.*A, db = s E.*b, dd = 0.
PerturbationSample perturb(const TlseProblem& problem, PerturbMode mode, double scale, std::uint64_t seed);

/// |[dL dh]|_F / |[L h]|_F
double normwise_backward_error(const TlseProblem& problem, const PerturbationSample& s);

/// min{e : |dL| <= e|L|, |dh| <= e|h|}; +inf when a zero entry is perturbed.
double componentwise_backward_error(const TlseProblem& problem, const PerturbationSample& s);

enum class SolverChoice { QrSvd, Nwtls };

struct ExperimentOptions {
  SolverChoice solver = SolverChoice::QrSvd;
  cond::Weights weights{};
  double nwtls_eps = 1e-8;
  int nwtls_k = 0;
  int nwtls_oversample = 5;
  std::uint64_t nwtls_seed = 0;
};

struct ExperimentRow {
  std::vector<std::pair<std::string, double>> labels;

  double fwd_err_2 = 0.0;
  double fwd_err_inf = 0.0;
  double fwd_err_cw = 0.0;
  double eta_rel = 0.0;
  double eps1 = 0.0;
  double eps2 = 0.0;

  double eps1_kappa_n = 0.0;
  double eps1_kappa_n_upper = 0.0;
  double eps2_kappa_m = 0.0;
  double eps2_kappa_m_upper = 0.0;
  double eps2_kappa_c = 0.0;
  double eps2_kappa_c_upper = 0.0;

  double ca_pinv_norm = 0.0;
  double cond_core = 0.0;
  std::optional<double> e_nwtls;          // |x_nwtls - x_qrsvd| / |x_qrsvd|
  std::optional<double> fwd_err_2_nwtls;  // forward error of the randomized solver

  bool degenerate = false;
  std::vector<std::string> warnings;

  bool operator==(const ExperimentRow&) const = default;
};

/// Solves the original and perturbed problems with the QR-SVD solver (and the
/// randomized one when requested) and fills every column.
ExperimentRow run_experiment(const TlseProblem& problem, const PerturbationSample& perturbation,
                             const ExperimentOptions& opts = {});

enum class TableFormat { Csv, Json };

/// Column order of the numeric part of a table.
const std::vector<std::string>& table_columns();

/// Three significant digits in the compact scientific style: 7.56e-5, 5.16e+2.
std::string format_sci(double v);

std::string emit_table(const std::vector<ExperimentRow>& rows, TableFormat format);

/// Inverse of emit_table(rows, TableFormat::Json).
std::vector<ExperimentRow> parse_table_json(const std::string& text);

}  // namespace tlse::bench
