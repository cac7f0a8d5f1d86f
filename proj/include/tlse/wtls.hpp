#pragma once

// Weighted TLS relaxation of the constrained problem: the constraint rows are
// scaled by 1/eps and the resulting unconstrained TLS problem is solved. Its
// solution tends to the constrained one as eps -> 0.

#include <cstdint>
#include <vector>

#include "tlse/densekit.hpp"
#include "tlse/tlse_core.hpp"

namespace tlse::wtls {

struct WeightedEmbedding {
  double eps = 1.0;
  Mat L_eps;  // [C/eps; A]
  Vec h_eps;  // [d/eps; b]
  Mat G;      // [L_eps h_eps]
};

WeightedEmbedding embed(const TlseProblem& problem, double eps);

/// Admissibility of eps:  2 eps^2 |[C d]^+|^2 |[A b]|^2  <  sigma_bar^2 - sigma_small^2.
struct EpsBound {
  bool pass = false;
  double lhs = 0.0;
  double rhs = 0.0;
  double slack = 0.0;  // rhs - lhs
};

EpsBound check_eps_bound(const TlseProblem& problem, double eps, const CoreSvd& core);

struct WtlsSolution {
  Vec x;
  double sigma = 0.0;  // smallest singular value of G
};

/// Solution of the weighted TLS problem from the smallest right singular
/// vector of G. Throws IllPosed when sigma_n(L_eps) <= sigma_{n+1}(G).
WtlsSolution solve_wtls_direct(const WeightedEmbedding& emb);

/// Distances from the weighted quantities at a given eps to their eps -> 0 limits.
struct LimitRow {
  double eps = 0.0;
  double x_error = 0.0;      // |x_eps - x_tlse|
  double sigma_error = 0.0;  // |sigma_eps - sigma_small|
  double k_error = 0.0;      // |(L_eps^T L_eps - sigma_eps^2 I)^{-1} - K_cal|_2
  double map_error = 0.0;    // |(L_eps^T L_eps - sigma_eps^2 I)^{-1} L^T W^{-2} - [C_A^+  K_cal A^T]|_2
};

std::vector<LimitRow> wtls_limit_diagnostics(const TlseProblem& problem, const std::vector<double>& eps_grid);

struct NwtlsConfig {
  double eps = 1e-8;
  int k = 0;           // target rank; 0 selects n - p + 1
  int oversample = 5;  // ell = k + oversample, capped at n + 1
  std::uint64_t seed = 0;
};

/// Resolved sketch parameters after defaults and the n + 1 cap are applied.
struct SketchSize {
  Index k = 0;
  Index ell = 0;
};

SketchSize resolve_sketch(const TlseProblem& problem, const NwtlsConfig& cfg);

/// Randomized Nystrom solver for the weighted problem:
///   1. (G^T G) X = Omega via the QR of G and two triangular solves
///   2. X = Q R
///   3. (G^T G) Y = Q,  Z = Q^T Y
///   4. Z = J^T J,  K J = Y
///   5. K = V S U^T,  x = -v(1:n) / v(n+1),  v = V(:, 1)
Vec solve_nwtls(const TlseProblem& problem, const NwtlsConfig& cfg);

}  // namespace tlse::wtls
