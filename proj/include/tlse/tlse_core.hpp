#pragma once

// Equality-constrained total least squares:
//
//   min |[E f]|_F   subject to   (A + E) x = b + f,   C x = d.
//
// The QR-SVD solver reduces the problem to an ordinary TLS problem on the
// null space of [C d] and reads the solution off the smallest right singular
// vector of [A b] * Q2_tilde.

#include <optional>
#include <string>
#include <vector>

#include "tlse/densekit.hpp"

namespace tlse {

/// The quadruple (C, d, A, b). C is p x n with p < n (p = 0 is the plain TLS
/// problem), A is q x n with q >= n - p + 1.
class TlseProblem {
 public:
  TlseProblem() = default;
  /// Validates shapes and finiteness; throws ErrorKind::Input.
  TlseProblem(Mat C, Vec d, Mat A, Vec b);

  /// Plain TLS problem (no constraint rows).
  static TlseProblem unconstrained(Mat A, Vec b);

  const Mat& C() const { return C_; }
  const Vec& d() const { return d_; }
  const Mat& A() const { return A_; }
  const Vec& b() const { return b_; }

  Index p() const { return C_.rows(); }
  Index n() const { return A_.cols(); }
  Index q() const { return A_.rows(); }
  Index m() const { return p() + q(); }

  Mat L() const;        // [C; A]
  Vec h() const;        // [d; b]
  Mat Lh() const;       // [L h]
  Mat A_tilde() const;  // [A b]
  Mat C_tilde() const;  // [C d]

  /// Problem with [L h] replaced by [L + dL, h + dh].
  TlseProblem perturbed(const Mat& dL, const Vec& dh) const;

 private:
  Mat C_;
  Vec d_;
  Mat A_;
  Vec b_;
};

/// Null-space data of the constraint. Q1/R1 come from the thin QR of C^T,
/// Q2 completes Q1 to an orthogonal basis.
struct ConstraintBasis {
  Mat Q1;        // n x p
  Mat Q2;        // n x (n-p), C Q2 = 0
  Mat R1;        // p x p
  Mat C_pinv;    // n x p,  C^+ = Q1 R1^{-T}
  Vec x_C;       // C^+ d
  Vec r_C;       // A x_C - b
  double zeta = 1.0;  // (1 + |x_C|^2)^{-1/2}
  Mat Q2_tilde;  // (n+1) x (n-p+1), orthonormal basis of null([C d])
};

ConstraintBasis build_basis(const TlseProblem& problem);

/// SVD of [A b] Q2_tilde together with the genericity diagnostics.
struct CoreSvd {
  Mat U_tilde;
  Vec sigma_tilde;  // n-p+1 values, nonincreasing
  Mat V_tilde;      // (n-p+1) x (n-p+1)

  double sigma_bar = 0.0;    // smallest singular value of A Q2
  double sigma_small = 0.0;  // smallest singular value of [A b] Q2_tilde
  double gap = 0.0;          // sigma_bar^2 - sigma_small^2
  double relative_gap = 0.0; // gap / max(sigma_bar^2, tiny)

  Vec aq2_singular_values;  // singular values of A Q2
  Mat aq2_V;                // right singular vectors of A Q2

  bool satisfied = false;          // sigma_bar > sigma_small
  bool ill_posed_warning = false;  // gap at or below the configured threshold
  bool near_degenerate = false;    // relative gap below GenericityOptions::near_degenerate_gap
  bool multiple_smallest = false;  // smallest singular value of [A b] Q2_tilde not simple

  std::vector<std::string> warnings;
};

struct GenericityOptions {
  /// Warn when gap <= gap_factor * eps * sigma_bar^2.
  double gap_factor = 1e3;
  /// Warn about a repeated smallest singular value when
  /// sigma_tilde(n-p) - sigma_tilde(n-p+1) <= multiplicity_factor * eps * sigma_tilde(1).
  double multiplicity_factor = 1e3;
  /// Warn that the problem is close to non-generic when relative_gap < this.
  double near_degenerate_gap = 0.1;
};

CoreSvd check_genericity(const ConstraintBasis& basis, const TlseProblem& problem,
                         const GenericityOptions& opts = {});

struct TlseSolution {
  Vec x;
  double rho = 1.0;  // +sqrt(1 + |x|^2)
  Vec r;             // A x - b
  double sigma_small = 0.0;
  ConstraintBasis basis;
  CoreSvd core;
  Mat S11_inv;   // (Q2^T A^T A Q2 - sigma_small^2 I)^{-1}
  Mat K_cal;     // Q2 S11^{-1} Q2^T
  Mat C_A_pinv;  // (I - K_cal A^T A) C^+
};

/// |last component| of Q2_tilde * v below this is treated as zero.
inline constexpr double kLastComponentTol = 1e-12;

/// QR-SVD solver. Throws IllPosed when genericity fails and NonGeneric when
/// the normalizing component vanishes; near-degenerate gaps only set warnings
/// in `core`.
TlseSolution solve_qr_svd(const TlseProblem& problem, const GenericityOptions& opts = {});

/// x = C^+ d - Q2 S11^{-1} Q2^T A^T r_C, with S11 formed and factored directly.
Vec solve_closed_form(const TlseProblem& problem);

/// S11^{-1} = V11^{-T} diag(sigma_i^2 - sigma_small^2)^{-1} V11^{-1} from the
/// leading (n-p) x (n-p) block of V_tilde. Returns nullopt when V11 is too
/// close to singular (smallest singular value <= v11_tol); callers then fall
/// back to a direct inverse.
std::optional<Mat> s11_inverse_fast(const CoreSvd& core, double v11_tol = 1e-8);

/// Residuals of the generalized eigensystem
///   [A^T A  A^T b  C^T; b^T A  b^T b  d^T; C  d  0] [x; -1; lambda]
///     = nu^2 diag(I_n, 1, 0_p) [x; -1; lambda],   nu^2 = sigma_small^2,
/// with lambda fitted by least squares to the first block row.
struct StationarityReport {
  Vec lambda;
  double nu2 = 0.0;
  double residual_normal = 0.0;      // |A^T A x - A^T b + C^T lambda - nu^2 x|
  double residual_rhs = 0.0;         // |b^T A x - b^T b + d^T lambda + nu^2|
  double residual_constraint = 0.0;  // |C x - d|
  double scale = 0.0;                // |[L h]|_2^2 * rho, for relative comparisons
};

StationarityReport validate_stationarity(const TlseProblem& problem, const TlseSolution& solution);

}  // namespace tlse
