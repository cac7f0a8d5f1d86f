#pragma once

// First-order perturbation theory and condition numbers of the constrained
// TLS solution x = phi([L h]) with L = [C; A], h = [d; b].
//
// To first order
//   dx = H1 (dL x - dh) - K_cal dL^T t,
//   H1 = 2 rho^-2 K_cal x t^T - [C_A^+  K_cal A^T],
//   t^T = [-r^T [A b][C d]^+,  r^T],   r = A x - b.

#include <optional>

#include "tlse/densekit.hpp"
#include "tlse/tlse_core.hpp"

namespace tlse::cond {

/// Weights of the data norm |[E f]|_F = sqrt(alpha^2 |E|_F^2 + beta^2 |f|^2).
struct Weights {
  double alpha = 1.0;
  double beta = 1.0;
};

struct KOperator {
  Mat H1;        // n x m
  Mat K_cal;     // n x n
  Mat C_A_pinv;  // n x p
  Vec t;         // m
  Vec x;         // n
  double rho = 1.0;
  Index p = 0, q = 0, n = 0, m = 0;
};

KOperator build_k_operator(const TlseProblem& problem, const TlseSolution& solution);

/// Matrix-free first-order map (dL, dh) -> dx.
Vec apply_k(const KOperator& op, const Mat& dL, const Vec& dh);

/// Two explicit n x m(n+1) realizations of the same map on vec([dL dh]):
///   Kron:    H1 ([x^T -1] (x) I_m) - K_cal ([I_n 0] (x) t^T)
///   Blocked: [ (x^T (x) H1) - K_cal (I_n (x) t^T),  -H1 ]
enum class KForm { Kron, Blocked };

Mat materialize_k(const KOperator& op, KForm form, std::size_t cap = dense::mem_cap());

/// |[L h]|_F in the weighted norm.
double weighted_data_norm(const Mat& L, const Vec& h, const Weights& w);

/// kappa_n = |K (D (x) I_m)|_2 |[L h]|_F / |x|,  D = diag(I_n/alpha, 1/beta).
double kappa_normwise_exact(const KOperator& op, const Weights& w, const Mat& L, const Vec& h,
                            std::size_t cap = dense::mem_cap());

/// Signs in c1 = s1 sqrt(beta^2/alpha^2 + 1/|x|^2),  c2 = c1 + s2 / |x|.
struct SignChoice {
  int c1_sign = 1;
  int c2_sign = 1;
};

/// Kronecker-free kappa_n:
///   | [-(|x|/beta) H1   (|t|/alpha) K_cal] M |_2 |[L h]|_F / |x|,
///   M = [c1 I - c2 t t^T/|t|^2   (beta/alpha) t x^T/(|t||x|);  0   I_n].
/// For t = 0 it reduces to |H1|_2 sqrt(|x|^2/alpha^2 + 1/beta^2) |[L h]|_F / |x|.
double kappa_normwise_compact(const KOperator& op, const Weights& w, const Mat& L, const Vec& h,
                              SignChoice signs = {});

struct NormwiseUpper {
  double tight = 0.0;  // from |H1|_2 and |K_cal|_2
  double loose = 0.0;  // |H1|_2 replaced by |C_A^+|_2 + |K_cal A^T|_2 + 2|t||K_cal|/rho
};

NormwiseUpper kappa_normwise_upper(const KOperator& op, const Weights& w, const Mat& L, const Vec& h);

struct MixedComponentwise {
  double kappa_m = 0.0;
  double kappa_c = 0.0;             // max over components; excludes infinite ones
  bool kappa_c_infinite = false;    // some x_i = 0 with a nonzero numerator
};

/// From the explicit |K| vec([|L| |h|]).
MixedComponentwise kappa_mixed_componentwise_exact(const KOperator& op, const Mat& L, const Vec& h,
                                                   std::size_t cap = dense::mem_cap());

/// Kronecker-free bounds from |H1|(|L||x| + |h|) + |K_cal||L|^T|t|.
MixedComponentwise kappa_mixed_componentwise_upper(const KOperator& op, const Mat& L, const Vec& h);

/// Plain TLS (p = 0) sensitivity:
///   kappa_b = |b|/|x| |P^{-1} A^T|_2,
///   kappa_A = |A|/|x| (|r| |P^{-1}|_2 + |x| |P^{-1} A^T|_2),   P = A^T A - sigma^2 I.
struct TlsSensitivity {
  double kappa_A = 0.0;
  double kappa_b = 0.0;
  double norm_A = 0.0;
  double norm_b = 0.0;

  /// kappa_b |db|/|b| + kappa_A |dA|_2/|A|_2.
  double estimate(const Mat& dA, const Vec& db) const;
};

TlsSensitivity tls_specialization(const TlseProblem& problem, const TlseSolution& solution);

enum class Method { Exact, Compact, Upper };

struct ConditionReport {
  std::optional<double> kappa_n;
  double kappa_n_upper = 0.0;
  double kappa_n_upper_loose = 0.0;
  std::optional<double> kappa_m;
  double kappa_m_upper = 0.0;
  std::optional<double> kappa_c;
  double kappa_c_upper = 0.0;
  bool kappa_c_infinite = false;
  Weights weights;
  Method method = Method::Exact;
};

/// Exact: every kappa from the explicit K. Compact: kappa_n without Kronecker
/// products, kappa_m/kappa_c exact when K fits the memory guard. Upper: bounds only.
ConditionReport condition_report(const TlseProblem& problem, const TlseSolution& solution, const Weights& w,
                                 Method method, std::size_t cap = dense::mem_cap());

}  // namespace tlse::cond
