#include "tlse/tlse_core.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <string>

#include "tlse/errors.hpp"

namespace tlse {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

std::string dims(Index r, Index c) { return std::to_string(r) + "x" + std::to_string(c); }

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", v);
  return buf;
}

}  // namespace

TlseProblem::TlseProblem(Mat C, Vec d, Mat A, Vec b)
    : C_(std::move(C)), d_(std::move(d)), A_(std::move(A)), b_(std::move(b)) {
  if (C_.rows() == 0) C_.resize(0, A_.cols());
  const Index n = A_.cols();
  if (n < 1) throw Error(ErrorKind::Input, "A must have at least one column");
  if (C_.cols() != n) throw Error(ErrorKind::Input, "C is " + dims(C_.rows(), C_.cols()) + " but A has " + std::to_string(n) + " columns");
  if (d_.size() != C_.rows()) throw Error(ErrorKind::Input, "d has length " + std::to_string(d_.size()) + ", expected " + std::to_string(C_.rows()));
  if (b_.size() != A_.rows()) throw Error(ErrorKind::Input, "b has length " + std::to_string(b_.size()) + ", expected " + std::to_string(A_.rows()));
  if (C_.rows() >= n) throw Error(ErrorKind::Input, "need p < n (p = " + std::to_string(C_.rows()) + ", n = " + std::to_string(n) + ")");
  if (A_.rows() < n - C_.rows() + 1) {
    throw Error(ErrorKind::Input, "need q >= n - p + 1 (q = " + std::to_string(A_.rows()) + ")");
  }
  dense::require_finite(C_, "C");
  dense::require_finite(d_, "d");
  dense::require_finite(A_, "A");
  dense::require_finite(b_, "b");
}

TlseProblem TlseProblem::unconstrained(Mat A, Vec b) {
  const Index n = A.cols();
  return TlseProblem(Mat(0, n), Vec(0), std::move(A), std::move(b));
}

Mat TlseProblem::L() const {
  Mat out(m(), n());
  out << C_, A_;
  return out;
}

Vec TlseProblem::h() const {
  Vec out(m());
  out << d_, b_;
  return out;
}

Mat TlseProblem::Lh() const {
  Mat out(m(), n() + 1);
  out << L(), h();
  return out;
}

Mat TlseProblem::A_tilde() const {
  Mat out(q(), n() + 1);
  out << A_, b_;
  return out;
}

Mat TlseProblem::C_tilde() const {
  Mat out(p(), n() + 1);
  out << C_, d_;
  return out;
}

TlseProblem TlseProblem::perturbed(const Mat& dL, const Vec& dh) const {
  if (dL.rows() != m() || dL.cols() != n() || dh.size() != m()) {
    throw Error(ErrorKind::Input, "perturbation must be " + dims(m(), n()) + " plus an m-vector");
  }
  return TlseProblem(C_ + dL.topRows(p()), d_ + dh.head(p()), A_ + dL.bottomRows(q()), b_ + dh.tail(q()));
}

ConstraintBasis build_basis(const TlseProblem& problem) {
  const Index n = problem.n(), p = problem.p();
  ConstraintBasis out;
  if (p == 0) {
    out.Q1 = Mat(n, 0);
    out.Q2 = Mat::Identity(n, n);
    out.R1 = Mat(0, 0);
    out.C_pinv = Mat(n, 0);
    out.x_C = Vec::Zero(n);
  } else {
    const dense::QrResult qr = dense::full_qr(problem.C().transpose());
    out.Q1 = qr.Q.leftCols(p);
    out.Q2 = qr.Q.rightCols(n - p);
    out.R1 = qr.R.topRows(p);
    const double rmax = out.R1.cwiseAbs().maxCoeff();
    for (Index i = 0; i < p; ++i) {
      if (!(std::abs(out.R1(i, i)) > dense::kRankTol * rmax)) {
        throw Error(ErrorKind::Rank, "C does not have full row rank: |R1(" + std::to_string(i) + "," +
                                         std::to_string(i) + ")| = " + sci(std::abs(out.R1(i, i))) +
                                         " vs max |R1| = " + sci(rmax));
      }
    }
    out.C_pinv = out.R1.triangularView<Eigen::Upper>().solve(out.Q1.transpose()).transpose();
    out.x_C = out.C_pinv * problem.d();
  }
  out.r_C = problem.A() * out.x_C - problem.b();
  out.zeta = 1.0 / std::sqrt(1.0 + out.x_C.squaredNorm());

  out.Q2_tilde = Mat::Zero(n + 1, n - p + 1);
  out.Q2_tilde.topLeftCorner(n, n - p) = out.Q2;
  out.Q2_tilde.col(n - p).head(n) = out.zeta * out.x_C;
  out.Q2_tilde(n, n - p) = -out.zeta;
  return out;
}

CoreSvd check_genericity(const ConstraintBasis& basis, const TlseProblem& problem, const GenericityOptions& opts) {
  const Index k = basis.Q2.cols();  // n - p
  CoreSvd out;

  const Mat AQ2 = problem.A() * basis.Q2;
  const dense::SvdResult bar = dense::svd(AQ2);
  out.aq2_singular_values = bar.singular_values;
  out.aq2_V = bar.V;
  out.sigma_bar = bar.singular_values(k - 1);

  Mat core(problem.q(), k + 1);
  core << AQ2, basis.zeta * basis.r_C;
  dense::SvdResult tilde = dense::svd(core);
  out.U_tilde = std::move(tilde.U);
  out.sigma_tilde = std::move(tilde.singular_values);
  out.V_tilde = std::move(tilde.V);
  out.sigma_small = out.sigma_tilde(k);

  out.gap = (out.sigma_bar - out.sigma_small) * (out.sigma_bar + out.sigma_small);
  const double bar2 = out.sigma_bar * out.sigma_bar;
  out.relative_gap = out.gap / std::max(bar2, std::numeric_limits<double>::min());
  out.satisfied = out.sigma_bar > out.sigma_small;

  if (out.gap <= opts.gap_factor * kEps * bar2) {
    out.ill_posed_warning = true;
    out.warnings.push_back("genericity gap " + sci(out.gap) + " is at the rounding level of sigma_bar^2 = " + sci(bar2) +
                           "; the problem is numerically ill-posed");
  } else if (out.relative_gap < opts.near_degenerate_gap) {
    out.near_degenerate = true;
    out.warnings.push_back("near-degenerate genericity gap: sigma_bar = " + sci(out.sigma_bar) +
                           ", sigma_tilde = " + sci(out.sigma_small) + ", relative gap " + sci(out.relative_gap));
  }
  if (out.sigma_tilde(k - 1) - out.sigma_tilde(k) <= opts.multiplicity_factor * kEps * out.sigma_tilde(0)) {
    out.multiple_smallest = true;
    out.warnings.push_back("smallest singular value of [A b]Q2_tilde is not simple; the solution is not unique");
  }
  return out;
}

namespace {

// (Q2^T A^T A Q2 - s^2 I)^{-1} from the SVD of A Q2; differences of squares are
// taken as (a - s)(a + s).
Mat s11_inverse_from_aq2(const CoreSvd& core) {
  const Index k = core.aq2_singular_values.size();
  Vec inv(k);
  for (Index i = 0; i < k; ++i) {
    const double a = core.aq2_singular_values(i);
    const double diff = (a - core.sigma_small) * (a + core.sigma_small);
    if (!(diff > 0.0)) throw Error(ErrorKind::IllPosed, "S11 is singular: genericity margin consumed");
    inv(i) = 1.0 / diff;
  }
  return core.aq2_V * inv.asDiagonal() * core.aq2_V.transpose();
}

}  // namespace

TlseSolution solve_qr_svd(const TlseProblem& problem, const GenericityOptions& opts) {
  const Index n = problem.n();
  TlseSolution sol;
  sol.basis = build_basis(problem);
  sol.core = check_genericity(sol.basis, problem, opts);
  if (!sol.core.satisfied) {
    throw Error(ErrorKind::IllPosed, "genericity condition fails: sigma_bar = " + sci(sol.core.sigma_bar) +
                                         " <= sigma_small = " + sci(sol.core.sigma_small));
  }

  const Index last = sol.core.V_tilde.cols() - 1;
  Vec w = sol.basis.Q2_tilde * sol.core.V_tilde.col(last);
  if (w(n) > 0.0) w = -w;
  if (std::abs(w(n)) < kLastComponentTol) {
    throw Error(ErrorKind::NonGeneric, "last component of Q2_tilde*v is " + sci(w(n)));
  }
  sol.rho = -1.0 / w(n);
  sol.x = sol.rho * w.head(n);
  sol.r = problem.A() * sol.x - problem.b();
  sol.sigma_small = sol.core.sigma_small;

  sol.S11_inv = s11_inverse_from_aq2(sol.core);
  sol.K_cal = sol.basis.Q2 * sol.S11_inv * sol.basis.Q2.transpose();
  const Mat AtA_Cp = problem.A().transpose() * (problem.A() * sol.basis.C_pinv);
  sol.C_A_pinv = sol.basis.C_pinv - sol.K_cal * AtA_Cp;
  return sol;
}

Vec solve_closed_form(const TlseProblem& problem) {
  const ConstraintBasis basis = build_basis(problem);
  const CoreSvd core = check_genericity(basis, problem);
  if (!core.satisfied) throw Error(ErrorKind::IllPosed, "genericity condition fails");

  const Mat AQ2 = problem.A() * basis.Q2;
  Mat S11 = AQ2.transpose() * AQ2;
  S11.diagonal().array() -= core.sigma_small * core.sigma_small;
  Eigen::LLT<Mat> llt(S11);
  if (llt.info() != Eigen::Success) throw Error(ErrorKind::IllPosed, "S11 is not positive definite");
  const Vec y = llt.solve(AQ2.transpose() * basis.r_C);
  return basis.x_C - basis.Q2 * y;
}

std::optional<Mat> s11_inverse_fast(const CoreSvd& core, double v11_tol) {
  const Index k = core.V_tilde.cols() - 1;
  const Mat V11 = core.V_tilde.topLeftCorner(k, k);
  if (k > 0 && !(dense::min_singular_value(V11) > v11_tol)) return std::nullopt;

  const double s = core.sigma_small;
  Vec inv(k);
  for (Index i = 0; i < k; ++i) {
    const double diff = (core.sigma_tilde(i) - s) * (core.sigma_tilde(i) + s);
    if (!(diff > 0.0)) return std::nullopt;
    inv(i) = 1.0 / diff;
  }
  const Mat W = V11.partialPivLu().inverse();
  return Mat(W.transpose() * inv.asDiagonal() * W);
}

StationarityReport validate_stationarity(const TlseProblem& problem, const TlseSolution& solution) {
  StationarityReport rep;
  const Vec& x = solution.x;
  rep.nu2 = solution.sigma_small * solution.sigma_small;

  const Vec Atr = problem.A().transpose() * solution.r;
  const Vec target = rep.nu2 * x - Atr;  // = C^T lambda
  if (problem.p() > 0) {
    // C^T = Q1 R1, so the least-squares lambda is R1^{-1} Q1^T target.
    rep.lambda = solution.basis.R1.triangularView<Eigen::Upper>().solve(solution.basis.Q1.transpose() * target);
  } else {
    rep.lambda = Vec(0);
  }
  const Vec Ct_lambda = problem.C().transpose() * rep.lambda;
  rep.residual_normal = (Atr + Ct_lambda - rep.nu2 * x).norm();
  rep.residual_rhs = std::abs(problem.b().dot(solution.r) + problem.d().dot(rep.lambda) + rep.nu2);
  rep.residual_constraint = (problem.C() * x - problem.d()).norm();
  const double lh = dense::spectral_norm(problem.Lh());
  rep.scale = lh * lh * solution.rho;
  return rep;
}

}  // namespace tlse
