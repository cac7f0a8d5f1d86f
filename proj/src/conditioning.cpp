#include "tlse/conditioning.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "tlse/errors.hpp"

namespace tlse::cond {

namespace {

void require_nonzero(const Vec& x) {
  if (x.norm() == 0.0) throw Error(ErrorKind::Undefined, "relative condition number undefined at x = 0");
}

void require_weights(const Weights& w) {
  if (!(w.alpha > 0.0) || !(w.beta > 0.0)) throw Error(ErrorKind::Input, "alpha and beta must be positive");
}

void require_data(const KOperator& op, const Mat& L, const Vec& h) {
  if (L.rows() != op.m || L.cols() != op.n || h.size() != op.m) {
    throw Error(ErrorKind::Input, "[L h] does not match the operator dimensions");
  }
}

// sqrt(max{1, beta^2/alpha^2 + 1/|x|^2} + beta/alpha): bound on |M|_2.
double m_norm_bound(const Weights& w, double xnorm) {
  const double ba = w.beta / w.alpha;
  return std::sqrt(std::max(1.0, ba * ba + 1.0 / (xnorm * xnorm)) + ba);
}

}  // namespace

KOperator build_k_operator(const TlseProblem& problem, const TlseSolution& solution) {
  KOperator op;
  op.p = problem.p();
  op.q = problem.q();
  op.n = problem.n();
  op.m = problem.m();
  op.x = solution.x;
  op.rho = solution.rho;
  op.K_cal = solution.K_cal;
  op.C_A_pinv = solution.C_A_pinv;

  const Mat Ct_pinv = dense::greville_augment(solution.basis.C_pinv, solution.basis.x_C);
  const Mat At_Ctp = problem.A_tilde() * Ct_pinv;  // q x p
  op.t.resize(op.m);
  op.t.head(op.p) = -At_Ctp.transpose() * solution.r;
  op.t.tail(op.q) = solution.r;

  Mat base(op.n, op.m);
  base << op.C_A_pinv, op.K_cal * problem.A().transpose();
  op.H1 = (2.0 / (op.rho * op.rho)) * (op.K_cal * op.x) * op.t.transpose() - base;
  return op;
}

Vec apply_k(const KOperator& op, const Mat& dL, const Vec& dh) {
  if (dL.rows() != op.m || dL.cols() != op.n || dh.size() != op.m) {
    throw Error(ErrorKind::Input, "perturbation dimensions do not match the operator");
  }
  return op.H1 * (dL * op.x - dh) - op.K_cal * (dL.transpose() * op.t);
}

Mat materialize_k(const KOperator& op, KForm form, std::size_t cap) {
  const Index n = op.n, m = op.m;
  dense::check_mem_cap(static_cast<std::size_t>(n), static_cast<std::size_t>(m * (n + 1)), cap, "K");
  if (form == KForm::Kron) {
    Eigen::RowVectorXd xm1(n + 1);
    xm1 << op.x.transpose(), -1.0;
    Mat sel = Mat::Zero(n, n + 1);
    sel.leftCols(n).setIdentity();
    const Mat Gx = dense::kron(xm1, Mat::Identity(m, m), cap);     // m x m(n+1)
    const Mat T = dense::kron(sel, op.t.transpose(), cap);        // n x m(n+1)
    return op.H1 * Gx - op.K_cal * T;
  }
  Mat out(n, m * (n + 1));
  const Mat It = dense::kron(Mat::Identity(n, n), op.t.transpose(), cap);  // n x mn
  out.leftCols(m * n) = dense::kron(op.x.transpose(), op.H1, cap) - op.K_cal * It;
  out.rightCols(m) = -op.H1;
  return out;
}

double weighted_data_norm(const Mat& L, const Vec& h, const Weights& w) {
  return std::sqrt(w.alpha * w.alpha * L.squaredNorm() + w.beta * w.beta * h.squaredNorm());
}

double kappa_normwise_exact(const KOperator& op, const Weights& w, const Mat& L, const Vec& h, std::size_t cap) {
  require_weights(w);
  require_data(op, L, h);
  require_nonzero(op.x);
  Mat K = materialize_k(op, KForm::Kron, cap);
  K.leftCols(op.m * op.n) /= w.alpha;
  K.rightCols(op.m) /= w.beta;
  return dense::spectral_norm(K) * weighted_data_norm(L, h, w) / op.x.norm();
}

double kappa_normwise_compact(const KOperator& op, const Weights& w, const Mat& L, const Vec& h, SignChoice signs) {
  require_weights(w);
  require_data(op, L, h);
  require_nonzero(op.x);
  const Index n = op.n, m = op.m;
  const double xn = op.x.norm();
  const double tn = op.t.norm();
  const double scale = weighted_data_norm(L, h, w) / xn;

  if (tn == 0.0) {
    return dense::spectral_norm(op.H1) * std::sqrt(xn * xn / (w.alpha * w.alpha) + 1.0 / (w.beta * w.beta)) * scale;
  }

  const double ba = w.beta / w.alpha;
  const double c1 = (signs.c1_sign >= 0 ? 1.0 : -1.0) * std::sqrt(ba * ba + 1.0 / (xn * xn));
  const double c2 = c1 + (signs.c2_sign >= 0 ? 1.0 : -1.0) / xn;
  const Vec that = op.t / tn;
  const Vec xhat = op.x / xn;

  Mat Z(n, m + n);
  Z << -(xn / w.beta) * op.H1, (tn / w.alpha) * op.K_cal;

  Mat M = Mat::Zero(m + n, m + n);
  M.topLeftCorner(m, m) = c1 * Mat::Identity(m, m) - c2 * that * that.transpose();
  M.topRightCorner(m, n) = ba * that * xhat.transpose();
  M.bottomRightCorner(n, n).setIdentity();

  return dense::spectral_norm(Z * M) * scale;
}

NormwiseUpper kappa_normwise_upper(const KOperator& op, const Weights& w, const Mat& L, const Vec& h) {
  require_weights(w);
  require_data(op, L, h);
  require_nonzero(op.x);
  const double xn = op.x.norm();
  const double tn = op.t.norm();
  const double factor = weighted_data_norm(L, h, w) / xn * m_norm_bound(w, xn);
  const double k_norm = dense::spectral_norm(op.K_cal);

  NormwiseUpper out;
  out.tight = (xn / w.beta * dense::spectral_norm(op.H1) + tn / w.alpha * k_norm) * factor;
  // |[C_A^+  K A^T]|_2 <= |C_A^+|_2 + |K A^T|_2; the K A^T block is recovered
  // from H1 since H1 = 2 rho^-2 K x t^T - [C_A^+  K A^T].
  const Mat base = (2.0 / (op.rho * op.rho)) * (op.K_cal * op.x) * op.t.transpose() - op.H1;
  const double ca = dense::spectral_norm(op.C_A_pinv);
  const double kat = dense::spectral_norm(base.rightCols(op.q));
  out.loose = (xn / w.beta * (ca + kat) + (2.0 / w.beta + 1.0 / w.alpha) * k_norm * tn) * factor;
  return out;
}

namespace {

MixedComponentwise finish_mixed(const Vec& num, const Vec& x) {
  const double xinf = x.cwiseAbs().maxCoeff();
  if (xinf == 0.0) throw Error(ErrorKind::Undefined, "mixed condition number undefined at x = 0");
  MixedComponentwise out;
  out.kappa_m = num.cwiseAbs().maxCoeff() / xinf;
  for (Index i = 0; i < x.size(); ++i) {
    const double xi = std::abs(x(i));
    if (xi > 0.0) {
      out.kappa_c = std::max(out.kappa_c, num(i) / xi);
    } else if (num(i) != 0.0) {
      out.kappa_c_infinite = true;
    }
  }
  return out;
}

}  // namespace

MixedComponentwise kappa_mixed_componentwise_exact(const KOperator& op, const Mat& L, const Vec& h, std::size_t cap) {
  require_data(op, L, h);
  const Mat K = materialize_k(op, KForm::Kron, cap);
  Mat Lh(op.m, op.n + 1);
  Lh << L.cwiseAbs(), h.cwiseAbs();
  const Vec num = K.cwiseAbs() * dense::vec(Lh);
  return finish_mixed(num, op.x);
}

MixedComponentwise kappa_mixed_componentwise_upper(const KOperator& op, const Mat& L, const Vec& h) {
  require_data(op, L, h);
  const Mat absL = L.cwiseAbs();
  const Vec num = op.H1.cwiseAbs() * (absL * op.x.cwiseAbs() + h.cwiseAbs()) +
                  op.K_cal.cwiseAbs() * (absL.transpose() * op.t.cwiseAbs());
  return finish_mixed(num, op.x);
}

double TlsSensitivity::estimate(const Mat& dA, const Vec& db) const {
  const double rb = norm_b > 0.0 ? db.norm() / norm_b : 0.0;
  const double rA = norm_A > 0.0 ? dense::spectral_norm(dA) / norm_A : 0.0;
  return kappa_b * rb + kappa_A * rA;
}

TlsSensitivity tls_specialization(const TlseProblem& problem, const TlseSolution& solution) {
  if (problem.p() != 0) throw Error(ErrorKind::Misuse, "TLS sensitivity formulas need p = 0");
  require_nonzero(solution.x);
  const Mat& P_inv = solution.K_cal;  // (A^T A - sigma^2 I)^{-1} when Q2 = I
  const double xn = solution.x.norm();
  const double pat = dense::spectral_norm(P_inv * problem.A().transpose());
  TlsSensitivity out;
  out.norm_A = dense::spectral_norm(problem.A());
  out.norm_b = problem.b().norm();
  out.kappa_b = out.norm_b / xn * pat;
  out.kappa_A = out.norm_A / xn * (solution.r.norm() * dense::spectral_norm(P_inv) + xn * pat);
  return out;
}

ConditionReport condition_report(const TlseProblem& problem, const TlseSolution& solution, const Weights& w,
                                 Method method, std::size_t cap) {
  const KOperator op = build_k_operator(problem, solution);
  const Mat L = problem.L();
  const Vec h = problem.h();

  ConditionReport rep;
  rep.weights = w;
  rep.method = method;
  const NormwiseUpper nu = kappa_normwise_upper(op, w, L, h);
  rep.kappa_n_upper = nu.tight;
  rep.kappa_n_upper_loose = nu.loose;
  const MixedComponentwise mu = kappa_mixed_componentwise_upper(op, L, h);
  rep.kappa_m_upper = mu.kappa_m;
  rep.kappa_c_upper = mu.kappa_c;
  rep.kappa_c_infinite = mu.kappa_c_infinite;

  if (method == Method::Upper) return rep;

  if (method == Method::Exact) {
    rep.kappa_n = kappa_normwise_exact(op, w, L, h, cap);
  } else {
    rep.kappa_n = kappa_normwise_compact(op, w, L, h);
  }
  try {
    const MixedComponentwise me = kappa_mixed_componentwise_exact(op, L, h, cap);
    rep.kappa_m = me.kappa_m;
    rep.kappa_c = me.kappa_c;
    rep.kappa_c_infinite = me.kappa_c_infinite;
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::Resource || method == Method::Exact) throw;
  }
  return rep;
}

}  // namespace tlse::cond
