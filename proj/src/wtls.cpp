#include "tlse/wtls.hpp"

#include <cmath>
#include <cstdio>
#include <random>
#include <string>

#include "tlse/errors.hpp"

namespace tlse::wtls {

WeightedEmbedding embed(const TlseProblem& problem, double eps) {
  if (!(eps > 0.0) || !std::isfinite(eps)) throw Error(ErrorKind::Input, "eps must be positive and finite");
  const Index p = problem.p();
  WeightedEmbedding emb;
  emb.eps = eps;
  emb.L_eps = problem.L();
  emb.h_eps = problem.h();
  emb.L_eps.topRows(p) /= eps;
  emb.h_eps.head(p) /= eps;
  emb.G.resize(problem.m(), problem.n() + 1);
  emb.G << emb.L_eps, emb.h_eps;
  return emb;
}

EpsBound check_eps_bound(const TlseProblem& problem, double eps, const CoreSvd& core) {
  EpsBound out;
  const double ct_pinv = problem.p() == 0 ? 0.0 : 1.0 / dense::min_singular_value(problem.C_tilde());
  const double at = dense::spectral_norm(problem.A_tilde());
  out.lhs = 2.0 * eps * eps * ct_pinv * ct_pinv * at * at;
  out.rhs = core.gap;
  out.slack = out.rhs - out.lhs;
  out.pass = out.lhs < out.rhs;
  return out;
}

WtlsSolution solve_wtls_direct(const WeightedEmbedding& emb) {
  const Index n = emb.L_eps.cols();
  const dense::SvdResult g = dense::svd_graded(emb.G);
  WtlsSolution out;
  out.sigma = g.singular_values(n);
  const double sigma_n = dense::svd_graded(emb.L_eps).singular_values(n - 1);
  if (!(sigma_n > out.sigma)) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "sigma_n(L_eps) = %.3e <= %.3e", sigma_n, out.sigma);
    throw Error(ErrorKind::IllPosed, std::string("weighted problem violates genericity: ") + buf);
  }
  Vec v = g.V.col(n);
  if (v(n) > 0.0) v = -v;
  if (std::abs(v(n)) < kLastComponentTol) {
    throw Error(ErrorKind::NonGeneric, "last component of the weighted singular vector vanishes");
  }
  out.x = -v.head(n) / v(n);
  return out;
}

std::vector<LimitRow> wtls_limit_diagnostics(const TlseProblem& problem, const std::vector<double>& eps_grid) {
  const Index p = problem.p(), n = problem.n(), m = problem.m();
  const TlseSolution ref = solve_qr_svd(problem);
  Mat ref_map(n, m);
  ref_map << ref.C_A_pinv, ref.K_cal * problem.A().transpose();

  std::vector<LimitRow> rows;
  rows.reserve(eps_grid.size());
  for (const double eps : eps_grid) {
    const WeightedEmbedding emb = embed(problem, eps);
    const WtlsSolution ws = solve_wtls_direct(emb);

    // (L_eps^T L_eps - s^2 I)^{-1} = V diag(1/(sv^2 - s^2)) V^T from the SVD of
    // L_eps, which keeps the O(1) part accurate next to the O(eps^-2) part.
    const dense::SvdResult le = dense::svd(emb.L_eps);
    Vec inv(n), scaled(n);
    for (Index i = 0; i < n; ++i) {
      const double sv = le.singular_values(i);
      const double diff = (sv - ws.sigma) * (sv + ws.sigma);
      inv(i) = 1.0 / diff;
      scaled(i) = sv / diff;
    }
    const Mat P_inv = le.V * inv.asDiagonal() * le.V.transpose();
    Mat Ut = le.U.transpose();
    Ut.leftCols(p) /= eps;  // L^T W^-2 = L_eps^T W^-1
    const Mat map = le.V * scaled.asDiagonal() * Ut;

    LimitRow row;
    row.eps = eps;
    row.x_error = (ws.x - ref.x).norm();
    row.sigma_error = std::abs(ws.sigma - ref.sigma_small);
    row.k_error = dense::spectral_norm(P_inv - ref.K_cal);
    row.map_error = dense::spectral_norm(map - ref_map);
    rows.push_back(row);
  }
  return rows;
}

SketchSize resolve_sketch(const TlseProblem& problem, const NwtlsConfig& cfg) {
  const Index n = problem.n(), p = problem.p();
  SketchSize s;
  s.k = cfg.k > 0 ? cfg.k : n - p + 1;
  if (cfg.k < 0) throw Error(ErrorKind::Input, "k must be positive");
  if (cfg.oversample < 1) throw Error(ErrorKind::Input, "oversample must be at least 1");
  s.ell = std::min<Index>(s.k + cfg.oversample, n + 1);
  if (s.ell < s.k + 1) {
    throw Error(ErrorKind::Input, "sample size k + 1 = " + std::to_string(s.k + 1) + " exceeds n + 1 = " +
                                      std::to_string(n + 1) + "; choose k <= n");
  }
  return s;
}

Vec solve_nwtls(const TlseProblem& problem, const NwtlsConfig& cfg) {
  const Index n = problem.n();
  const SketchSize size = resolve_sketch(problem, cfg);
  const WeightedEmbedding emb = embed(problem, cfg.eps);

  // G^T G = R^T R from the thin QR of G; never formed explicitly.
  const dense::QrResult gqr = dense::thin_qr(emb.G);
  const Mat& R = gqr.R;
  // G is row-graded by 1/eps, so a relative test on diag(R) would reject
  // well-posed problems; only exact singularity is an error here.
  if (!(R.diagonal().cwiseAbs().minCoeff() > 0.0)) {
    throw Error(ErrorKind::Rank, "G^T G is singular: G does not have full column rank");
  }
  const auto Rtri = R.triangularView<Eigen::Upper>();
  auto gram_solve = [&](const Mat& rhs) -> Mat {
    const Mat tmp = Rtri.transpose().solve(rhs);
    return Rtri.solve(tmp);
  };

  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Mat omega(n + 1, size.ell);
  for (Index j = 0; j < omega.cols(); ++j)
    for (Index i = 0; i < omega.rows(); ++i) omega(i, j) = normal(rng);

  const Mat X = gram_solve(omega);
  const Mat Q = dense::thin_qr(X).Q;
  const Mat Y = gram_solve(Q);
  Mat Z = Q.transpose() * Y;
  Z = 0.5 * (Z + Z.transpose());

  Eigen::LLT<Mat> chol(Z);
  if (chol.info() != Eigen::Success) {
    throw Error(ErrorKind::Numerical, "Cholesky of the sketched core failed (not positive definite); "
                                      "try a larger oversample or a different seed");
  }
  // K J = Y with J = L^T  <=>  L K^T = Y^T
  const Mat K = chol.matrixL().solve(Y.transpose()).transpose();

  const dense::SvdResult ks = dense::svd(K);
  Vec v = ks.U.col(0);
  if (v(n) > 0.0) v = -v;
  if (std::abs(v(n)) < kLastComponentTol) {
    throw Error(ErrorKind::NonGeneric, "last component of the dominant sketch vector vanishes");
  }
  return -v.head(n) / v(n);
}

}  // namespace tlse::wtls
