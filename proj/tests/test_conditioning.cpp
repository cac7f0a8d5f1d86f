#include <gtest/gtest.h>

#include <cmath>

#include "support.hpp"
#include "tlse/conditioning.hpp"

using namespace tlse;
using tlse::testing::expect_kind;
using tlse::testing::norm2_oracle;
using tlse::testing::random_problem;
using tlse::testing::rel;
using tlse::testing::uniform_mat;
using tlse::testing::uniform_vec;

namespace {

struct Fixture {
  TlseProblem prob;
  TlseSolution sol;
  cond::KOperator op;
};

Fixture make(const TlseProblem& prob) {
  Fixture f{prob, solve_qr_svd(prob), {}};
  f.op = cond::build_k_operator(f.prob, f.sol);
  return f;
}

Mat kron_oracle(const Mat& A, const Mat& B) {
  Mat out(A.rows() * B.rows(), A.cols() * B.cols());
  for (Index i = 0; i < A.rows(); ++i)
    for (Index j = 0; j < A.cols(); ++j) out.block(i * B.rows(), j * B.cols(), B.rows(), B.cols()) = A(i, j) * B;
  return out;
}

// Plain TLS quantities computed from scratch: sigma, u, P = A^T A - sigma^2 I.
struct TlsOracle {
  double sigma, rho;
  Vec x, u;
  Mat P_inv;
};

TlsOracle tls_oracle(const Mat& A, const Vec& b) {
  const Index q = A.rows(), n = A.cols();
  Mat Ab(q, n + 1);
  Ab << A, b;
  Eigen::BDCSVD<Mat> svd(Ab, Eigen::ComputeThinU | Eigen::ComputeThinV);
  TlsOracle o;
  o.sigma = svd.singularValues()(n);
  Vec v = svd.matrixV().col(n);
  Vec u = svd.matrixU().col(n);
  if (v(n) > 0) {
    v = -v;
    u = -u;
  }
  o.rho = -1.0 / v(n);
  o.x = o.rho * v.head(n);
  o.u = u;  // [A b] v = sigma u with v = [x; -1] / rho, so r = rho sigma u
  Mat P = A.transpose() * A;
  P.diagonal().array() -= o.sigma * o.sigma;
  o.P_inv = P.inverse();
  return o;
}

// K_LJ on vec([A b]).
Mat k_lj(const Mat& A, const TlsOracle& o) {
  const Index q = A.rows(), n = A.cols();
  Eigen::RowVectorXd xm1(n + 1);
  xm1 << o.x.transpose(), -1.0;
  const Mat G = kron_oracle(xm1, Mat::Identity(q, q));
  Mat In0 = Mat::Zero(n, n + 1);
  In0.leftCols(n).setIdentity();
  const Mat ut = o.u.transpose();
  return o.P_inv * ((2 * o.sigma / o.rho) * o.x * (ut * G) - A.transpose() * G - o.rho * o.sigma * kron_oracle(In0, ut));
}

// K_BG on [vec(A); b].
Mat k_bg(const Mat& A, const TlsOracle& o) {
  const Index q = A.rows(), n = A.cols();
  const Mat D = o.P_inv * (A.transpose() - (2 * o.sigma / o.rho) * o.x * o.u.transpose());
  Mat out(n, q * (n + 1));
  out.leftCols(q * n) = -kron_oracle(o.x.transpose(), D) -
                        o.rho * o.sigma * o.P_inv * kron_oracle(Mat::Identity(n, n), o.u.transpose());
  out.rightCols(q) = D;
  return out;
}

double kappa_n_oracle(const Mat& K, const Mat& L, const Vec& h, const Vec& x, const cond::Weights& w) {
  const Index m = L.rows(), n = L.cols();
  Mat S = K;
  S.leftCols(m * n) /= w.alpha;
  S.rightCols(m) /= w.beta;
  const double data = std::sqrt(w.alpha * w.alpha * L.squaredNorm() + w.beta * w.beta * h.squaredNorm());
  return norm2_oracle(S) * data / x.norm();
}

TlseProblem zero_residual_problem() {
  std::mt19937_64 rng(77);
  const Mat C = uniform_mat(rng, 2, 5), A = uniform_mat(rng, 9, 5);
  const Vec x = uniform_vec(rng, 5);
  return TlseProblem(C, C * x, A, A * x);
}

}  // namespace

TEST(KOperator, FiniteDifferences) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Fixture f = make(tlse::testing::random_sized_problem(seed, 4, 8, 15));
    std::mt19937_64 rng(seed + 1000);
    const Mat dL = uniform_mat(rng, f.prob.m(), f.prob.n());
    const Vec dh = uniform_vec(rng, f.prob.m());
    const double step = 1e-6;
    const Vec xp = solve_qr_svd(f.prob.perturbed(step * dL, step * dh)).x;
    const Vec xm = solve_qr_svd(f.prob.perturbed(-step * dL, -step * dh)).x;
    const Vec fd = (xp - xm) / (2 * step);
    const Vec lin = cond::apply_k(f.op, dL, dh);
    EXPECT_LT((fd - lin).norm(), 1e-5 * lin.norm()) << "seed " << seed;
  }
}

TEST(KOperator, ExplicitFormsAgreeWithApply) {
  const Fixture f = make(random_problem(2, 3, 6, 10));
  const Mat Kk = cond::materialize_k(f.op, cond::KForm::Kron);
  const Mat Kb = cond::materialize_k(f.op, cond::KForm::Blocked);
  ASSERT_EQ(Kk.rows(), 6);
  ASSERT_EQ(Kk.cols(), 13 * 7);
  EXPECT_LT(rel(Kb, Kk), 1e-13);
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 5; ++trial) {
    const Mat dL = uniform_mat(rng, 13, 6);
    const Vec dh = uniform_vec(rng, 13);
    Mat dLh(13, 7);
    dLh << dL, dh;
    const Vec lin = cond::apply_k(f.op, dL, dh);
    EXPECT_LT((Kk * dense::vec(dLh) - lin).norm(), 1e-12 * lin.norm());
  }
}

TEST(KOperator, ZeroResidualDropsRankOneTerm) {
  const Fixture f = make(zero_residual_problem());
  EXPECT_LT(f.op.t.norm(), 1e-12);
  Mat base(5, 11);
  base << f.op.C_A_pinv, f.op.K_cal * f.prob.A().transpose();
  EXPECT_LT((f.op.H1 + base).norm(), 1e-12 * base.norm());
}

TEST(KOperator, UnconstrainedHouseholderForm) {
  const Fixture f = make(random_problem(4, 0, 4, 9));
  const Vec& r = f.sol.r;
  const Mat H0 = Mat::Identity(9, 9) - 2 * r * r.transpose() / r.squaredNorm();
  const TlsOracle o = tls_oracle(f.prob.A(), f.prob.b());
  EXPECT_LT(rel(f.op.H1, -o.P_inv * f.prob.A().transpose() * H0), 1e-10);
}

TEST(KOperator, UnconstrainedMatchesBothClassicalForms) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Fixture f = make(random_problem(seed, 0, 4, 8));
    const TlsOracle o = tls_oracle(f.prob.A(), f.prob.b());
    ASSERT_LT((o.x - f.sol.x).norm(), 1e-10 * o.x.norm());
    const Mat K = cond::materialize_k(f.op, cond::KForm::Kron);
    EXPECT_LT(rel(K, k_lj(f.prob.A(), o)), 1e-10);
    EXPECT_LT(rel(K, k_bg(f.prob.A(), o)), 1e-10);
  }
}

TEST(KOperator, GoldenRatioClassicalForms) {
  Mat A(2, 1);
  A << 1, 0;
  Vec b(2);
  b << 1, 1;
  const Fixture f = make(TlseProblem::unconstrained(A, b));
  const TlsOracle o = tls_oracle(A, b);
  EXPECT_LT(rel(cond::materialize_k(f.op, cond::KForm::Blocked), k_lj(A, o)), 1e-12);
}

TEST(KOperator, DimensionMismatch) {
  const Fixture f = make(random_problem(1, 1, 3, 5));
  expect_kind(ErrorKind::Input, [&] { cond::apply_k(f.op, Mat::Zero(5, 3), Vec::Zero(6)); });
}

TEST(KappaNormwise, ExactMatchesOracle) {
  const Fixture f = make(random_problem(5, 2, 5, 9));
  const Mat K = cond::materialize_k(f.op, cond::KForm::Kron);
  for (const cond::Weights w : {cond::Weights{1, 1}, cond::Weights{2, 0.5}, cond::Weights{0.3, 3}}) {
    const double k = cond::kappa_normwise_exact(f.op, w, f.prob.L(), f.prob.h());
    EXPECT_NEAR(k, kappa_n_oracle(K, f.prob.L(), f.prob.h(), f.sol.x, w), 1e-10 * k);
  }
}

TEST(KappaNormwise, CompactEqualsExactForEverySignChoice) {
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    const Fixture f = make(tlse::testing::random_sized_problem(seed, 3, 7, 12));
    for (const cond::Weights w : {cond::Weights{1, 1}, cond::Weights{2, 0.5}, cond::Weights{0.3, 3}}) {
      const double exact = cond::kappa_normwise_exact(f.op, w, f.prob.L(), f.prob.h());
      for (const int s1 : {1, -1})
        for (const int s2 : {1, -1}) {
          const double c = cond::kappa_normwise_compact(f.op, w, f.prob.L(), f.prob.h(), {s1, s2});
          EXPECT_NEAR(c, exact, 1e-10 * exact) << "seed " << seed << " signs " << s1 << s2;
        }
    }
  }
}

TEST(KappaNormwise, ZeroResidualFallback) {
  const Fixture f = make(zero_residual_problem());
  for (const cond::Weights w : {cond::Weights{1, 1}, cond::Weights{2, 0.5}}) {
    const double exact = cond::kappa_normwise_exact(f.op, w, f.prob.L(), f.prob.h());
    EXPECT_NEAR(cond::kappa_normwise_compact(f.op, w, f.prob.L(), f.prob.h()), exact, 1e-10 * exact);
  }
}

TEST(KappaNormwise, UpperBoundsDominate) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Fixture f = make(tlse::testing::random_sized_problem(seed, 4, 8, 15));
    const cond::Weights w{1.5, 0.7};
    const double exact = cond::kappa_normwise_exact(f.op, w, f.prob.L(), f.prob.h());
    const cond::NormwiseUpper up = cond::kappa_normwise_upper(f.op, w, f.prob.L(), f.prob.h());
    EXPECT_LE(exact, up.tight * (1 + 1e-12));
    EXPECT_LE(up.tight, up.loose * (1 + 1e-12));
  }
}

TEST(KappaNormwise, Errors) {
  const Fixture f = make(random_problem(6, 1, 3, 5));
  expect_kind(ErrorKind::Input, [&] { cond::kappa_normwise_exact(f.op, {0.0, 1.0}, f.prob.L(), f.prob.h()); });
  expect_kind(ErrorKind::Input, [&] { cond::kappa_normwise_compact(f.op, {1.0, -1.0}, f.prob.L(), f.prob.h()); });
  expect_kind(ErrorKind::Resource, [&] { cond::kappa_normwise_exact(f.op, {}, f.prob.L(), f.prob.h(), 10); });
  Mat C(1, 2);
  C << 1, 0;
  const Fixture z = make(TlseProblem(C, Vec::Zero(1), Mat::Identity(2, 2), Vec::Zero(2)));
  expect_kind(ErrorKind::Undefined, [&] { cond::kappa_normwise_exact(z.op, {}, z.prob.L(), z.prob.h()); });
  expect_kind(ErrorKind::Undefined, [&] { cond::kappa_mixed_componentwise_upper(z.op, z.prob.L(), z.prob.h()); });
}

TEST(KappaMixed, ExactMatchesOracle) {
  const Fixture f = make(random_problem(8, 2, 5, 9));
  const Mat K = cond::materialize_k(f.op, cond::KForm::Kron);
  Mat Lh = f.prob.Lh().cwiseAbs();
  const Vec num = K.cwiseAbs() * Eigen::Map<const Vec>(Lh.data(), Lh.size());
  const auto mc = cond::kappa_mixed_componentwise_exact(f.op, f.prob.L(), f.prob.h());
  EXPECT_NEAR(mc.kappa_m, num.lpNorm<Eigen::Infinity>() / f.sol.x.lpNorm<Eigen::Infinity>(), 1e-12 * mc.kappa_m);
  EXPECT_NEAR(mc.kappa_c, num.cwiseQuotient(f.sol.x.cwiseAbs()).maxCoeff(), 1e-12 * mc.kappa_c);
  EXPECT_FALSE(mc.kappa_c_infinite);
}

TEST(KappaMixed, OrderingAndUpperBounds) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Fixture f = make(tlse::testing::random_sized_problem(seed, 4, 8, 15));
    const auto ex = cond::kappa_mixed_componentwise_exact(f.op, f.prob.L(), f.prob.h());
    const auto up = cond::kappa_mixed_componentwise_upper(f.op, f.prob.L(), f.prob.h());
    EXPECT_LE(ex.kappa_m, ex.kappa_c * (1 + 1e-12));
    EXPECT_LE(ex.kappa_m, up.kappa_m * (1 + 1e-12));
    EXPECT_LE(ex.kappa_c, up.kappa_c * (1 + 1e-12));
  }
}

TEST(KappaMixed, UnconstrainedClosedForm) {
  const Fixture f = make(random_problem(9, 0, 4, 8));
  const Mat& A = f.prob.A();
  const Vec& x = f.sol.x;
  const Vec& r = f.sol.r;
  const double rho2 = 1 + x.squaredNorm();
  const Mat Pbar_inv = tls_oracle(A, f.prob.b()).P_inv;
  const Mat Dbar = -Pbar_inv * (A.transpose() - (2 / rho2) * x * r.transpose());
  const Mat Mbar = kron_oracle(x.transpose(), Dbar) - Pbar_inv * kron_oracle(Mat::Identity(4, 4), r.transpose());
  Mat absA = A.cwiseAbs();
  const Vec num = Mbar.cwiseAbs() * Eigen::Map<const Vec>(absA.data(), absA.size()) +
                  Dbar.cwiseAbs() * f.prob.b().cwiseAbs();
  const auto mc = cond::kappa_mixed_componentwise_exact(f.op, f.prob.L(), f.prob.h());
  EXPECT_NEAR(mc.kappa_m, num.lpNorm<Eigen::Infinity>() / x.lpNorm<Eigen::Infinity>(), 1e-10 * mc.kappa_m);
  EXPECT_NEAR(mc.kappa_c, num.cwiseQuotient(x.cwiseAbs()).maxCoeff(), 1e-10 * mc.kappa_c);
}

TEST(KappaMixed, ZeroComponentIsInfinite) {
  // Solvers never land on an exact zero, so the operator is assembled by hand.
  std::mt19937_64 rng(21);
  cond::KOperator op;
  op.p = 0;
  op.q = op.m = 3;
  op.n = 2;
  op.x = Vec::Unit(2, 0);
  op.rho = std::sqrt(2.0);
  op.H1 = uniform_mat(rng, 2, 3);
  op.K_cal = uniform_mat(rng, 2, 2);
  op.C_A_pinv = Mat::Zero(2, 0);
  op.t = uniform_vec(rng, 3);
  const Mat L = uniform_mat(rng, 3, 2);
  const Vec h = uniform_vec(rng, 3);
  for (const auto& mc : {cond::kappa_mixed_componentwise_exact(op, L, h),
                         cond::kappa_mixed_componentwise_upper(op, L, h)}) {
    EXPECT_TRUE(mc.kappa_c_infinite);
    EXPECT_TRUE(std::isfinite(mc.kappa_c));
    EXPECT_GT(mc.kappa_m, 0.0);
  }
}

TEST(TlsSpecialization, MatchesDefinitionsAndBoundsFirstOrderChange) {
  const Fixture f = make(random_problem(10, 0, 5, 12));
  const TlsOracle o = tls_oracle(f.prob.A(), f.prob.b());
  const auto s = cond::tls_specialization(f.prob, f.sol);
  const double pat = norm2_oracle(o.P_inv * f.prob.A().transpose());
  const double xn = o.x.norm();
  EXPECT_NEAR(s.kappa_b, f.prob.b().norm() / xn * pat, 1e-10 * s.kappa_b);
  const double ka = norm2_oracle(f.prob.A()) / xn * (o.rho * o.sigma * norm2_oracle(o.P_inv) + xn * pat);
  EXPECT_NEAR(s.kappa_A, ka, 1e-10 * s.kappa_A);

  std::mt19937_64 rng(10);
  for (int trial = 0; trial < 10; ++trial) {
    const Mat dA = 1e-7 * uniform_mat(rng, 12, 5);
    const Vec db = 1e-7 * uniform_vec(rng, 12);
    Mat dL = dA;
    const Vec dx = solve_qr_svd(f.prob.perturbed(dL, db)).x - f.sol.x;
    EXPECT_LE(dx.norm() / xn, s.estimate(dA, db) * (1 + 1e-3));
  }
}

TEST(TlsSpecialization, ConstrainedIsMisuse) {
  const Fixture f = make(random_problem(11, 1, 4, 8));
  expect_kind(ErrorKind::Misuse, [&] { cond::tls_specialization(f.prob, f.sol); });
}

TEST(ConditionReport, MethodsAgree) {
  const TlseProblem prob = random_problem(12, 2, 6, 10);
  const TlseSolution sol = solve_qr_svd(prob);
  const auto ex = cond::condition_report(prob, sol, {}, cond::Method::Exact);
  const auto co = cond::condition_report(prob, sol, {}, cond::Method::Compact);
  const auto up = cond::condition_report(prob, sol, {}, cond::Method::Upper);
  ASSERT_TRUE(ex.kappa_n && co.kappa_n && ex.kappa_m && ex.kappa_c);
  EXPECT_NEAR(*ex.kappa_n, *co.kappa_n, 1e-10 * *ex.kappa_n);
  EXPECT_FALSE(up.kappa_n.has_value());
  EXPECT_FALSE(up.kappa_m.has_value());
  EXPECT_EQ(up.kappa_n_upper, ex.kappa_n_upper);
  EXPECT_LE(*ex.kappa_m, ex.kappa_m_upper * (1 + 1e-12));
}

TEST(ConditionReport, MemoryGuard) {
  const TlseProblem prob = random_problem(13, 2, 6, 10);
  const TlseSolution sol = solve_qr_svd(prob);
  expect_kind(ErrorKind::Resource, [&] { cond::condition_report(prob, sol, {}, cond::Method::Exact, 100); });
  const auto co = cond::condition_report(prob, sol, {}, cond::Method::Compact, 100);
  EXPECT_TRUE(co.kappa_n.has_value());
  EXPECT_FALSE(co.kappa_m.has_value());
  EXPECT_GT(co.kappa_m_upper, 0.0);
}
