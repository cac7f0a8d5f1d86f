#pragma once

#include <gtest/gtest.h>

#include <Eigen/SVD>
#include <cstdint>
#include <functional>
#include <random>

#include "tlse/errors.hpp"
#include "tlse/tlse_core.hpp"

namespace tlse::testing {

inline Mat uniform_mat(std::mt19937_64& rng, Index r, Index c, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Mat M(r, c);
  for (Index j = 0; j < c; ++j)
    for (Index i = 0; i < r; ++i) M(i, j) = u(rng);
  return M;
}

inline Vec uniform_vec(std::mt19937_64& rng, Index n, double lo = -1.0, double hi = 1.0) {
  return uniform_mat(rng, n, 1, lo, hi).col(0);
}

inline TlseProblem random_problem(std::uint64_t seed, Index p, Index n, Index q) {
  std::mt19937_64 rng(seed);
  Mat C = uniform_mat(rng, p, n);
  Vec d = uniform_vec(rng, p);
  Mat A = uniform_mat(rng, q, n);
  Vec b = uniform_vec(rng, q);
  return TlseProblem(C, d, A, b);
}

/// Random sizes with p <= pmax, n <= nmax, q <= qmax.
inline TlseProblem random_sized_problem(std::uint64_t seed, Index pmax = 5, Index nmax = 20, Index qmax = 40) {
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  const Index p = static_cast<Index>(rng() % static_cast<std::uint64_t>(pmax + 1));
  const Index n = p + 1 + static_cast<Index>(rng() % static_cast<std::uint64_t>(nmax - p));
  const Index qmin = n - p + 1;
  const Index q = qmin + static_cast<Index>(rng() % static_cast<std::uint64_t>(qmax + 1 - qmin));
  return random_problem(seed, p, n, q);
}

/// Moore-Penrose inverse from a divide-and-conquer SVD (independent of densekit).
inline Mat pinv_oracle(const Mat& M) {
  Eigen::BDCSVD<Mat> svd(M, Eigen::ComputeThinU | Eigen::ComputeThinV);
  Vec s = svd.singularValues();
  const double tol = 1e-13 * (s.size() ? s(0) : 0.0);
  for (Index i = 0; i < s.size(); ++i) s(i) = s(i) > tol ? 1.0 / s(i) : 0.0;
  return svd.matrixV() * s.asDiagonal() * svd.matrixU().transpose();
}

inline double norm2_oracle(const Mat& M) {
  if (M.size() == 0) return 0.0;
  return Eigen::BDCSVD<Mat>(M).singularValues()(0);
}

inline void expect_kind(ErrorKind kind, const std::function<void()>& f) {
  try {
    f();
    ADD_FAILURE() << "expected " << to_string(kind);
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), kind) << e.what();
  }
}

inline double rel(const Mat& a, const Mat& b) { return (a - b).norm() / std::max(b.norm(), 1e-300); }

}  // namespace tlse::testing
