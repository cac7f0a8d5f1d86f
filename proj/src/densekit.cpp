#include "tlse/densekit.hpp"

#include <cmath>
#include <cstdlib>
#include <limits>
#include <string>

#include <lapacke.h>

#include "tlse/errors.hpp"

namespace tlse::dense {

std::size_t mem_cap() {
  if (const char* env = std::getenv("TLSE_MEM_CAP")) {
    char* end = nullptr;
    const unsigned long long v = std::strtoull(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<std::size_t>(v);
  }
  return kDefaultMemCap;
}

void check_mem_cap(std::size_t rows, std::size_t cols, std::size_t cap, const char* what) {
  if (cols != 0 && rows > std::numeric_limits<std::size_t>::max() / cols) {
    throw Error(ErrorKind::Resource, std::string(what) + ": size overflows; use the matrix-free path");
  }
  if (rows * cols > cap) {
    throw Error(ErrorKind::Resource,
                std::string(what) + " needs " + std::to_string(rows * cols) +
                    " entries, above the memory guard of " + std::to_string(cap) +
                    " (raise TLSE_MEM_CAP or use the matrix-free path)");
  }
}

void require_finite(const Mat& M, const char* what) {
  if (!M.allFinite()) throw Error(ErrorKind::Input, std::string(what) + " has non-finite entries");
}

namespace {

// Flip signs so that R has a nonnegative diagonal.
void normalize_signs(Mat& Q, Mat& R) {
  const Index k = std::min(R.rows(), R.cols());
  for (Index i = 0; i < k; ++i) {
    if (R(i, i) < 0.0) {
      R.row(i) *= -1.0;
      Q.col(i) *= -1.0;
    }
  }
}

}  // namespace

QrResult thin_qr(const Mat& M) {
  require_finite(M, "thin_qr input");
  if (M.rows() < M.cols()) throw Error(ErrorKind::Input, "thin_qr needs rows >= cols");
  const Index m = M.rows(), k = M.cols();
  Eigen::HouseholderQR<Mat> qr(M);
  QrResult out;
  out.Q = qr.householderQ() * Mat::Identity(m, k);
  out.R = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
  normalize_signs(out.Q, out.R);
  return out;
}

QrResult full_qr(const Mat& M) {
  require_finite(M, "full_qr input");
  if (M.rows() < M.cols()) throw Error(ErrorKind::Input, "full_qr needs rows >= cols");
  Eigen::HouseholderQR<Mat> qr(M);
  QrResult out;
  out.Q = qr.householderQ();
  out.R = qr.matrixQR().triangularView<Eigen::Upper>();
  normalize_signs(out.Q, out.R);
  return out;
}

SvdResult svd(const Mat& M, SvdMode mode) {
  require_finite(M, "svd input");
  SvdResult out;
  if (M.size() == 0) {
    out.U = Mat::Identity(M.rows(), mode == SvdMode::Full ? M.rows() : 0);
    out.V = Mat::Identity(M.cols(), mode == SvdMode::Full ? M.cols() : 0);
    out.singular_values.resize(0);
    return out;
  }
  const unsigned opts = mode == SvdMode::Full ? (Eigen::ComputeFullU | Eigen::ComputeFullV)
                                              : (Eigen::ComputeThinU | Eigen::ComputeThinV);
  Eigen::JacobiSVD<Mat> solver(M, opts);
  if (solver.info() != Eigen::Success) throw Error(ErrorKind::Numerical, "SVD did not converge");
  out.U = solver.matrixU();
  out.singular_values = solver.singularValues();
  out.V = solver.matrixV();
  return out;
}

SvdResult svd_graded(const Mat& M) {
  require_finite(M, "svd input");
  const Index m = M.rows(), n = M.cols();
  if (m < n) throw Error(ErrorKind::Input, "svd_graded needs rows >= cols");
  SvdResult out;
  if (n == 0) {
    out.singular_values.resize(0);
    out.V.resize(0, 0);
    return out;
  }
  Mat A = M;
  Vec sva(n);
  Mat U(m, n);
  out.V.resize(n, n);
  double stat[7];
  lapack_int istat[3];
  const lapack_int info = LAPACKE_dgejsv(LAPACK_COL_MAJOR, 'F', 'N', 'V', 'N', 'N', 'N', m, n, A.data(), m, sva.data(),
                                         U.data(), m, out.V.data(), n, stat, istat);
  if (info < 0) throw Error(ErrorKind::Input, "dgejsv rejected argument " + std::to_string(-info));
  if (info > 0) throw Error(ErrorKind::Numerical, "graded SVD did not converge");
  out.singular_values = sva * (stat[1] / stat[0]);
  return out;
}

Vec singular_values(const Mat& M) {
  require_finite(M, "svd input");
  if (M.size() == 0) return Vec(0);
  Eigen::JacobiSVD<Mat> solver(M);
  if (solver.info() != Eigen::Success) throw Error(ErrorKind::Numerical, "SVD did not converge");
  return solver.singularValues();
}

double spectral_norm(const Mat& M) {
  if (M.size() == 0) return 0.0;
  return singular_values(M)(0);
}

double min_singular_value(const Mat& M) {
  const Vec s = singular_values(M);
  return s.size() == 0 ? 0.0 : s(s.size() - 1);
}

Mat kron(const Mat& A, const Mat& B, std::size_t cap) {
  const auto rows = static_cast<std::size_t>(A.rows() * B.rows());
  const auto cols = static_cast<std::size_t>(A.cols() * B.cols());
  check_mem_cap(rows, cols, cap, "kron");
  Mat out(A.rows() * B.rows(), A.cols() * B.cols());
  for (Index j = 0; j < A.cols(); ++j)
    for (Index i = 0; i < A.rows(); ++i)
      out.block(i * B.rows(), j * B.cols(), B.rows(), B.cols()) = A(i, j) * B;
  return out;
}

Vec vec(const Mat& M) {
  return Eigen::Map<const Vec>(M.data(), M.size());
}

Mat unvec(const Vec& v, Index rows, Index cols) {
  if (v.size() != rows * cols) throw Error(ErrorKind::Input, "unvec: size mismatch");
  return Eigen::Map<const Mat>(v.data(), rows, cols);
}

Mat pinv_from_qr(const Mat& C) {
  require_finite(C, "C");
  const Index p = C.rows(), n = C.cols();
  if (p > n) throw Error(ErrorKind::Input, "pinv_from_qr expects a wide matrix (p <= n)");
  if (p == 0) return Mat::Zero(n, 0);
  const QrResult qr = thin_qr(C.transpose());
  const double rmax = qr.R.cwiseAbs().maxCoeff();
  for (Index i = 0; i < p; ++i) {
    if (!(std::abs(qr.R(i, i)) > kRankTol * rmax)) {
      throw Error(ErrorKind::Rank, "C is rank deficient: |R1(" + std::to_string(i) + "," +
                                       std::to_string(i) + ")| = " + std::to_string(std::abs(qr.R(i, i))));
    }
  }
  // C^+ = Q1 R1^{-T}  <=>  (C^+)^T = R1^{-1} Q1^T
  Mat Ct = qr.R.triangularView<Eigen::Upper>().solve(qr.Q.transpose());
  return Ct.transpose();
}

Mat greville_augment(const Mat& C_pinv, const Vec& x_C) {
  if (C_pinv.rows() != x_C.size()) throw Error(ErrorKind::Input, "greville_augment: dimension mismatch");
  const Index n = C_pinv.rows(), p = C_pinv.cols();
  const double w = 1.0 + x_C.squaredNorm();
  Mat out(n + 1, p);
  const Eigen::RowVectorXd xtC = x_C.transpose() * C_pinv;
  out.topRows(n) = C_pinv - (x_C / w) * xtC;
  out.row(n) = xtC / w;
  return out;
}

}  // namespace tlse::dense
