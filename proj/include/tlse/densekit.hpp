#pragma once

// Dense kernels shared by the solvers and the condition-number code.
// Everything here is a pure function of its arguments; the Eigen backend
// does the heavy lifting.

#include <cstddef>

#include <Eigen/Dense>

namespace tlse {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;
using Index = Eigen::Index;

}  // namespace tlse

namespace tlse::dense {

/// Default cap on the number of entries of an explicitly formed Kronecker
/// product (or any matrix built from one).
inline constexpr std::size_t kDefaultMemCap = 4'000'000;

/// Memory guard in effect: `TLSE_MEM_CAP` from the environment when it parses
/// as a positive integer, otherwise kDefaultMemCap.
std::size_t mem_cap();

/// Throws a Resource error when rows*cols exceeds `cap`.
void check_mem_cap(std::size_t rows, std::size_t cols, std::size_t cap, const char* what);

void require_finite(const Mat& M, const char* what);

struct QrResult {
  Mat Q;
  Mat R;
};

/// Householder QR with diag(R) >= 0. `M` must have at least as many rows as
/// columns. Thin: Q is rows x cols, R is cols x cols.
QrResult thin_qr(const Mat& M);

/// Full variant: Q is square, R is rows x cols. The trailing columns of Q span
/// the orthogonal complement of range(M).
QrResult full_qr(const Mat& M);

struct SvdResult {
  Mat U;
  Vec singular_values;  // nonincreasing
  Mat V;
};

enum class SvdMode { Thin, Full };

/// Two-sided Jacobi SVD. Throws Numerical if the backend reports failure.
SvdResult svd(const Mat& M, SvdMode mode = SvdMode::Thin);

/// Singular values and right singular vectors (U left empty) of a tall matrix
/// whose rows differ wildly in scale, M = D1 B D2 with well-conditioned B.
/// Preconditioned one-sided Jacobi with row pivoting keeps the small singular
/// triplets accurate where a plain SVD loses them to |M|_2 * eps.
SvdResult svd_graded(const Mat& M);

Vec singular_values(const Mat& M);

/// Largest singular value (0 for an empty matrix).
double spectral_norm(const Mat& M);

/// Smallest of the min(rows, cols) singular values.
double min_singular_value(const Mat& M);

Mat kron(const Mat& A, const Mat& B, std::size_t cap = mem_cap());

/// Column-stacking vec.
Vec vec(const Mat& M);

/// Inverse of vec for a rows x cols matrix.
Mat unvec(const Vec& v, Index rows, Index cols);

/// C^+ = Q1 R1^{-T} from the thin QR of C^T. C must have full row rank:
/// every |R1(i,i)| must exceed 1e-12 * max|R1|.
Mat pinv_from_qr(const Mat& C);

/// Pseudoinverse of [C d] from C^+ and x_C = C^+ d by Greville's column
/// update:  [(I - x_C x_C^T / w) C^+ ; x_C^T C^+ / w],  w = 1 + |x_C|^2.
Mat greville_augment(const Mat& C_pinv, const Vec& x_C);

/// Relative rank tolerance used for triangular factors.
inline constexpr double kRankTol = 1e-12;

}  // namespace tlse::dense
