#pragma once

#include <cstddef>

#include "gdcert/matrix.hpp"

namespace gdcert {

// Eigenvalues in ascending order; lambda_min is the first one.
struct SymmetricSpectrum {
    Vector eigenvalues;
    double lambda_min = 0.0;
    double lambda_max = 0.0;
    int sweeps = 0;
};

// Spectrum plus orthonormal eigenvectors (column k pairs with eigenvalues[k]).
struct SymmetricEigen {
    SymmetricSpectrum spectrum;
    Matrix eigenvectors;
};

inline constexpr std::size_t kMaxEigenDimension = 2048;
inline constexpr int kMaxJacobiSweeps = 100;
inline constexpr double kSymmetryTolerance = 1e-10;
inline constexpr double kJacobiTolerance = 1e-12;
inline constexpr double kPsdTolerance = 1e-10;
inline constexpr double kLemmaSlack = 1e-10;

// Column-wise Kronecker product. Column j of the (m*n) x r result is
// A(:, j) (x) B(:, j) with A's index varying slowest:
// (a1 b1, a1 b2, ..., a2 b1, ...).
Matrix khatri_rao(const Matrix& a, const Matrix& b);

double frobenius_norm(const Matrix& m);
double trace(const Matrix& m);
bool is_symmetric(const Matrix& m, double rel_tol = kSymmetryTolerance);

// Cyclic Jacobi iterated until the off-diagonal Frobenius mass is at most
// 1e-12 * ||M||_F. Throws std::invalid_argument for non-square, oversized or
// non-symmetric input and std::runtime_error after 100 sweeps without
// convergence.
SymmetricEigen symmetric_eigen(const Matrix& m);
SymmetricSpectrum lambda_min_symmetric(const Matrix& m);

// Largest |eigenvalue| of (M + M^T)/2.
double spectral_norm_symmetric(const Matrix& m);

// Thin SVD A = U diag(sigma) V^T of an m x n matrix with m >= n.
struct ThinSvd {
    Matrix U;      // m x n, orthonormal columns (zero column for sigma == 0)
    Vector sigma;  // descending
    Matrix V;      // n x n orthogonal
    int sweeps = 0;
};

// One-sided (Hestenes) Jacobi. Works on A directly instead of A^T A, so small
// singular values keep their relative accuracy. Throws std::invalid_argument
// when m < n or the input is not finite, std::runtime_error after 100 sweeps.
ThinSvd thin_svd(const Matrix& a);

// lambda_min(A) >= lambda_min(B) - ||A - B||_2, with slack 1e-10.
// Both inputs must be symmetric PSD (within tolerance) and of equal shape.
bool check_weyl_l2(const Matrix& a, const Matrix& b);

// lambda_min(A) >= lambda_min(B) - eps given max |A_ij - B_ij| <= eps / n^2.
// Throws std::invalid_argument when the entrywise precondition fails.
bool check_frobenius_entrywise(const Matrix& a, const Matrix& b, double eps);

}  // namespace gdcert
