#pragma once
// Test-only reference implementations. Each one takes a different route
// from the library code it checks.

#include <cmath>
#include <functional>
#include <vector>

#include "gdcert/matrix.hpp"

namespace oracle {

using gdcert::Matrix;
using gdcert::Vector;

// Number of eigenvalues of symmetric M below sigma, from the signs of the
// LDL^T pivots of M - sigma I (Sylvester's law of inertia).
inline std::size_t count_below(const Matrix& m, double sigma) {
    const std::size_t n = m.rows();
    Matrix a = m;
    for (std::size_t i = 0; i < n; ++i) a(i, i) -= sigma;
    std::size_t negatives = 0;
    for (std::size_t k = 0; k < n; ++k) {
        double pivot = a(k, k);
        if (pivot == 0.0) pivot = 1e-300;
        if (pivot < 0.0) ++negatives;
        for (std::size_t i = k + 1; i < n; ++i) {
            const double f = a(i, k) / pivot;
            for (std::size_t j = k + 1; j < n; ++j) a(i, j) -= f * a(k, j);
        }
    }
    return negatives;
}

// lambda_min by bisection on the inertia count.
inline double lambda_min_bisection(const Matrix& m) {
    double bound = 0.0;
    for (double v : m.data()) bound += v * v;
    bound = std::sqrt(bound) + 1.0;
    double lo = -bound;
    double hi = bound;
    for (int it = 0; it < 200 && hi - lo > 1e-15 * bound; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (count_below(m, mid) >= 1) hi = mid; else lo = mid;
    }
    return 0.5 * (lo + hi);
}

// Column j of the result is vec(b_j a_j^T), read in the order that puts a's
// index slowest.
inline Matrix khatri_rao_bruteforce(const Matrix& a, const Matrix& b) {
    Matrix out(a.rows() * b.rows(), a.cols());
    for (std::size_t j = 0; j < a.cols(); ++j) {
        Matrix outer(a.rows(), b.rows());
        for (std::size_t i = 0; i < a.rows(); ++i) {
            for (std::size_t k = 0; k < b.rows(); ++k) outer(i, k) = a(i, j) * b(k, j);
        }
        std::size_t row = 0;
        for (std::size_t i = 0; i < a.rows(); ++i) {
            for (std::size_t k = 0; k < b.rows(); ++k) out(row++, j) = outer(i, k);
        }
    }
    return out;
}

// Central differences of a scalar function of a matrix.
inline Matrix finite_difference(const std::function<double(const Matrix&)>& f, Matrix x,
                                double h = 1e-5) {
    Matrix g(x.rows(), x.cols());
    for (std::size_t i = 0; i < x.rows(); ++i) {
        for (std::size_t j = 0; j < x.cols(); ++j) {
            const double orig = x(i, j);
            x(i, j) = orig + h;
            const double fp = f(x);
            x(i, j) = orig - h;
            const double fm = f(x);
            x(i, j) = orig;
            g(i, j) = (fp - fm) / (2.0 * h);
        }
    }
    return g;
}

// exp(M) by scaling and squaring of a truncated Taylor series.
inline Matrix expm(const Matrix& m) {
    double norm = 0.0;
    for (double v : m.data()) norm = std::max(norm, std::abs(v));
    int squarings = 0;
    while (norm * static_cast<double>(m.rows()) > 0.5) {
        norm *= 0.5;
        ++squarings;
    }
    Matrix a = m;
    a *= std::ldexp(1.0, -squarings);
    Matrix result = Matrix::identity(m.rows());
    Matrix term = Matrix::identity(m.rows());
    for (int k = 1; k <= 30; ++k) {
        term = gdcert::matmul(term, a);
        term *= 1.0 / k;
        result += term;
    }
    for (int s = 0; s < squarings; ++s) result = gdcert::matmul(result, result);
    return result;
}

// P[|g| >= t] for g ~ N(0, 1).
inline double gaussian_two_sided_tail(double t) { return std::erfc(t / std::sqrt(2.0)); }

}  // namespace oracle
