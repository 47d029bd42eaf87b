#include "gdcert/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace gdcert {

namespace {

double off_diagonal_norm(const Matrix& a) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t j = 0; j < a.cols(); ++j) {
            if (i != j) {
                s += a(i, j) * a(i, j);
            }
        }
    }
    return std::sqrt(s);
}

void require_psd_pair(const Matrix& a, const Matrix& b, const char* what,
                      const SymmetricSpectrum& sa, const SymmetricSpectrum& sb) {
    if (sa.lambda_min < -kPsdTolerance * frobenius_norm(a) ||
        sb.lambda_min < -kPsdTolerance * frobenius_norm(b)) {
        throw std::invalid_argument(std::string(what) + ": inputs must be positive semidefinite");
    }
}

void require_same_square_shape(const Matrix& a, const Matrix& b, const char* what) {
    if (!a.is_square() || a.rows() != b.rows() || a.cols() != b.cols()) {
        throw std::invalid_argument(std::string(what) + ": shape mismatch");
    }
}

}  // namespace

Matrix khatri_rao(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.cols()) {
        throw std::invalid_argument("khatri_rao: column counts differ (" +
                                    std::to_string(a.cols()) + " vs " +
                                    std::to_string(b.cols()) + ")");
    }
    Matrix out(a.rows() * b.rows(), a.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t k = 0; k < b.rows(); ++k) {
            auto dst = out.row(i * b.rows() + k);
            for (std::size_t j = 0; j < a.cols(); ++j) {
                dst[j] = a(i, j) * b(k, j);
            }
        }
    }
    return out;
}

double frobenius_norm(const Matrix& m) { return norm2(m.data()); }

double trace(const Matrix& m) {
    double t = 0.0;
    for (std::size_t i = 0; i < std::min(m.rows(), m.cols()); ++i) {
        t += m(i, i);
    }
    return t;
}

bool is_symmetric(const Matrix& m, double rel_tol) {
    if (!m.is_square()) {
        return false;
    }
    const double tol = rel_tol * frobenius_norm(m);
    for (std::size_t i = 0; i < m.rows(); ++i) {
        for (std::size_t j = i + 1; j < m.cols(); ++j) {
            if (std::abs(m(i, j) - m(j, i)) > tol) {
                return false;
            }
        }
    }
    return true;
}

SymmetricEigen symmetric_eigen(const Matrix& m) {
    if (!m.is_square() || m.rows() == 0) {
        throw std::invalid_argument("symmetric_eigen: matrix must be square and non-empty");
    }
    if (m.rows() > kMaxEigenDimension) {
        throw std::invalid_argument("symmetric_eigen: dimension exceeds " +
                                    std::to_string(kMaxEigenDimension));
    }
    if (!all_finite(m.data())) {
        throw std::invalid_argument("symmetric_eigen: non-finite entries");
    }
    if (!is_symmetric(m)) {
        throw std::invalid_argument("symmetric_eigen: matrix is not symmetric");
    }

    const std::size_t n = m.rows();
    Matrix a = m;
    // Work on the exactly symmetrized copy.
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double s = 0.5 * (a(i, j) + a(j, i));
            a(i, j) = s;
            a(j, i) = s;
        }
    }
    Matrix v = Matrix::identity(n);
    const double target = kJacobiTolerance * frobenius_norm(m);

    int sweeps = 0;
    while (off_diagonal_norm(a) > target) {
        if (sweeps == kMaxJacobiSweeps) {
            throw std::runtime_error("symmetric_eigen: Jacobi did not converge in " +
                                     std::to_string(kMaxJacobiSweeps) + " sweeps");
        }
        ++sweeps;
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = a(p, q);
                if (apq == 0.0) {
                    continue;
                }
                // Symmetric Schur 2x2 (Golub & Van Loan, Alg. 8.4.1).
                const double tau = (a(q, q) - a(p, p)) / (2.0 * apq);
                const double t = (tau >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(tau) + std::sqrt(1.0 + tau * tau));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = t * c;

                for (std::size_t k = 0; k < n; ++k) {
                    const double akp = a(k, p);
                    const double akq = a(k, q);
                    a(k, p) = c * akp - s * akq;
                    a(k, q) = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double apk = a(p, k);
                    const double aqk = a(q, k);
                    a(p, k) = c * apk - s * aqk;
                    a(q, k) = s * apk + c * aqk;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double vkp = v(k, p);
                    const double vkq = v(k, q);
                    v(k, p) = c * vkp - s * vkq;
                    v(k, q) = s * vkp + c * vkq;
                }
            }
        }
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t i, std::size_t j) { return a(i, i) < a(j, j); });

    SymmetricEigen out;
    out.spectrum.eigenvalues.resize(n);
    out.eigenvectors = Matrix(n, n);
    for (std::size_t k = 0; k < n; ++k) {
        out.spectrum.eigenvalues[k] = a(order[k], order[k]);
        for (std::size_t i = 0; i < n; ++i) {
            out.eigenvectors(i, k) = v(i, order[k]);
        }
    }
    out.spectrum.lambda_min = out.spectrum.eigenvalues.front();
    out.spectrum.lambda_max = out.spectrum.eigenvalues.back();
    out.spectrum.sweeps = sweeps;
    return out;
}

SymmetricSpectrum lambda_min_symmetric(const Matrix& m) { return symmetric_eigen(m).spectrum; }

double spectral_norm_symmetric(const Matrix& m) {
    if (!m.is_square()) {
        throw std::invalid_argument("spectral_norm_symmetric: matrix must be square");
    }
    Matrix sym = m;
    for (std::size_t i = 0; i < m.rows(); ++i) {
        for (std::size_t j = 0; j < m.cols(); ++j) {
            sym(i, j) = 0.5 * (m(i, j) + m(j, i));
        }
    }
    const auto spec = lambda_min_symmetric(sym);
    return std::max(std::abs(spec.lambda_min), std::abs(spec.lambda_max));
}

bool check_weyl_l2(const Matrix& a, const Matrix& b) {
    require_same_square_shape(a, b, "check_weyl_l2");
    const auto sa = lambda_min_symmetric(a);
    const auto sb = lambda_min_symmetric(b);
    require_psd_pair(a, b, "check_weyl_l2", sa, sb);
    const double gap = spectral_norm_symmetric(a - b);
    return sa.lambda_min - (sb.lambda_min - gap) >= -kLemmaSlack;
}

bool check_frobenius_entrywise(const Matrix& a, const Matrix& b, double eps) {
    require_same_square_shape(a, b, "check_frobenius_entrywise");
    if (!(eps >= 0.0)) {
        throw std::invalid_argument("check_frobenius_entrywise: eps must be non-negative");
    }
    const double n = static_cast<double>(a.rows());
    const double entry_bound = eps / (n * n);
    if (max_abs(a - b) > entry_bound) {
        throw std::invalid_argument(
            "check_frobenius_entrywise: some |A_ij - B_ij| exceeds eps / n^2");
    }
    const auto sa = lambda_min_symmetric(a);
    const auto sb = lambda_min_symmetric(b);
    require_psd_pair(a, b, "check_frobenius_entrywise", sa, sb);
    return sa.lambda_min - (sb.lambda_min - eps) >= -kLemmaSlack;
}

ThinSvd thin_svd(const Matrix& a) {
    const std::size_t m = a.rows();
    const std::size_t n = a.cols();
    if (m < n) {
        throw std::invalid_argument("thin_svd: need rows >= cols");
    }
    if (!all_finite(a.data())) {
        throw std::invalid_argument("thin_svd: non-finite input");
    }
    Matrix u = a;
    Matrix v = Matrix::identity(n);
    ThinSvd out;
    bool rotated = true;
    while (rotated) {
        if (out.sweeps == kMaxJacobiSweeps) {
            throw std::runtime_error("thin_svd: no convergence after 100 sweeps");
        }
        ++out.sweeps;
        rotated = false;
        for (std::size_t j = 0; j + 1 < n; ++j) {
            for (std::size_t k = j + 1; k < n; ++k) {
                double alpha = 0.0;
                double beta = 0.0;
                double gamma = 0.0;
                for (std::size_t i = 0; i < m; ++i) {
                    alpha += u(i, j) * u(i, j);
                    beta += u(i, k) * u(i, k);
                    gamma += u(i, j) * u(i, k);
                }
                if (gamma == 0.0 || std::abs(gamma) <= 1e-15 * std::sqrt(alpha * beta)) {
                    continue;
                }
                rotated = true;
                const double zeta = (beta - alpha) / (2.0 * gamma);
                const double t = std::copysign(1.0, zeta) / (std::abs(zeta) + std::hypot(1.0, zeta));
                const double c = 1.0 / std::hypot(1.0, t);
                const double s = c * t;
                for (std::size_t i = 0; i < m; ++i) {
                    const double uj = u(i, j);
                    const double uk = u(i, k);
                    u(i, j) = c * uj - s * uk;
                    u(i, k) = s * uj + c * uk;
                }
                for (std::size_t i = 0; i < n; ++i) {
                    const double vj = v(i, j);
                    const double vk = v(i, k);
                    v(i, j) = c * vj - s * vk;
                    v(i, k) = s * vj + c * vk;
                }
            }
        }
    }
    Vector sigma(n);
    for (std::size_t k = 0; k < n; ++k) {
        double s = 0.0;
        for (std::size_t i = 0; i < m; ++i) s += u(i, k) * u(i, k);
        sigma[k] = std::sqrt(s);
    }
    std::vector<std::size_t> order(n);
    for (std::size_t k = 0; k < n; ++k) order[k] = k;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t x, std::size_t y) { return sigma[x] > sigma[y]; });
    out.U = Matrix(m, n);
    out.V = Matrix(n, n);
    out.sigma.resize(n);
    for (std::size_t c = 0; c < n; ++c) {
        const std::size_t k = order[c];
        out.sigma[c] = sigma[k];
        for (std::size_t i = 0; i < m; ++i) {
            out.U(i, c) = sigma[k] > 0.0 ? u(i, k) / sigma[k] : 0.0;
        }
        for (std::size_t i = 0; i < n; ++i) out.V(i, c) = v(i, k);
    }
    return out;
}

}  // namespace gdcert
