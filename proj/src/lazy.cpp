#include "gdcert/lazy.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "gdcert/linalg.hpp"

namespace gdcert {

FeatureMatrix feature_matrix(const NetworkState& state, const Activation& act,
                             const Dataset& data, const Vector& biases) {
    if (biases.size() != state.m()) {
        throw std::invalid_argument("feature_matrix: need one bias per hidden unit");
    }
    if (state.d() != data.d()) {
        throw std::invalid_argument("feature_matrix: weight/input dimension mismatch");
    }
    FeatureMatrix f{Matrix(state.m(), data.n()), biases};
    for (std::size_t p = 0; p < state.m(); ++p) {
        for (std::size_t q = 0; q < data.n(); ++q) {
            f.A(p, q) = act.sigma(dot(state.W.row(p), data.x(q)) + biases[p]);
        }
    }
    return f;
}

double Invertibility::condition_number() const {
    return lambda_min > 0.0 ? lambda_max / lambda_min : std::numeric_limits<double>::infinity();
}

Invertibility gram_invertibility(const FeatureMatrix& features) {
    if (features.A.rows() < features.A.cols()) {
        throw std::invalid_argument("gram_invertibility: need m >= n (A^T A is singular otherwise)");
    }
    const ThinSvd svd = thin_svd(features.A);
    const double smax = svd.sigma.front();
    const double smin = svd.sigma.back();
    Invertibility inv;
    inv.lambda_min = smin * smin;
    inv.lambda_max = smax * smax;
    inv.frobenius = frobenius_norm(gram_of_columns(features.A));
    const double rows = static_cast<double>(features.A.rows());
    inv.invertible = smax > 0.0 && smin > rows * std::numeric_limits<double>::epsilon() * smax;
    return inv;
}

Vector lazy_predictions(const FeatureMatrix& features, const Vector& a) {
    const Matrix& A = features.A;
    if (a.size() != A.rows()) {
        throw std::invalid_argument("lazy_predictions: output weight count mismatch");
    }
    const double scale = 1.0 / std::sqrt(static_cast<double>(A.rows()));
    Vector f(A.cols());
    for (std::size_t i = 0; i < A.cols(); ++i) {
        double s = 0.0;
        for (std::size_t r = 0; r < A.rows(); ++r) {
            s += a[r] * A(r, i);
        }
        f[i] = scale * s;
    }
    return f;
}

Vector output_gradient(const FeatureMatrix& features, const Vector& a, const Dataset& data) {
    const Vector f = lazy_predictions(features, a);
    const Matrix& A = features.A;
    const double scale = 1.0 / std::sqrt(static_cast<double>(A.rows()));
    Vector g(A.rows());
    for (std::size_t r = 0; r < A.rows(); ++r) {
        double s = 0.0;
        for (std::size_t i = 0; i < A.cols(); ++i) {
            s += (data.targets[i] - f[i]) * A(r, i);
        }
        g[r] = -scale * s;
    }
    return g;
}

LastLayerFit fit_last_layer(const FeatureMatrix& features, const Dataset& data) {
    const Matrix& A = features.A;
    if (A.cols() != data.n()) {
        throw std::invalid_argument("fit_last_layer: feature matrix does not match dataset");
    }
    const auto inv = gram_invertibility(features);
    if (!inv.invertible) {
        throw std::runtime_error("fit_last_layer: A^T A is singular");
    }
    // Minimum-norm solution of A^T a = b is a = U diag(1/sigma) V^T b.
    const ThinSvd svd = thin_svd(A);
    const std::size_t n = A.cols();
    const std::size_t m = A.rows();
    const double root_m = std::sqrt(static_cast<double>(m));

    // a <- a + U diag(1/sigma) V^T b
    auto solve_add = [&](Vector& a, const Vector& b) {
        for (std::size_t k = 0; k < n; ++k) {
            double c = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                c += svd.V(i, k) * b[i];
            }
            c /= svd.sigma[k];
            for (std::size_t r = 0; r < m; ++r) {
                a[r] += c * svd.U(r, k);
            }
        }
    };
    auto residual_of = [&](const Vector& a) {
        const Vector f = lazy_predictions(features, a);
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double e = data.targets[i] - f[i];
            s += e * e;
        }
        return s;
    };

    LastLayerFit fit;
    fit.condition_number = inv.condition_number();
    fit.a_star.assign(m, 0.0);
    Vector rhs(n);
    for (std::size_t i = 0; i < n; ++i) {
        rhs[i] = root_m * data.targets[i];
    }
    solve_add(fit.a_star, rhs);
    fit.residual = residual_of(fit.a_star);
    for (int step = 0; step < 3 && fit.residual > 0.0; ++step) {
        const Vector f = lazy_predictions(features, fit.a_star);
        Vector r(n);
        for (std::size_t i = 0; i < n; ++i) {
            r[i] = root_m * (data.targets[i] - f[i]);
        }
        Vector candidate = fit.a_star;
        solve_add(candidate, r);
        const double candidate_residual = residual_of(candidate);
        if (!(candidate_residual < fit.residual)) {
            break;
        }
        fit.a_star = std::move(candidate);
        fit.residual = candidate_residual;
        fit.refinement_steps = step + 1;
    }
    return fit;
}

}  // namespace gdcert
