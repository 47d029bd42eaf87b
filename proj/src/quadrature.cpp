#include "gdcert/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <string>

#include "gdcert/linalg.hpp"

namespace gdcert {

namespace {

GaussHermiteRule build_gauss_hermite(std::size_t n) {
    if (n == 0) {
        throw std::invalid_argument("gauss_hermite: need at least one node");
    }
    // Physicists' rule (weight exp(-x^2)) first. Starting points are the
    // eigenvalues of the symmetric Jacobi matrix of the Hermite recurrence;
    // each is then polished by Newton on the orthonormal recurrence, run on
    // Hermite functions (polynomial times exp(-z^2/2)) so that large rules do
    // not overflow at the outer nodes.
    const double pim4 = 1.0 / std::pow(std::numbers::pi, 0.25);
    const double nd = static_cast<double>(n);
    Matrix jacobi(n, n);
    for (std::size_t k = 0; k + 1 < n; ++k) {
        const double b = std::sqrt(0.5 * static_cast<double>(k + 1));
        jacobi(k, k + 1) = b;
        jacobi(k + 1, k) = b;
    }
    const Vector guess = lambda_min_symmetric(jacobi).eigenvalues;

    Vector x(n);
    Vector w(n);
    for (std::size_t i = 0; i < n; ++i) {
        double z = guess[i];
        double pp = 0.0;
        bool converged = false;
        for (int iter = 0; iter < 100; ++iter) {
            double p1 = pim4 * std::exp(-0.5 * z * z);
            double p2 = 0.0;
            for (std::size_t j = 1; j <= n; ++j) {
                const double p3 = p2;
                p2 = p1;
                const double jd = static_cast<double>(j);
                p1 = z * std::sqrt(2.0 / jd) * p2 - std::sqrt((jd - 1.0) / jd) * p3;
            }
            pp = std::sqrt(2.0 * nd) * p2;
            const double z1 = z;
            z = z1 - p1 / pp;
            if (std::abs(z - z1) <= 1e-15 * std::max(1.0, std::abs(z))) {
                converged = true;
                break;
            }
        }
        if (!converged) {
            throw std::runtime_error("gauss_hermite: Newton iteration failed for n=" +
                                     std::to_string(n));
        }
        x[i] = z;
        w[i] = std::exp(std::log(2.0) - 2.0 * std::log(std::abs(pp)) - z * z);
    }
    for (std::size_t i = 0; i < n / 2; ++i) {
        const double z = 0.5 * (x[n - 1 - i] - x[i]);
        const double wi = 0.5 * (w[i] + w[n - 1 - i]);
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    if (n % 2 == 1) {
        x[n / 2] = 0.0;
    }
    for (std::size_t i = 1; i < n; ++i) {
        if (!(x[i] > x[i - 1])) {
            throw std::runtime_error("gauss_hermite: nodes not distinct for n=" + std::to_string(n));
        }
    }

    GaussHermiteRule rule;
    rule.nodes.resize(n);
    rule.weights.resize(n);
    const double inv_sqrt_pi = 1.0 / std::sqrt(std::numbers::pi);
    for (std::size_t k = 0; k < n; ++k) {
        rule.nodes[k] = std::numbers::sqrt2 * x[k];
        rule.weights[k] = w[k] * inv_sqrt_pi;
    }
    return rule;
}

}  // namespace

// Rules are immutable once built, so they are cached per size.
GaussHermiteRule gauss_hermite(std::size_t n) {
    static std::mutex mutex;
    static std::map<std::size_t, GaussHermiteRule> cache;
    std::lock_guard lock(mutex);
    auto it = cache.find(n);
    if (it == cache.end()) {
        it = cache.emplace(n, build_gauss_hermite(n)).first;
    }
    return it->second;
}

double gaussian_expectation(const ScalarFn& f, const GaussHermiteRule& rule, double scale) {
    double s = 0.0;
    for (std::size_t k = 0; k < rule.size(); ++k) {
        s += rule.weights[k] * f(scale * rule.nodes[k]);
    }
    return s;
}

double bivariate_gaussian_expectation(const ScalarFn& f, const ScalarFn& h, double var_u,
                                      double var_v, double cov, const GaussHermiteRule& rule) {
    const double det = var_u * var_v - cov * cov;
    const double scale = std::max({std::abs(var_u), std::abs(var_v), 1e-300});
    if (var_u < 0.0 || var_v < 0.0 || det < -1e-12 * scale * scale) {
        throw std::domain_error("bivariate_gaussian_expectation: covariance is not PSD");
    }
    if (var_u == 0.0) {
        return f(0.0) * gaussian_expectation(h, rule, std::sqrt(var_v));
    }
    if (var_v == 0.0) {
        return h(0.0) * gaussian_expectation(f, rule, std::sqrt(var_u));
    }
    const double su = std::sqrt(var_u);
    const double sv = std::sqrt(var_v);
    double rho = cov / (su * sv);
    rho = std::clamp(rho, -1.0, 1.0);
    const double resid = 1.0 - rho * rho;
    if (resid <= 1e-14) {
        // V = (cov / var_u) U almost surely.
        const double ratio = cov / var_u;
        return gaussian_expectation([&](double u) { return f(u) * h(ratio * u); }, rule, su);
    }
    const double tail = std::sqrt(resid);
    double s = 0.0;
    for (std::size_t i = 0; i < rule.size(); ++i) {
        const double g1 = rule.nodes[i];
        const double fu = f(su * g1);
        double inner = 0.0;
        for (std::size_t j = 0; j < rule.size(); ++j) {
            inner += rule.weights[j] * h(sv * (rho * g1 + tail * rule.nodes[j]));
        }
        s += rule.weights[i] * fu * inner;
    }
    return s;
}

}  // namespace gdcert
