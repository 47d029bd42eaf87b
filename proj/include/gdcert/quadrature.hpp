#pragma once

#include <cstddef>
#include <functional>

#include "gdcert/matrix.hpp"

namespace gdcert {

// Probabilists' Gauss-Hermite rule: sum_k weights[k] * f(nodes[k])
// approximates E[f(g)] for g ~ N(0, 1). Weights sum to one.
struct GaussHermiteRule {
    Vector nodes;
    Vector weights;
    std::size_t size() const { return nodes.size(); }
};

// Nodes via Newton iteration on the orthonormal Hermite recurrence.
GaussHermiteRule gauss_hermite(std::size_t n);

using ScalarFn = std::function<double(double)>;

// E[f(scale * g)], g ~ N(0, 1).
double gaussian_expectation(const ScalarFn& f, const GaussHermiteRule& rule, double scale = 1.0);

// E[f(U) h(V)] for (U, V) jointly normal, zero mean, with covariance
// [[var_u, cov], [cov, var_v]]. Degenerate covariances (a zero variance, or
// perfectly correlated components) fall back to the one-dimensional rule.
// Throws std::domain_error when the covariance is not PSD.
double bivariate_gaussian_expectation(const ScalarFn& f, const ScalarFn& h, double var_u,
                                      double var_v, double cov, const GaussHermiteRule& rule);

}  // namespace gdcert
