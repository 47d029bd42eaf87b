#pragma once

#include "gdcert/activation.hpp"
#include "gdcert/dataset.hpp"
#include "gdcert/matrix.hpp"
#include "gdcert/model.hpp"

namespace gdcert {

// Random-feature matrix for last-layer-only training:
// A_pq = sigma(w_p^T x_q + b_p), m x n.
struct FeatureMatrix {
    Matrix A;
    Vector biases;
};

FeatureMatrix feature_matrix(const NetworkState& state, const Activation& act,
                             const Dataset& data, const Vector& biases);

// Extreme eigenvalues of A^T A, taken as squared singular values of A so
// that they keep relative accuracy when A^T A is badly conditioned.
struct Invertibility {
    double lambda_min = 0.0;
    double lambda_max = 0.0;
    double frobenius = 0.0;   // ||A^T A||_F
    // Numerical rank rule: sigma_min(A) > max(m, n) * eps * sigma_max(A).
    bool invertible = false;
    double condition_number() const;
};

// Throws std::invalid_argument when m < n.
Invertibility gram_invertibility(const FeatureMatrix& features);

struct LastLayerFit {
    Vector a_star;          // output weights, m entries
    double residual = 0.0;  // sum_i (y_i - f_i)^2
    double condition_number = 0.0;
    int refinement_steps = 0;
};

// Minimum-norm output weights with f_i = m^{-1/2} sum_r a_r A_ri = y_i,
// from the one-sided Jacobi SVD of A plus a few rounds of iterative
// refinement. Throws std::runtime_error when A^T A is singular.
LastLayerFit fit_last_layer(const FeatureMatrix& features, const Dataset& data);

// f_i = m^{-1/2} (A^T a)_i
Vector lazy_predictions(const FeatureMatrix& features, const Vector& a);

// dL/da_r = -m^{-1/2} sum_i (y_i - f_i) A_ri
Vector output_gradient(const FeatureMatrix& features, const Vector& a, const Dataset& data);

}  // namespace gdcert
