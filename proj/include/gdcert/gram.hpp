#pragma once

#include <cstdint>
#include <string>

#include "gdcert/activation.hpp"
#include "gdcert/dataset.hpp"
#include "gdcert/matrix.hpp"
#include "gdcert/model.hpp"

namespace gdcert {

enum class GramKind { empirical, monte_carlo, quadrature };

std::string to_string(GramKind kind);

// An n x n Gram object (limiting H-infinity or the empirical C[W]) with its
// least eigenvalue and where it came from.
struct GramEstimate {
    Matrix matrix;
    double lambda_min = 0.0;
    GramKind kind = GramKind::quadrature;
    // Width m (empirical), sample count M (monte_carlo) or nodes per axis
    // (quadrature).
    std::size_t size_parameter = 0;
    std::uint64_t seed = 0;
    std::string dataset_id;
    // Per-entry standard errors; monte_carlo only.
    Matrix standard_errors;

    // sqrt(sum_pq se_pq^2), the scale of ||H_mc - H||_F.
    double aggregate_standard_error() const;
};

inline constexpr std::size_t kDefaultQuadratureNodes = 60;

// Content fingerprint (hex) used as GramEstimate::dataset_id.
std::string dataset_fingerprint(const Dataset& data);

// C[W]_pq = (1/m) sum_r sigma'(w_r^T x_p) sigma'(w_r^T x_q) * x_p^T x_q.
GramEstimate empirical_gram(const NetworkState& state, const Activation& act,
                            const Dataset& data);
// The C[W] matrix alone, without the eigensolve.
Matrix empirical_gram_matrix(const NetworkState& state, const Activation& act,
                             const Dataset& data);
// (A (.) B)^T (A (.) B) from the gradient factors; equals C[W] because a_r^2 = 1.
Matrix empirical_gram_khatri_rao(const NetworkState& state, const Activation& act,
                                 const Dataset& data);

// H_pq = E_z[sigma'(z^T x_p) sigma'(z^T x_q)] * x_p^T x_q, z ~ N(0, I_d),
// estimated from M shared draws of z (so the estimate is itself PSD).
GramEstimate hinfty_monte_carlo(const Dataset& data, const Activation& act, std::size_t samples,
                                std::uint64_t seed);

// Same matrix by Gauss-Hermite quadrature: (z^T x_p, z^T x_q) is bivariate
// normal with covariance [[|x_p|^2, x_p^T x_q], [x_p^T x_q, |x_q|^2]].
GramEstimate hinfty_quadrature(const Dataset& data, const Activation& act,
                               std::size_t nodes = kDefaultQuadratureNodes);

// lambda_min of the quadrature H-infinity. Throws std::runtime_error unless
// the result is strictly positive.
double lambda0(const Dataset& data, const Activation& act,
               std::size_t nodes = kDefaultQuadratureNodes);

struct PositivityResult {
    std::size_t trials = 0;
    std::size_t successes = 0;  // lambda_min(C[W(0)]) > 3/4 lambda0
    double success_rate = 0.0;
    double lambda0 = 0.0;
    std::size_t m_threshold = 0;
    double guaranteed_rate = 0.0;  // 1 - n delta
    double required_rate = 0.0;    // guaranteed_rate - 3 binomial standard errors
    double min_lambda = 0.0;
    double mean_lambda = 0.0;
    bool ok = false;
};

// Draws `trials` independent initializations at width m and counts how often
// lambda_min(C[W(0)]) exceeds 3/4 lambda0. Throws std::invalid_argument when m
// is not above the width threshold for delta, unless `require_threshold` is
// false.
PositivityResult positivity_trial(const Dataset& data, const Activation& act, std::size_t m,
                                  std::size_t trials, double delta, std::uint64_t seed,
                                  bool require_threshold = true);

}  // namespace gdcert
