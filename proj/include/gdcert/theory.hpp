#pragma once

#include <cstdint>
#include <string>

#include "gdcert/activation.hpp"
#include "gdcert/dataset.hpp"
#include "gdcert/matrix.hpp"

namespace gdcert {

// 64 c1^2 c2^2 n^2 ln(2n/delta) / lambda0^2, before rounding.
double m_threshold_bound(std::size_t n, double delta, double c1, double c2, double lambda0);

// Smallest integer strictly greater than m_threshold_bound. Throws
// std::invalid_argument for lambda0 <= 0, delta outside (0, 1) or n == 0.
std::uint64_t m_threshold(std::size_t n, double delta, double c1, double c2, double lambda0);

struct TheoremReport {
    std::size_t n = 0;
    double delta = 0.0;
    double c1 = 0.0;
    double c2 = 0.0;
    double c3 = 0.0;
    double kappa = 0.0;
    double lambda0 = 0.0;
    std::uint64_t m_threshold = 0;
    double D = 0.0;            // sqrt(kappa^2 + c3)
    double delta_prime = 0.0;  // n delta + D / (4 c1 c2 ln(2n/delta))
    double prob_lower_bound = 0.0;
    bool valid = false;        // delta_prime < 1
};

TheoremReport theorem_report(std::size_t n, double delta, const Activation& act, double kappa,
                             double lambda0);

// "key = value" lines, field names as in TheoremReport.
std::string format_theorem_report(const TheoremReport& report);

// Built-in L-Lipschitz functions of a standard Gaussian vector X in R^dim,
// each multiplied by `scale` (so L = |scale|):
//   coordinate: X_1          (mean 0)
//   norm:       ||X||        (mean sqrt 2 Gamma((dim+1)/2) / Gamma(dim/2))
//   dot:        u^T X with u = (1, ..., 1)/sqrt(dim)   (mean 0)
enum class ConcentrationFamily { coordinate, norm, dot };

// Throws std::invalid_argument for an unknown tag.
ConcentrationFamily parse_concentration_family(const std::string& tag);
std::string to_string(ConcentrationFamily family);

struct ConcentrationResult {
    double empirical_prob = 0.0;  // P[|f(X) - E f(X)| >= t], estimated
    double bound = 0.0;           // 2 exp(-t^2 / (2 L^2))
    double lipschitz = 0.0;
    double mean = 0.0;
    double std_error = 0.0;       // binomial SE at p = min(bound, 1)
    std::size_t trials = 0;
    bool ok = false;              // empirical <= bound + 3 SE
};

ConcentrationResult concentration_check(ConcentrationFamily family, double scale,
                                        std::size_t dim, double t, std::size_t trials,
                                        std::uint64_t seed);

struct ProjectionResult {
    Vector w;
    std::size_t attempts = 0;
};

// Samples w ~ N(0, I_d) until the projections w^T x_i are pairwise separated
// by more than 1e-12 max_i |w^T x_i| (and 1e-300 absolutely). Throws
// std::runtime_error once max_attempts draws have failed.
ProjectionResult distinct_projection(const Dataset& data, std::uint64_t seed,
                                     std::size_t max_attempts);

}  // namespace gdcert
