#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace gdcert {

// A smooth activation together with the constants it is certified against:
//   |sigma'(x)| <= c1,  |sigma''(x)| <= c2 for all real x,
//   E[sigma(w^T x)^2] <= c3 for w ~ N(0, I_d) and every ||x|| <= 1.
struct Activation {
    std::string name;
    std::function<double(double)> sigma;
    std::function<double(double)> sigma_prime;
    std::function<double(double)> sigma_double_prime;
    double c1 = 0.0;
    double c2 = 0.0;
    double c3 = 0.0;
};

// E[ln(1 + e^g)^2], g ~ N(0, 1). Frozen from an independent 40-digit
// adaptive quadrature; the in-house Gauss-Hermite path reproduces it in tests.
inline constexpr double kSoftplusC3 = 0.92124590885930027868;
// E[tanh(g)^2], g ~ N(0, 1), frozen the same way.
inline constexpr double kTanhC3 = 0.39429449039784117442;
// max |tanh''| = 4 / (3 sqrt 3), attained at tanh(x) = 1/sqrt 3.
inline constexpr double kTanhC2 = 0.76980035891950101935;

// ln(1 + e^x) with logistic derivatives. c1 = 1, c2 = 1/4.
Activation softplus();
Activation tanh_activation();

// Name lookup over the built-in activations plus anything registered.
// Throws std::invalid_argument for unknown names.
Activation activation_by_name(const std::string& name);
// Adds (or replaces) a user activation; it still has to pass verify_assumptions.
void register_activation(const Activation& act);
std::vector<std::string> activation_names();

struct AssumptionReport {
    double max_abs_sigma_prime = 0.0;
    double max_abs_sigma_double_prime = 0.0;
    // Gauss-Hermite E[sigma(g)^2] at unit scale.
    double second_moment = 0.0;
    // Worst central-difference relative error of sigma' and sigma''.
    double max_derivative_rel_error = 0.0;
    bool c1_ok = false;
    bool c2_ok = false;
    bool c3_ok = false;
    bool derivatives_ok = false;
    bool pass = false;
};

inline constexpr double kAssumptionTolerance = 1e-12;

// Scans a dense grid on [-50, 50] plus `samples` Gaussian draws for the
// derivative bounds, evaluates E[sigma(g)^2] by quadrature and checks the
// analytic derivatives against central differences (step 1e-5, rel 1e-6).
// Requires samples >= 1000.
AssumptionReport verify_assumptions(const Activation& act, std::size_t samples,
                                    std::uint64_t seed);

// E[sigma(s g)^2], the scale-s second moment used by assumption (b).
double second_moment_at_scale(const Activation& act, double scale, std::size_t nodes = 200);

}  // namespace gdcert
