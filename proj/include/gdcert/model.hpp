#pragma once

#include <cstdint>

#include "gdcert/activation.hpp"
#include "gdcert/dataset.hpp"
#include "gdcert/matrix.hpp"

namespace gdcert {

// Input weights W (row r is w_r) and frozen output signs a_r in {-1, +1}.
// The network is f(W, x, a) = m^{-1/2} sum_r a_r sigma(w_r^T x); there are
// no input biases.
struct NetworkState {
    Matrix W;  // m x d
    Vector a;  // m

    std::size_t m() const { return W.rows(); }
    std::size_t d() const { return W.cols(); }
};

// Throws std::invalid_argument if a is not exactly +-1 or shapes disagree.
void validate_state(const NetworkState& state);

// W_ij ~ N(0, 1) drawn row by row, then a_r ~ unif{-1, +1}.
NetworkState init_state(std::size_t m, std::size_t d, std::uint64_t seed);

double forward(const NetworkState& state, const Activation& act, std::span<const double> x);
Vector predictions(const NetworkState& state, const Activation& act, const Dataset& data);
// 1/2 sum_i (y_i - u_i)^2
double loss(const NetworkState& state, const Activation& act, const Dataset& data);
double loss_from_predictions(std::span<const double> u, std::span<const double> y);

// The gradient factorizes as (A (.) B) e with e_i = u_i - y_i,
//   A_pq = m^{-1/2} a_p sigma'(w_p^T x_q)   (m x n)
//   B_kq = x_q^(k)                          (d x n)
struct KhatriRaoFactors {
    Matrix A_factor;
    Matrix B_factor;
};

KhatriRaoFactors khatri_rao_factors(const NetworkState& state, const Activation& act,
                                    const Dataset& data);

enum class GradientMode {
    fast,    // direct per-row formula
    verify,  // direct formula, cross-checked against the Khatri-Rao path
};

inline constexpr double kGradientPathTolerance = 1e-12;

// dL/dW as an m x d matrix. Row r: m^{-1/2} a_r sum_i e_i sigma'(w_r^T x_i) x_i.
// In verify mode a std::logic_error is thrown if the two paths differ by more
// than 1e-12 in any entry.
Matrix gradient(const NetworkState& state, const Activation& act, const Dataset& data,
                GradientMode mode = GradientMode::fast);

// Reshaped (A (.) B) e.
Matrix gradient_khatri_rao(const NetworkState& state, const Activation& act,
                           const Dataset& data);

}  // namespace gdcert
