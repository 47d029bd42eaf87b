#include "gdcert/model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "gdcert/linalg.hpp"
#include "gdcert/rng.hpp"

namespace gdcert {

namespace {

void require_compatible(const NetworkState& state, const Dataset& data) {
    if (state.d() != data.d()) {
        throw std::invalid_argument("weight dimension " + std::to_string(state.d()) +
                                    " does not match input dimension " +
                                    std::to_string(data.d()));
    }
    if (state.a.size() != state.m()) {
        throw std::invalid_argument("output weight count does not match width");
    }
}

Vector residuals(const NetworkState& state, const Activation& act, const Dataset& data) {
    Vector e = predictions(state, act, data);
    for (std::size_t i = 0; i < e.size(); ++i) {
        e[i] -= data.targets[i];
    }
    return e;
}

}  // namespace

void validate_state(const NetworkState& state) {
    if (state.m() == 0 || state.d() == 0) {
        throw std::invalid_argument("network needs m >= 1 and d >= 1");
    }
    if (state.a.size() != state.m()) {
        throw std::invalid_argument("output weight count does not match width");
    }
    for (double ar : state.a) {
        if (ar != 1.0 && ar != -1.0) {
            throw std::invalid_argument("output weights must be exactly +1 or -1");
        }
    }
}

NetworkState init_state(std::size_t m, std::size_t d, std::uint64_t seed) {
    if (m == 0 || d == 0) {
        throw std::invalid_argument("init_state: m and d must be positive");
    }
    Rng rng(seed);
    NetworkState state{Matrix(m, d), Vector(m)};
    for (double& w : state.W.data()) {
        w = rng.normal();
    }
    for (double& ar : state.a) {
        ar = rng.sign();
    }
    return state;
}

double forward(const NetworkState& state, const Activation& act, std::span<const double> x) {
    if (x.size() != state.d()) {
        throw std::invalid_argument("forward: input has dimension " + std::to_string(x.size()) +
                                    ", weights expect " + std::to_string(state.d()));
    }
    if (state.a.size() != state.m()) {
        throw std::invalid_argument("forward: output weight count does not match width");
    }
    double s = 0.0;
    for (std::size_t r = 0; r < state.m(); ++r) {
        s += state.a[r] * act.sigma(dot(state.W.row(r), x));
    }
    return s / std::sqrt(static_cast<double>(state.m()));
}

Vector predictions(const NetworkState& state, const Activation& act, const Dataset& data) {
    require_compatible(state, data);
    Vector u(data.n());
    for (std::size_t i = 0; i < data.n(); ++i) {
        u[i] = forward(state, act, data.x(i));
    }
    return u;
}

double loss_from_predictions(std::span<const double> u, std::span<const double> y) {
    if (u.size() != y.size()) {
        throw std::invalid_argument("loss: prediction/target length mismatch");
    }
    double s = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        const double e = y[i] - u[i];
        s += e * e;
    }
    return 0.5 * s;
}

double loss(const NetworkState& state, const Activation& act, const Dataset& data) {
    return loss_from_predictions(predictions(state, act, data), data.targets);
}

KhatriRaoFactors khatri_rao_factors(const NetworkState& state, const Activation& act,
                                    const Dataset& data) {
    require_compatible(state, data);
    const std::size_t m = state.m();
    const std::size_t n = data.n();
    const double scale = 1.0 / std::sqrt(static_cast<double>(m));
    KhatriRaoFactors f{Matrix(m, n), data.inputs.transposed()};
    for (std::size_t p = 0; p < m; ++p) {
        for (std::size_t q = 0; q < n; ++q) {
            f.A_factor(p, q) = scale * state.a[p] * act.sigma_prime(dot(state.W.row(p), data.x(q)));
        }
    }
    return f;
}

Matrix gradient_khatri_rao(const NetworkState& state, const Activation& act,
                           const Dataset& data) {
    const auto factors = khatri_rao_factors(state, act, data);
    const Vector e = residuals(state, act, data);
    const Vector flat = matvec(khatri_rao(factors.A_factor, factors.B_factor), e);
    // Row index r * d + l of the md vector is entry (r, l).
    Matrix g(state.m(), state.d());
    std::copy(flat.begin(), flat.end(), g.data().begin());
    return g;
}

Matrix gradient(const NetworkState& state, const Activation& act, const Dataset& data,
                GradientMode mode) {
    require_compatible(state, data);
    const Vector e = residuals(state, act, data);
    const double scale = 1.0 / std::sqrt(static_cast<double>(state.m()));
    Matrix g(state.m(), state.d());
    for (std::size_t r = 0; r < state.m(); ++r) {
        auto row = g.row(r);
        const auto w = state.W.row(r);
        for (std::size_t i = 0; i < data.n(); ++i) {
            const auto x = data.x(i);
            const double coeff = e[i] * act.sigma_prime(dot(w, x));
            for (std::size_t l = 0; l < row.size(); ++l) {
                row[l] += coeff * x[l];
            }
        }
        const double s = scale * state.a[r];
        for (double& v : row) {
            v *= s;
        }
    }
    if (mode == GradientMode::verify) {
        const Matrix kr = gradient_khatri_rao(state, act, data);
        if (max_abs(kr - g) > kGradientPathTolerance) {
            throw std::logic_error("gradient: Khatri-Rao and direct paths disagree");
        }
    }
    return g;
}

}  // namespace gdcert
