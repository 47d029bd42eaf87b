#include "gdcert/gram.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <stdexcept>

#include "gdcert/linalg.hpp"
#include "gdcert/quadrature.hpp"
#include "gdcert/rng.hpp"
#include "gdcert/theory.hpp"

namespace gdcert {

namespace {

// x_p^T x_q for all pairs.
Matrix input_products(const Dataset& data) { return gram_of_columns(data.inputs.transposed()); }

// S_rq = sigma'(w_r^T x_q)
Matrix derivative_features(const NetworkState& state, const Activation& act,
                           const Dataset& data) {
    if (state.d() != data.d()) {
        throw std::invalid_argument("empirical_gram: weight/input dimension mismatch");
    }
    Matrix s(state.m(), data.n());
    for (std::size_t r = 0; r < state.m(); ++r) {
        for (std::size_t q = 0; q < data.n(); ++q) {
            s(r, q) = act.sigma_prime(dot(state.W.row(r), data.x(q)));
        }
    }
    return s;
}

}  // namespace

std::string to_string(GramKind kind) {
    switch (kind) {
        case GramKind::empirical:
            return "empirical";
        case GramKind::monte_carlo:
            return "monte_carlo";
        case GramKind::quadrature:
            return "quadrature";
    }
    return "unknown";
}

double GramEstimate::aggregate_standard_error() const {
    return standard_errors.empty() ? 0.0 : norm2(standard_errors.data());
}

std::string dataset_fingerprint(const Dataset& data) {
    std::uint64_t h = mix64(data.n() * 1315423911ULL + data.d());
    auto absorb = [&h](double v) {
        std::uint64_t bits = 0;
        std::memcpy(&bits, &v, sizeof bits);
        h = mix64(h ^ bits);
    };
    for (double v : data.inputs.data()) {
        absorb(v);
    }
    for (double v : data.targets) {
        absorb(v);
    }
    static constexpr char kHex[] = "0123456789abcdef";
    std::string out(16, '0');
    for (int k = 15; k >= 0; --k) {
        out[static_cast<std::size_t>(k)] = kHex[h & 0xF];
        h >>= 4;
    }
    return out;
}

Matrix empirical_gram_matrix(const NetworkState& state, const Activation& act,
                             const Dataset& data) {
    const Matrix s = derivative_features(state, act, data);
    const Matrix xx = input_products(data);
    Matrix c = gram_of_columns(s);
    const double inv_m = 1.0 / static_cast<double>(state.m());
    for (std::size_t p = 0; p < data.n(); ++p) {
        for (std::size_t q = 0; q < data.n(); ++q) {
            c(p, q) *= inv_m * xx(p, q);
        }
    }
    return c;
}

GramEstimate empirical_gram(const NetworkState& state, const Activation& act,
                            const Dataset& data) {
    GramEstimate est;
    est.matrix = empirical_gram_matrix(state, act, data);
    est.lambda_min = lambda_min_symmetric(est.matrix).lambda_min;
    est.kind = GramKind::empirical;
    est.size_parameter = state.m();
    est.dataset_id = dataset_fingerprint(data);
    return est;
}

Matrix empirical_gram_khatri_rao(const NetworkState& state, const Activation& act,
                                 const Dataset& data) {
    const auto f = khatri_rao_factors(state, act, data);
    return gram_of_columns(khatri_rao(f.A_factor, f.B_factor));
}

GramEstimate hinfty_monte_carlo(const Dataset& data, const Activation& act, std::size_t samples,
                                std::uint64_t seed) {
    if (samples < 1000) {
        throw std::invalid_argument("hinfty_monte_carlo: need at least 1000 samples");
    }
    const std::size_t n = data.n();
    const Matrix xx = input_products(data);
    Matrix sum(n, n);
    Matrix sum_sq(n, n);
    Vector z(data.d());
    Vector s(n);
    Rng rng(seed);
    for (std::size_t k = 0; k < samples; ++k) {
        for (double& v : z) {
            v = rng.normal();
        }
        for (std::size_t p = 0; p < n; ++p) {
            s[p] = act.sigma_prime(dot(z, data.x(p)));
        }
        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p; q < n; ++q) {
                const double v = s[p] * s[q];
                sum(p, q) += v;
                sum_sq(p, q) += v * v;
            }
        }
    }
    const double count = static_cast<double>(samples);
    GramEstimate est;
    est.matrix = Matrix(n, n);
    est.standard_errors = Matrix(n, n);
    for (std::size_t p = 0; p < n; ++p) {
        for (std::size_t q = p; q < n; ++q) {
            const double mean = sum(p, q) / count;
            const double var = std::max(0.0, (sum_sq(p, q) / count - mean * mean) * count / (count - 1.0));
            const double value = mean * xx(p, q);
            const double se = std::sqrt(var / count) * std::abs(xx(p, q));
            est.matrix(p, q) = est.matrix(q, p) = value;
            est.standard_errors(p, q) = est.standard_errors(q, p) = se;
        }
    }
    est.lambda_min = lambda_min_symmetric(est.matrix).lambda_min;
    est.kind = GramKind::monte_carlo;
    est.size_parameter = samples;
    est.seed = seed;
    est.dataset_id = dataset_fingerprint(data);
    return est;
}

GramEstimate hinfty_quadrature(const Dataset& data, const Activation& act, std::size_t nodes) {
    if (nodes < 20) {
        throw std::invalid_argument("hinfty_quadrature: need at least 20 nodes per axis");
    }
    const auto rule = gauss_hermite(nodes);
    const std::size_t n = data.n();
    const Matrix xx = input_products(data);
    GramEstimate est;
    est.matrix = Matrix(n, n);
    for (std::size_t p = 0; p < n; ++p) {
        for (std::size_t q = p; q < n; ++q) {
            if (xx(p, q) == 0.0) {
                continue;
            }
            double expectation = 0.0;
            if (p == q) {
                expectation = gaussian_expectation([&](double u) {
                    const double d = act.sigma_prime(u);
                    return d * d;
                }, rule, std::sqrt(xx(p, p)));
            } else {
                expectation = bivariate_gaussian_expectation(act.sigma_prime, act.sigma_prime,
                                                             xx(p, p), xx(q, q), xx(p, q), rule);
            }
            est.matrix(p, q) = est.matrix(q, p) = expectation * xx(p, q);
        }
    }
    est.lambda_min = lambda_min_symmetric(est.matrix).lambda_min;
    est.kind = GramKind::quadrature;
    est.size_parameter = nodes;
    est.dataset_id = dataset_fingerprint(data);
    return est;
}

double lambda0(const Dataset& data, const Activation& act, std::size_t nodes) {
    const double value = hinfty_quadrature(data, act, nodes).lambda_min;
    if (!(value > 0.0)) {
        throw std::runtime_error(
            value > -kPsdTolerance
                ? "lambda0: least eigenvalue of H-infinity is numerically zero "
                  "(near-duplicate inputs or a zero input)"
                : "lambda0: H-infinity has a negative eigenvalue (estimator failure)");
    }
    return value;
}

PositivityResult positivity_trial(const Dataset& data, const Activation& act, std::size_t m,
                                  std::size_t trials, double delta, std::uint64_t seed,
                                  bool require_threshold) {
    if (trials == 0) {
        throw std::invalid_argument("positivity_trial: trials must be positive");
    }
    PositivityResult res;
    res.trials = trials;
    res.lambda0 = lambda0(data, act);
    res.m_threshold = m_threshold(data.n(), delta, act.c1, act.c2, res.lambda0);
    if (require_threshold && m < res.m_threshold) {
        throw std::invalid_argument("positivity_trial: m = " + std::to_string(m) +
                                    " is below the width threshold " +
                                    std::to_string(res.m_threshold));
    }
    res.min_lambda = std::numeric_limits<double>::infinity();
    double total = 0.0;
    for (std::size_t j = 0; j < trials; ++j) {
        const auto state = init_state(m, data.d(), derive_seed(seed, m, j));
        const double lm = empirical_gram(state, act, data).lambda_min;
        res.min_lambda = std::min(res.min_lambda, lm);
        total += lm;
        if (lm > 0.75 * res.lambda0) {
            ++res.successes;
        }
    }
    res.mean_lambda = total / static_cast<double>(trials);
    res.success_rate = static_cast<double>(res.successes) / static_cast<double>(trials);
    res.guaranteed_rate = std::max(0.0, 1.0 - static_cast<double>(data.n()) * delta);
    const double p = res.guaranteed_rate;
    res.required_rate = p - 3.0 * std::sqrt(p * (1.0 - p) / static_cast<double>(trials));
    res.ok = res.success_rate >= res.required_rate;
    return res;
}

}  // namespace gdcert
