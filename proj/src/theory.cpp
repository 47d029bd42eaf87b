#include "gdcert/theory.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "gdcert/io.hpp"
#include "gdcert/rng.hpp"

namespace gdcert {

double m_threshold_bound(std::size_t n, double delta, double c1, double c2, double lambda0) {
    if (n == 0) {
        throw std::invalid_argument("m_threshold: n must be positive");
    }
    if (!(delta > 0.0 && delta < 1.0)) {
        throw std::invalid_argument("m_threshold: delta must lie in (0, 1)");
    }
    if (!(lambda0 > 0.0)) {
        throw std::invalid_argument("m_threshold: lambda0 must be positive");
    }
    const double nd = static_cast<double>(n);
    return 64.0 * c1 * c1 * c2 * c2 * nd * nd * std::log(2.0 * nd / delta) / (lambda0 * lambda0);
}

std::uint64_t m_threshold(std::size_t n, double delta, double c1, double c2, double lambda0) {
    const double bound = m_threshold_bound(n, delta, c1, c2, lambda0);
    if (!(bound < 9.0e18)) {
        throw std::overflow_error("m_threshold: width bound does not fit in 64 bits");
    }
    return static_cast<std::uint64_t>(std::floor(bound)) + 1;
}

TheoremReport theorem_report(std::size_t n, double delta, const Activation& act, double kappa,
                             double lambda0) {
    TheoremReport r;
    r.n = n;
    r.delta = delta;
    r.c1 = act.c1;
    r.c2 = act.c2;
    r.c3 = act.c3;
    r.kappa = kappa;
    r.lambda0 = lambda0;
    r.m_threshold = m_threshold(n, delta, act.c1, act.c2, lambda0);
    r.D = std::sqrt(kappa * kappa + act.c3);
    const double log_term = std::log(2.0 * static_cast<double>(n) / delta);
    r.delta_prime = static_cast<double>(n) * delta + r.D / (4.0 * act.c1 * act.c2 * log_term);
    r.prob_lower_bound = 1.0 - r.delta_prime;
    r.valid = r.delta_prime < 1.0;
    return r;
}

std::string format_theorem_report(const TheoremReport& r) {
    std::ostringstream out;
    out << "n = " << r.n << '\n'
        << "delta = " << format_double(r.delta) << '\n'
        << "c1 = " << format_double(r.c1) << '\n'
        << "c2 = " << format_double(r.c2) << '\n'
        << "c3 = " << format_double(r.c3) << '\n'
        << "kappa = " << format_double(r.kappa) << '\n'
        << "lambda0 = " << format_double(r.lambda0) << '\n'
        << "m_threshold = " << r.m_threshold << '\n'
        << "D = " << format_double(r.D) << '\n'
        << "delta_prime = " << format_double(r.delta_prime) << '\n'
        << "prob_lower_bound = " << format_double(r.prob_lower_bound) << '\n'
        << "valid = " << (r.valid ? "true" : "false") << '\n';
    return out.str();
}

ConcentrationFamily parse_concentration_family(const std::string& tag) {
    if (tag == "coordinate") {
        return ConcentrationFamily::coordinate;
    }
    if (tag == "norm") {
        return ConcentrationFamily::norm;
    }
    if (tag == "dot") {
        return ConcentrationFamily::dot;
    }
    throw std::invalid_argument("unknown concentration family '" + tag + "'");
}

std::string to_string(ConcentrationFamily family) {
    switch (family) {
        case ConcentrationFamily::coordinate:
            return "coordinate";
        case ConcentrationFamily::norm:
            return "norm";
        case ConcentrationFamily::dot:
            return "dot";
    }
    return "unknown";
}

ConcentrationResult concentration_check(ConcentrationFamily family, double scale,
                                        std::size_t dim, double t, std::size_t trials,
                                        std::uint64_t seed) {
    if (dim == 0 || trials == 0) {
        throw std::invalid_argument("concentration_check: dim and trials must be positive");
    }
    if (!(t >= 0.0) || scale == 0.0) {
        throw std::invalid_argument("concentration_check: need t >= 0 and a nonzero scale");
    }
    ConcentrationResult res;
    res.trials = trials;
    res.lipschitz = std::abs(scale);
    const double dd = static_cast<double>(dim);
    double base_mean = 0.0;
    if (family == ConcentrationFamily::norm) {
        base_mean = std::numbers::sqrt2 *
                    std::exp(std::lgamma((dd + 1.0) / 2.0) - std::lgamma(dd / 2.0));
    }
    res.mean = scale * base_mean;

    Rng rng(seed);
    Vector x(dim);
    const double inv_sqrt_dim = 1.0 / std::sqrt(dd);
    std::size_t hits = 0;
    for (std::size_t k = 0; k < trials; ++k) {
        for (double& v : x) {
            v = rng.normal();
        }
        double f = 0.0;
        switch (family) {
            case ConcentrationFamily::coordinate:
                f = x[0];
                break;
            case ConcentrationFamily::norm:
                f = norm2(x);
                break;
            case ConcentrationFamily::dot:
                for (double v : x) {
                    f += v;
                }
                f *= inv_sqrt_dim;
                break;
        }
        if (std::abs(scale * f - res.mean) >= t) {
            ++hits;
        }
    }
    res.empirical_prob = static_cast<double>(hits) / static_cast<double>(trials);
    res.bound = 2.0 * std::exp(-t * t / (2.0 * res.lipschitz * res.lipschitz));
    const double p = std::min(res.bound, 1.0);
    res.std_error = std::sqrt(p * (1.0 - p) / static_cast<double>(trials));
    res.ok = res.empirical_prob <= res.bound + 3.0 * res.std_error;
    return res;
}

ProjectionResult distinct_projection(const Dataset& data, std::uint64_t seed,
                                     std::size_t max_attempts) {
    if (max_attempts == 0) {
        throw std::invalid_argument("distinct_projection: max_attempts must be positive");
    }
    Rng rng(seed);
    ProjectionResult res;
    res.w.resize(data.d());
    Vector proj(data.n());
    for (res.attempts = 1; res.attempts <= max_attempts; ++res.attempts) {
        for (double& v : res.w) {
            v = rng.normal();
        }
        double largest = 0.0;
        for (std::size_t i = 0; i < data.n(); ++i) {
            proj[i] = dot(res.w, data.x(i));
            largest = std::max(largest, std::abs(proj[i]));
        }
        std::sort(proj.begin(), proj.end());
        const double min_gap = std::max(1e-12 * largest, 1e-300);
        bool separated = true;
        for (std::size_t i = 1; i < proj.size(); ++i) {
            if (!(proj[i] - proj[i - 1] > min_gap)) {
                separated = false;
                break;
            }
        }
        if (separated) {
            return res;
        }
    }
    throw std::runtime_error("distinct_projection: no separating direction in " +
                             std::to_string(max_attempts) +
                             " attempts (inputs nearly coincide at floating precision)");
}

}  // namespace gdcert
