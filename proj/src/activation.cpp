#include "gdcert/activation.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <stdexcept>

#include "gdcert/quadrature.hpp"
#include "gdcert/rng.hpp"

namespace gdcert {

namespace {

double logistic(double x) {
    if (x >= 0.0) {
        return 1.0 / (1.0 + std::exp(-x));
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

double softplus_value(double x) {
    // max(x, 0) + ln(1 + e^{-|x|}) never overflows.
    return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
}

struct Registry {
    std::mutex mutex;
    std::map<std::string, Activation> extra;
};

Registry& registry() {
    static Registry r;
    return r;
}

double central_difference(const std::function<double(double)>& f, double x, double h) {
    return (f(x + h) - f(x - h)) / (2.0 * h);
}

}  // namespace

Activation softplus() {
    Activation act;
    act.name = "softplus";
    act.sigma = softplus_value;
    act.sigma_prime = logistic;
    act.sigma_double_prime = [](double x) {
        const double s = logistic(x);
        return s * (1.0 - s);
    };
    act.c1 = 1.0;
    act.c2 = 0.25;
    act.c3 = kSoftplusC3;
    return act;
}

Activation tanh_activation() {
    Activation act;
    act.name = "tanh";
    act.sigma = [](double x) { return std::tanh(x); };
    act.sigma_prime = [](double x) {
        const double t = std::tanh(x);
        return 1.0 - t * t;
    };
    act.sigma_double_prime = [](double x) {
        const double t = std::tanh(x);
        return -2.0 * t * (1.0 - t * t);
    };
    act.c1 = 1.0;
    act.c2 = kTanhC2;
    act.c3 = kTanhC3;
    return act;
}

Activation activation_by_name(const std::string& name) {
    if (name == "softplus") {
        return softplus();
    }
    if (name == "tanh") {
        return tanh_activation();
    }
    auto& reg = registry();
    std::lock_guard lock(reg.mutex);
    if (auto it = reg.extra.find(name); it != reg.extra.end()) {
        return it->second;
    }
    throw std::invalid_argument("unknown activation '" + name + "'");
}

void register_activation(const Activation& act) {
    if (act.name.empty() || !act.sigma || !act.sigma_prime || !act.sigma_double_prime) {
        throw std::invalid_argument("register_activation: incomplete activation");
    }
    auto& reg = registry();
    std::lock_guard lock(reg.mutex);
    reg.extra[act.name] = act;
}

std::vector<std::string> activation_names() {
    std::vector<std::string> names{"softplus", "tanh"};
    auto& reg = registry();
    std::lock_guard lock(reg.mutex);
    for (const auto& [name, act] : reg.extra) {
        if (name != "softplus" && name != "tanh") {
            names.push_back(name);
        }
    }
    return names;
}

double second_moment_at_scale(const Activation& act, double scale, std::size_t nodes) {
    const auto rule = gauss_hermite(nodes);
    return gaussian_expectation([&](double x) {
        const double s = act.sigma(x);
        return s * s;
    }, rule, scale);
}

AssumptionReport verify_assumptions(const Activation& act, std::size_t samples,
                                    std::uint64_t seed) {
    if (samples < 1000) {
        throw std::invalid_argument("verify_assumptions: need at least 1000 samples");
    }
    AssumptionReport report;
    auto scan = [&](double x) {
        report.max_abs_sigma_prime = std::max(report.max_abs_sigma_prime, std::abs(act.sigma_prime(x)));
        report.max_abs_sigma_double_prime =
            std::max(report.max_abs_sigma_double_prime, std::abs(act.sigma_double_prime(x)));
    };

    constexpr int kGridPoints = 200001;
    for (int i = 0; i < kGridPoints; ++i) {
        scan(-50.0 + 100.0 * static_cast<double>(i) / (kGridPoints - 1));
    }
    Rng rng(seed);
    for (std::size_t i = 0; i < samples; ++i) {
        scan(10.0 * rng.normal());
    }

    // Derivative consistency on 1000 points drawn from N(0, 4).
    constexpr double kStep = 1e-5;
    for (int i = 0; i < 1000; ++i) {
        const double x = 2.0 * rng.normal();
        const double d1 = act.sigma_prime(x);
        const double d2 = act.sigma_double_prime(x);
        const double e1 = std::abs(central_difference(act.sigma, x, kStep) - d1) / std::max(std::abs(d1), 1e-300);
        const double e2 =
            std::abs(central_difference(act.sigma_prime, x, kStep) - d2) /
            std::max(std::abs(d2), 1e-300);
        report.max_derivative_rel_error = std::max({report.max_derivative_rel_error, e1, e2});
    }

    report.second_moment = second_moment_at_scale(act, 1.0);

    report.c1_ok = report.max_abs_sigma_prime <= act.c1 + kAssumptionTolerance;
    report.c2_ok = report.max_abs_sigma_double_prime <= act.c2 + kAssumptionTolerance;
    report.c3_ok = report.second_moment <= act.c3 + kAssumptionTolerance;
    report.derivatives_ok = report.max_derivative_rel_error <= 1e-6;
    report.pass = report.c1_ok && report.c2_ok && report.c3_ok && report.derivatives_ok;
    return report;
}

}  // namespace gdcert
