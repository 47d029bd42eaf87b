#include <algorithm>
#include <cmath>
#include <string>

#include "gdcert/gram.hpp"
#include "gdcert/harness.hpp"
#include "gdcert/io.hpp"
#include "gdcert/lazy.hpp"
#include "gdcert/linalg.hpp"
#include "gdcert/model.hpp"
#include "gdcert/rng.hpp"
#include "gdcert/theory.hpp"

namespace gdcert {

namespace {

constexpr double kFdStep = 1e-5;
constexpr double kFdTolerance = 1e-6;

std::size_t uniform_index(Rng& rng, std::size_t lo, std::size_t hi) {
    return lo + static_cast<std::size_t>(rng.next_u64() % (hi - lo + 1));
}

Dataset random_dataset(std::size_t n, std::size_t d, std::uint64_t seed) {
    return gen_dataset(DatasetKind::sphere_random, n, d, 1.0, seed);
}

// Random symmetric PSD matrix Q diag(l) Q^T with a random spectrum.
Matrix random_psd(std::size_t n, Rng& rng) {
    Matrix g(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) g(i, j) = rng.normal();
    }
    Matrix s = gram_of_columns(g);
    s *= 1.0 / static_cast<double>(n);
    return s;
}

SuiteResult activation_suite(const VerifyOptions& opt) {
    SuiteResult r{"activation_assumptions", true, ""};
    Activation sp = softplus();
    if (opt.declared_softplus_c2) sp.c2 = *opt.declared_softplus_c2;
    for (const Activation& act : {sp, tanh_activation()}) {
        const AssumptionReport rep = verify_assumptions(act, 100000, opt.seed);
        r.passed = r.passed && rep.pass;
        r.detail += act.name + ": max|s'| = " + format_double(rep.max_abs_sigma_prime) +
                    ", max|s''| = " + format_double(rep.max_abs_sigma_double_prime) +
                    ", E[s^2] = " + format_double(rep.second_moment) +
                    (rep.pass ? " ok; " : " FAIL; ");
    }
    return r;
}

SuiteResult gradient_fd_suite(const VerifyOptions& opt) {
    SuiteResult r{"gradient_finite_difference", true, ""};
    const Activation act = softplus();
    Rng rng(derive_seed(opt.seed, 1));
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t m = uniform_index(rng, 1, 16);
        const std::size_t d = uniform_index(rng, 1, 8);
        // Only two distinct points fit on the unit sphere in one dimension.
        const std::size_t n = uniform_index(rng, 1, d == 1 ? 2 : 8);
        const Dataset data = random_dataset(n, d, rng.next_u64());
        NetworkState state = init_state(m, d, rng.next_u64());
        Matrix g = gradient(state, act, data);
        for (double& v : g.data()) v += opt.gradient_perturbation;
        Matrix fd(m, d);
        for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t k = 0; k < d; ++k) {
                const double orig = state.W(i, k);
                state.W(i, k) = orig + kFdStep;
                const double lp = loss(state, act, data);
                state.W(i, k) = orig - kFdStep;
                const double lm = loss(state, act, data);
                state.W(i, k) = orig;
                fd(i, k) = (lp - lm) / (2.0 * kFdStep);
            }
        }
        const double scale = std::max(max_abs(g), 1e-300);
        worst = std::max(worst, max_abs(fd - g) / scale);
    }
    r.passed = worst <= kFdTolerance;
    r.detail = "max relative error " + format_double(worst) + " over 100 instances";
    return r;
}

SuiteResult khatri_rao_suite(const VerifyOptions& opt) {
    SuiteResult r{"khatri_rao_two_path", true, ""};
    const Activation act = softplus();
    Rng rng(derive_seed(opt.seed, 2));
    double worst_grad = 0.0;
    double worst_gram = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t m = uniform_index(rng, 1, 16);
        const std::size_t d = uniform_index(rng, 2, 8);
        const std::size_t n = uniform_index(rng, 1, 8);
        const Dataset data = random_dataset(n, d, rng.next_u64());
        const NetworkState state = init_state(m, d, rng.next_u64());
        worst_grad = std::max(worst_grad, max_abs((gradient(state, act, data) -
                                                   gradient_khatri_rao(state, act, data))));
        worst_gram = std::max(worst_gram, max_abs((empirical_gram_matrix(state, act, data) -
                                                   empirical_gram_khatri_rao(state, act, data))));
    }
    r.passed = worst_grad <= kGradientPathTolerance && worst_gram <= kGradientPathTolerance;
    r.detail = "max |direct - KR| gradient " + format_double(worst_grad) + ", gram " +
               format_double(worst_gram);
    return r;
}

SuiteResult perturbation_suite(const VerifyOptions& opt) {
    SuiteResult r{"perturbation_lemmas", true, ""};
    Rng rng(derive_seed(opt.seed, 3));
    std::size_t weyl_fail = 0;
    std::size_t frob_fail = 0;
    const std::size_t pairs = 1000;
    for (std::size_t t = 0; t < pairs; ++t) {
        const std::size_t n = uniform_index(rng, 1, 8);
        const Matrix b = random_psd(n, rng);
        // Nearby PSD partner for the entrywise lemma, an unrelated one for Weyl.
        const Matrix a_far = random_psd(n, rng);
        if (!check_weyl_l2(a_far, b)) ++weyl_fail;
        const double eps = std::pow(10.0, rng.uniform(-6.0, -1.0));
        Matrix e = random_psd(n, rng);
        const double emax = std::max(max_abs(e), 1e-300);
        e *= 0.999 * eps / (static_cast<double>(n * n) * emax);
        if (!check_frobenius_entrywise(b + e, b, eps)) ++frob_fail;
    }
    r.passed = weyl_fail == 0 && frob_fail == 0;
    r.detail = std::to_string(pairs) + " pairs: weyl violations " + std::to_string(weyl_fail) +
               ", entrywise violations " + std::to_string(frob_fail);
    return r;
}

SuiteResult gram_mc_suite(const VerifyOptions& opt) {
    SuiteResult r{"gram_mc_vs_quadrature", true, ""};
    const Activation act = softplus();
    Rng rng(derive_seed(opt.seed, 4));
    const std::size_t datasets = 5;
    std::size_t within = 0;
    double worst_ratio = 0.0;
    for (std::size_t t = 0; t < datasets; ++t) {
        const std::size_t n = uniform_index(rng, 2, 6);
        const std::size_t d = uniform_index(rng, 2, 5);
        const Dataset data = random_dataset(n, d, rng.next_u64());
        const GramEstimate quad = hinfty_quadrature(data, act);
        const GramEstimate mc = hinfty_monte_carlo(data, act, 20000, rng.next_u64());
        const double ratio = frobenius_norm(mc.matrix - quad.matrix) /
                             std::max(mc.aggregate_standard_error(), 1e-300);
        worst_ratio = std::max(worst_ratio, ratio);
        if (ratio <= 3.0) ++within;
    }
    r.passed = within + 1 >= datasets;
    r.detail = std::to_string(within) + "/" + std::to_string(datasets) +
               " within 3 aggregate SE, worst ratio " + format_double(worst_ratio);
    return r;
}

SuiteResult lipschitz_suite(const VerifyOptions& opt) {
    SuiteResult r{"gram_lipschitz", true, ""};
    const Dataset data = random_dataset(4, 3, derive_seed(opt.seed, 5));
    const LipschitzResult res = gram_lipschitz_check(softplus(), data, 64, 1000, derive_seed(opt.seed, 6));
    r.passed = res.ok;
    r.detail = "max normalized ratio " + format_double(res.max_ratio) + " over " +
               std::to_string(res.pairs_evaluated) + " pairs";
    return r;
}

SuiteResult concentration_suite(const VerifyOptions& opt) {
    SuiteResult r{"concentration", true, ""};
    std::size_t checks = 0;
    std::size_t fails = 0;
    for (ConcentrationFamily fam : {ConcentrationFamily::coordinate, ConcentrationFamily::norm,
                                    ConcentrationFamily::dot}) {
        for (double t : {0.5, 1.0, 2.0, 3.0}) {
            const auto res = concentration_check(fam, 1.0, 8, t, 20000,
                                                 derive_seed(opt.seed, 7, checks));
            ++checks;
            if (!res.ok) ++fails;
        }
    }
    r.passed = fails == 0;
    r.detail = std::to_string(checks - fails) + "/" + std::to_string(checks) + " tail checks within bound";
    return r;
}

SuiteResult projection_suite(const VerifyOptions& opt) {
    SuiteResult r{"distinct_projection", true, ""};
    Rng rng(derive_seed(opt.seed, 8));
    const std::size_t datasets = 200;
    std::size_t first_try = 0;
    for (std::size_t t = 0; t < datasets; ++t) {
        const std::size_t n = uniform_index(rng, 2, 10);
        const std::size_t d = uniform_index(rng, 2, 6);
        const Dataset data = random_dataset(n, d, rng.next_u64());
        const ProjectionResult res = distinct_projection(data, rng.next_u64(), 100);
        if (res.attempts == 1) ++first_try;
    }
    r.passed = first_try + 1 >= datasets;
    r.detail = std::to_string(first_try) + "/" + std::to_string(datasets) + " succeeded on the first draw";
    return r;
}

SuiteResult lazy_suite(const VerifyOptions& opt) {
    SuiteResult r{"lazy_invertibility", true, ""};
    const Activation act = softplus();
    Rng rng(derive_seed(opt.seed, 9));
    std::size_t invertible = 0;
    double worst_residual = 0.0;
    double worst_grad = 0.0;
    const std::size_t trials = 50;
    for (std::size_t t = 0; t < trials; ++t) {
        const std::size_t n = uniform_index(rng, 2, 8);
        const std::size_t d = 8;
        const Dataset data = random_dataset(n, d, rng.next_u64());
        const NetworkState state = init_state(n, d, rng.next_u64());
        const FeatureMatrix f = feature_matrix(state, act, data, Vector(n, 0.0));
        if (!gram_invertibility(f).invertible) continue;
        ++invertible;
        const LastLayerFit fit = fit_last_layer(f, data);
        double ysq = 0.0;
        for (double y : data.targets) ysq += y * y;
        worst_residual = std::max(worst_residual, fit.residual / ysq);
        worst_grad = std::max(worst_grad, norm2(output_gradient(f, fit.a_star, data)));
    }
    r.passed = invertible == trials && worst_residual <= 1e-20 && worst_grad <= 1e-10;
    r.detail = std::to_string(invertible) + "/" + std::to_string(trials) +
               " invertible, max relative residual " + format_double(worst_residual) +
               ", max gradient norm " + format_double(worst_grad);
    return r;
}

template <class Fn>
SuiteResult guarded(const std::string& name, Fn&& fn) {
    try {
        return fn();
    } catch (const std::exception& e) {
        return {name, false, std::string("error: ") + e.what()};
    }
}

}  // namespace

bool VerifyReport::all_passed() const {
    return std::all_of(suites.begin(), suites.end(), [](const SuiteResult& s) { return s.passed; });
}

VerifyReport run_verify(const VerifyOptions& options) {
    VerifyReport report;
    report.suites.push_back(guarded("activation_assumptions", [&] { return activation_suite(options); }));
    report.suites.push_back(guarded("gradient_finite_difference", [&] { return gradient_fd_suite(options); }));
    report.suites.push_back(guarded("khatri_rao_two_path", [&] { return khatri_rao_suite(options); }));
    report.suites.push_back(guarded("perturbation_lemmas", [&] { return perturbation_suite(options); }));
    report.suites.push_back(guarded("gram_mc_vs_quadrature", [&] { return gram_mc_suite(options); }));
    report.suites.push_back(guarded("gram_lipschitz", [&] { return lipschitz_suite(options); }));
    report.suites.push_back(guarded("concentration", [&] { return concentration_suite(options); }));
    report.suites.push_back(guarded("distinct_projection", [&] { return projection_suite(options); }));
    report.suites.push_back(guarded("lazy_invertibility", [&] { return lazy_suite(options); }));
    return report;
}

std::string format_verify_report(const VerifyReport& report) {
    std::string out;
    for (const auto& s : report.suites) {
        out += s.name + " = " + (s.passed ? "pass" : "FAIL") + "  # " + s.detail + "\n";
    }
    out += std::string("overall = ") + (report.all_passed() ? "pass" : "FAIL") + "\n";
    return out;
}

}  // namespace gdcert
