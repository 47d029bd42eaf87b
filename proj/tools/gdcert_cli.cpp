// gdcert: command-line front end for certified training runs and checks.
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "gdcert/activation.hpp"
#include "gdcert/dataset.hpp"
#include "gdcert/gram.hpp"
#include "gdcert/harness.hpp"
#include "gdcert/io.hpp"
#include "gdcert/linalg.hpp"
#include "gdcert/rng.hpp"
#include "gdcert/theory.hpp"
#include "gdcert/trainer.hpp"

namespace {

using namespace gdcert;

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

struct CommonFlags {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out;
    std::optional<std::size_t> workers;
};

ExperimentConfig resolve_config(const CommonFlags& flags) {
    ExperimentConfig cfg = flags.config.empty() ? ExperimentConfig{} : load_config(flags.config);
    if (flags.seed) cfg.seed = *flags.seed;
    if (!flags.out.empty()) cfg.out_dir = flags.out;
    if (flags.workers) cfg.workers = *flags.workers;
    validate_config(cfg);
    return cfg;
}

int cmd_gram(const CommonFlags& flags) {
    const ExperimentConfig cfg = resolve_config(flags);
    const Dataset data = make_dataset(cfg.dataset);
    const Activation act = activation_by_name(cfg.activation);
    const GramEstimate quad = hinfty_quadrature(data, act, cfg.quadrature_nodes);
    if (!(quad.lambda_min > 0.0)) {
        std::cerr << "error: H-infinity is not positive definite (lambda_min = "
                  << format_double(quad.lambda_min) << ")\n";
        return kExitFailure;
    }
    std::vector<std::pair<std::string, std::string>> items = {
        {"dataset_id", quad.dataset_id},
        {"n", std::to_string(data.n())},
        {"d", std::to_string(data.d())},
        {"activation", act.name},
        {"quadrature_nodes", std::to_string(quad.size_parameter)},
        {"lambda0", format_double(quad.lambda_min)},
    };
    std::optional<GramEstimate> mc;
    if (cfg.mc_samples > 0) {
        mc = hinfty_monte_carlo(data, act, cfg.mc_samples, derive_seed(cfg.seed, 0x6d63));
        items.push_back({"mc_samples", std::to_string(cfg.mc_samples)});
        items.push_back({"mc_lambda_min", format_double(mc->lambda_min)});
        items.push_back({"mc_frobenius_error", format_double(frobenius_norm(mc->matrix - quad.matrix))});
        items.push_back({"mc_aggregate_standard_error", format_double(mc->aggregate_standard_error())});
    }
    for (std::size_t p = 0; p < data.n(); ++p) {
        std::string row;
        for (std::size_t q = 0; q < data.n(); ++q) {
            if (q) row += ",";
            row += format_double(quad.matrix(p, q));
        }
        items.push_back({"hinfty_row_" + std::to_string(p), row});
    }
    std::cout << format_key_values(items);
    if (!cfg.out_dir.empty()) {
        std::filesystem::create_directories(cfg.out_dir);
        std::vector<std::string> header;
        for (std::size_t q = 0; q < data.n(); ++q) header.push_back("c" + std::to_string(q));
        write_file_atomic(cfg.out_dir / "hinfty.csv", format_table(quad.matrix, header));
        if (mc) write_file_atomic(cfg.out_dir / "hinfty_mc.csv", format_table(mc->matrix, header));
        write_file_atomic(cfg.out_dir / "resolved_config.json", config_to_json(cfg));
    }
    return kExitOk;
}

struct ThresholdFlags {
    std::optional<std::size_t> n;
    std::optional<double> delta;
    std::optional<double> kappa;
    std::optional<double> lambda0;
    std::optional<std::string> activation;
};

int cmd_threshold(const CommonFlags& flags, const ThresholdFlags& t) {
    const bool have_config = !flags.config.empty();
    const ExperimentConfig cfg = have_config ? resolve_config(flags) : ExperimentConfig{};
    const Activation act = activation_by_name(t.activation.value_or(cfg.activation));
    const double delta = t.delta.value_or(cfg.delta);
    double lam0 = 0.0;
    std::size_t n = 0;
    double kappa = t.kappa.value_or(cfg.dataset.kappa);
    if (t.lambda0 && t.n) {
        lam0 = *t.lambda0;
        n = *t.n;
    } else if (have_config) {
        const Dataset data = make_dataset(cfg.dataset);
        n = t.n.value_or(data.n());
        lam0 = t.lambda0.value_or(lambda0(data, act, cfg.quadrature_nodes));
        if (!t.kappa) kappa = data.kappa;
    } else {
        throw std::invalid_argument("threshold needs --n and --lambda0, or --config");
    }
    const TheoremReport report = theorem_report(n, delta, act, kappa, lam0);
    std::cout << format_theorem_report(report);
    std::cout << "note = the high-probability convergence statement holds with probability at least "
                 "prob_lower_bound; its rate constant is existential and is not evaluated\n";
    return kExitOk;
}

int cmd_train(const CommonFlags& flags) {
    const ExperimentConfig cfg = resolve_config(flags);
    const CertifiedRun run = run_certified(cfg);
    std::cout << format_run_report(run);
    return run.certificate.all_ok() ? kExitOk : kExitFailure;
}

int cmd_sweep(const CommonFlags& flags) {
    const ExperimentConfig cfg = resolve_config(flags);
    std::cout << format_sweep(run_sweep(cfg));
    return kExitOk;
}

int cmd_lazy(const CommonFlags& flags) {
    const ExperimentConfig cfg = resolve_config(flags);
    const LazyReport report = run_lazy(cfg);
    std::cout << format_lazy_report(report);
    return report.invertible_count == report.trials ? kExitOk : kExitFailure;
}

int cmd_verify(const CommonFlags& flags, const VerifyOptions& options) {
    VerifyOptions opt = options;
    if (flags.seed) opt.seed = *flags.seed;
    const VerifyReport report = run_verify(opt);
    std::cout << format_verify_report(report);
    return report.all_passed() ? kExitOk : kExitFailure;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Certified gradient descent for two-layer smooth networks"};
    app.require_subcommand(1);

    CommonFlags flags;
    app.add_option("--config", flags.config, "Experiment config (JSON)");
    app.add_option("--seed", flags.seed, "Master seed");
    app.add_option("--out", flags.out, "Output directory");
    app.add_option("--workers", flags.workers, "Worker threads")->check(CLI::PositiveNumber);

    auto* gram = app.add_subcommand("gram", "Dataset -> H-infinity and lambda0")->fallthrough();
    auto* threshold = app.add_subcommand("threshold", "Theorem arithmetic for given constants")->fallthrough();
    ThresholdFlags tflags;
    threshold->add_option("--n", tflags.n, "Number of training points")->check(CLI::PositiveNumber);
    threshold->add_option("--delta", tflags.delta, "Failure probability");
    threshold->add_option("--kappa", tflags.kappa, "Target bound");
    threshold->add_option("--lambda0", tflags.lambda0, "Least eigenvalue of H-infinity");
    threshold->add_option("--activation", tflags.activation, "Activation name");
    auto* train = app.add_subcommand("train", "Certified training run")->fallthrough();
    auto* sweep = app.add_subcommand("sweep", "Success-rate table over a width grid")->fallthrough();
    auto* verify = app.add_subcommand("verify", "Run every property suite")->fallthrough();
    VerifyOptions vopt;
    double perturb = 0.0;
    std::optional<double> declared_c2;
    verify->add_option("--inject-gradient-perturbation", perturb,
                       "Fault injection: add this to every analytic gradient entry");
    verify->add_option("--declare-softplus-c2", declared_c2,
                       "Fault injection: declared c2 for softplus");
    auto* lazy = app.add_subcommand("lazy", "Last-layer invertibility and fit report")->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (*gram) return cmd_gram(flags);
        if (*threshold) return cmd_threshold(flags, tflags);
        if (*train) return cmd_train(flags);
        if (*sweep) return cmd_sweep(flags);
        if (*lazy) return cmd_lazy(flags);
        if (*verify) {
            vopt.gradient_perturbation = perturb;
            vopt.declared_softplus_c2 = declared_c2;
            return cmd_verify(flags, vopt);
        }
    } catch (const DivergenceError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitFailure;
    } catch (const DatasetError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitFailure;
    }
    return kExitUsage;
}
