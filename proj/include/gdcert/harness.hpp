#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "gdcert/activation.hpp"
#include "gdcert/dataset.hpp"
#include "gdcert/theory.hpp"
#include "gdcert/trainer.hpp"

namespace gdcert {

enum class DatasetKind { orthonormal, sphere_random, file };

struct DatasetSpec {
    DatasetKind kind = DatasetKind::orthonormal;
    std::size_t n = 4;
    std::size_t d = 4;
    double kappa = 1.0;
    std::uint64_t seed = 0;
    bool rotate = false;  // orthonormal only: apply a seeded random rotation
    std::filesystem::path path;  // file only
};

struct ExperimentConfig {
    DatasetSpec dataset;
    std::string activation = "softplus";
    double delta = 0.01;
    std::vector<std::size_t> m_grid;  // `train` and `lazy` use the first entry
    TrainConfig trainer;
    // t_end = t_end_lambda0_units / lambda0 when set (overrides steps).
    std::optional<double> t_end_lambda0_units;
    std::size_t trials = 1;
    std::size_t workers = 1;
    std::uint64_t seed = 0;
    std::filesystem::path out_dir;
    std::size_t quadrature_nodes = 60;
    std::size_t mc_samples = 0;  // `gram`: also report a Monte Carlo estimate
    double lazy_bias_scale = 0.0;
};

// Nested JSON object; unknown keys are rejected. Throws std::invalid_argument.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);
std::string config_to_json(const ExperimentConfig& cfg);
void validate_config(const ExperimentConfig& cfg);

// orthonormal: the first n standard basis vectors (optionally rotated);
// sphere_random: i.i.d. uniform on the unit sphere with pairs closer than
// 1e-3 rejected. Targets are i.i.d. uniform on the open interval (-kappa, kappa).
Dataset gen_dataset(DatasetKind kind, std::size_t n, std::size_t d, double kappa,
                    std::uint64_t seed, bool rotate = false);
Dataset make_dataset(const DatasetSpec& spec);

DatasetKind parse_dataset_kind(const std::string& name);
std::string to_string(DatasetKind kind);

// Seed of trial j at width m.
std::uint64_t trial_seed(std::uint64_t master, std::size_t m, std::size_t trial);

struct CertifiedRun {
    TrainingTrace trace;
    CertificateReport certificate;
    TheoremReport theorem;
    double lambda0 = 0.0;
    std::size_t m = 0;
    bool in_certified_regime = false;  // m > width threshold
    std::optional<double> decay_slope;
};

// dataset -> lambda0 -> theorem report -> init -> train_gd -> certify. A
// width below the threshold is flagged, not rejected. When cfg.out_dir is set
// writes trace.csv, report.txt and resolved_config.json there.
CertifiedRun run_certified(const ExperimentConfig& cfg);

// The same pipeline on a prepared dataset and lambda0 (used by sweeps).
CertifiedRun run_certified_on(const Dataset& data, const Activation& act, double lambda0,
                              const ExperimentConfig& cfg, std::size_t m, std::uint64_t seed);

std::string format_run_report(const CertifiedRun& run);

struct SweepRow {
    std::size_t m = 0;
    std::size_t trials = 0;
    std::size_t success_count = 0;  // all three certificates pass
    double success_rate = 0.0;
    double mean_final_residual_sq = 0.0;
    double mean_gram_lambda_min0 = 0.0;
};

inline constexpr const char* kSweepHeader =
    "m,trials,success_count,success_rate,mean_final_residual_sq,mean_gram_lambda_min0";

// Rows in ascending m. Trials run on cfg.workers threads; each trial's seed
// depends only on (cfg.seed, m, j). Throws std::invalid_argument on an empty
// grid.
std::vector<SweepRow> run_sweep(const ExperimentConfig& cfg);
std::string format_sweep(const std::vector<SweepRow>& rows);

struct LazyReport {
    std::size_t trials = 0;
    std::size_t m = 0;
    std::size_t n = 0;
    std::size_t invertible_count = 0;
    double invertibility_rate = 0.0;
    double max_relative_residual = 0.0;  // residual / sum y_i^2
    double max_output_gradient_norm = 0.0;
    double max_condition_number = 0.0;
};

LazyReport run_lazy(const ExperimentConfig& cfg);
std::string format_lazy_report(const LazyReport& report);

struct SuiteResult {
    std::string name;
    bool passed = false;
    std::string detail;
};

struct VerifyReport {
    std::vector<SuiteResult> suites;
    bool all_passed() const;
};

// Fault injection hooks for checking that the suites can fail.
struct VerifyOptions {
    double gradient_perturbation = 0.0;  // added to every analytic gradient entry
    std::optional<double> declared_softplus_c2;
    std::uint64_t seed = 20240611;
};

VerifyReport run_verify(const VerifyOptions& options = {});
std::string format_verify_report(const VerifyReport& report);

std::string format_key_values(const std::vector<std::pair<std::string, std::string>>& items);

// Runs body(i) for i in [0, count) on up to `workers` threads; rethrows the
// first exception after all workers finish.
void parallel_for(std::size_t count, std::size_t workers,
                  const std::function<void(std::size_t)>& body);

}  // namespace gdcert
