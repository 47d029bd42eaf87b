#include "gdcert/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <nlohmann/json.hpp>

#include "gdcert/gram.hpp"
#include "gdcert/io.hpp"
#include "gdcert/lazy.hpp"
#include "gdcert/linalg.hpp"
#include "gdcert/model.hpp"
#include "gdcert/rng.hpp"

namespace gdcert {

namespace {

using Json = nlohmann::json;
using OrderedJson = nlohmann::ordered_json;

constexpr double kSphereMinDistance = 1e-3;
constexpr std::size_t kSphereDrawBudget = 100000;

void reject_unknown_keys(const Json& obj, const std::set<std::string>& allowed,
                         const std::string& where) {
    if (!obj.is_object()) throw std::invalid_argument(where + " must be an object");
    for (const auto& item : obj.items()) {
        if (allowed.count(item.key()) == 0) {
            throw std::invalid_argument("unknown key '" + item.key() + "' in " + where);
        }
    }
}

std::size_t positive_count(const Json& v, const std::string& key) {
    if (!v.is_number_integer() || v.get<long long>() <= 0) {
        throw std::invalid_argument(key + " must be a positive integer");
    }
    return v.get<std::size_t>();
}

double number(const Json& v, const std::string& key) {
    if (!v.is_number()) throw std::invalid_argument(key + " must be a number");
    return v.get<double>();
}

std::uint64_t seed_value(const Json& v, const std::string& key) {
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0)) {
        throw std::invalid_argument(key + " must be a non-negative integer");
    }
    return v.get<std::uint64_t>();
}

// Q factor of a d x d Gaussian matrix by modified Gram-Schmidt, applied twice.
Matrix random_rotation(std::size_t d, Rng& rng) {
    Matrix q(d, d);
    for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = 0; j < d; ++j) q(i, j) = rng.normal();
    }
    for (int pass = 0; pass < 2; ++pass) {
        for (std::size_t j = 0; j < d; ++j) {
            for (std::size_t k = 0; k < j; ++k) {
                double s = 0.0;
                for (std::size_t i = 0; i < d; ++i) s += q(i, k) * q(i, j);
                for (std::size_t i = 0; i < d; ++i) q(i, j) -= s * q(i, k);
            }
            double s = 0.0;
            for (std::size_t i = 0; i < d; ++i) s += q(i, j) * q(i, j);
            s = std::sqrt(s);
            for (std::size_t i = 0; i < d; ++i) q(i, j) /= s;
        }
    }
    return q;
}

std::size_t primary_width(const ExperimentConfig& cfg) {
    if (cfg.m_grid.empty()) throw std::invalid_argument("config needs m or m_grid");
    return cfg.m_grid.front();
}

}  // namespace

DatasetKind parse_dataset_kind(const std::string& name) {
    if (name == "orthonormal") return DatasetKind::orthonormal;
    if (name == "sphere_random") return DatasetKind::sphere_random;
    if (name == "file") return DatasetKind::file;
    throw std::invalid_argument("unknown dataset kind '" + name + "'");
}

std::string to_string(DatasetKind kind) {
    switch (kind) {
        case DatasetKind::orthonormal: return "orthonormal";
        case DatasetKind::sphere_random: return "sphere_random";
        case DatasetKind::file: return "file";
    }
    return "unknown";
}

ExperimentConfig parse_config(const std::string& text) {
    Json root;
    try {
        root = Json::parse(text);
    } catch (const Json::parse_error& e) {
        throw std::invalid_argument(std::string("config is not valid JSON: ") + e.what());
    }
    reject_unknown_keys(root,
                        {"dataset", "activation", "delta", "m", "m_grid", "trainer", "trials",
                         "workers", "seed", "out", "quadrature_nodes", "mc_samples",
                         "lazy_bias_scale"},
                        "config");
    ExperimentConfig cfg;
    try {
        if (root.contains("dataset")) {
            const Json& ds = root["dataset"];
            reject_unknown_keys(ds, {"kind", "n", "d", "kappa", "seed", "rotate", "path"},
                                "dataset");
            if (ds.contains("kind")) cfg.dataset.kind = parse_dataset_kind(ds["kind"].get<std::string>());
            if (ds.contains("n")) cfg.dataset.n = positive_count(ds["n"], "dataset.n");
            if (ds.contains("d")) cfg.dataset.d = positive_count(ds["d"], "dataset.d");
            if (ds.contains("kappa")) cfg.dataset.kappa = number(ds["kappa"], "dataset.kappa");
            if (ds.contains("seed")) cfg.dataset.seed = seed_value(ds["seed"], "dataset.seed");
            if (ds.contains("rotate")) cfg.dataset.rotate = ds["rotate"].get<bool>();
            if (ds.contains("path")) cfg.dataset.path = ds["path"].get<std::string>();
        }
        if (root.contains("activation")) cfg.activation = root["activation"].get<std::string>();
        if (root.contains("delta")) cfg.delta = number(root["delta"], "delta");
        if (root.contains("m") && root.contains("m_grid")) {
            throw std::invalid_argument("give either m or m_grid, not both");
        }
        if (root.contains("m")) cfg.m_grid = {positive_count(root["m"], "m")};
        if (root.contains("m_grid")) {
            if (!root["m_grid"].is_array()) throw std::invalid_argument("m_grid must be an array");
            for (const auto& v : root["m_grid"]) cfg.m_grid.push_back(positive_count(v, "m_grid"));
        }
        if (root.contains("trainer")) {
            const Json& tr = root["trainer"];
            reject_unknown_keys(tr,
                                {"eta_policy", "eta", "steps", "record_stride", "t_end",
                                 "t_end_lambda0_units", "gradient_mode"},
                                "trainer");
            if (tr.contains("eta_policy")) {
                const auto p = tr["eta_policy"].get<std::string>();
                if (p == "auto") cfg.trainer.eta_policy = EtaPolicy::automatic;
                else if (p == "fixed") cfg.trainer.eta_policy = EtaPolicy::fixed;
                else throw std::invalid_argument("eta_policy must be 'auto' or 'fixed'");
            }
            if (tr.contains("eta")) cfg.trainer.eta = number(tr["eta"], "trainer.eta");
            if (tr.contains("steps")) cfg.trainer.steps = positive_count(tr["steps"], "trainer.steps");
            if (tr.contains("record_stride")) {
                cfg.trainer.record_stride = positive_count(tr["record_stride"], "trainer.record_stride");
            }
            if (tr.contains("t_end") && tr.contains("t_end_lambda0_units")) {
                throw std::invalid_argument("give either t_end or t_end_lambda0_units");
            }
            if (tr.contains("t_end")) cfg.trainer.t_end = number(tr["t_end"], "trainer.t_end");
            if (tr.contains("t_end_lambda0_units")) {
                cfg.t_end_lambda0_units = number(tr["t_end_lambda0_units"], "trainer.t_end_lambda0_units");
            }
            if (tr.contains("gradient_mode")) {
                const auto g = tr["gradient_mode"].get<std::string>();
                if (g == "fast") cfg.trainer.gradient_mode = GradientMode::fast;
                else if (g == "verify") cfg.trainer.gradient_mode = GradientMode::verify;
                else throw std::invalid_argument("gradient_mode must be 'fast' or 'verify'");
            }
        }
        if (root.contains("trials")) cfg.trials = positive_count(root["trials"], "trials");
        if (root.contains("workers")) cfg.workers = positive_count(root["workers"], "workers");
        if (root.contains("seed")) cfg.seed = seed_value(root["seed"], "seed");
        if (root.contains("out")) cfg.out_dir = root["out"].get<std::string>();
        if (root.contains("quadrature_nodes")) {
            cfg.quadrature_nodes = positive_count(root["quadrature_nodes"], "quadrature_nodes");
        }
        if (root.contains("mc_samples")) {
            cfg.mc_samples = static_cast<std::size_t>(seed_value(root["mc_samples"], "mc_samples"));
        }
        if (root.contains("lazy_bias_scale")) {
            cfg.lazy_bias_scale = number(root["lazy_bias_scale"], "lazy_bias_scale");
        }
    } catch (const Json::exception& e) {
        throw std::invalid_argument(std::string("config type error: ") + e.what());
    }
    return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) {
        throw std::invalid_argument("config file not found: " + path.string());
    }
    return parse_config(read_file(path));
}

std::string config_to_json(const ExperimentConfig& cfg) {
    OrderedJson root;
    OrderedJson ds;
    ds["kind"] = to_string(cfg.dataset.kind);
    ds["n"] = cfg.dataset.n;
    ds["d"] = cfg.dataset.d;
    ds["kappa"] = cfg.dataset.kappa;
    ds["seed"] = cfg.dataset.seed;
    ds["rotate"] = cfg.dataset.rotate;
    if (cfg.dataset.kind == DatasetKind::file) ds["path"] = cfg.dataset.path.string();
    root["dataset"] = ds;
    root["activation"] = cfg.activation;
    root["delta"] = cfg.delta;
    root["m_grid"] = cfg.m_grid;
    OrderedJson tr;
    tr["eta_policy"] = cfg.trainer.eta_policy == EtaPolicy::automatic ? "auto" : "fixed";
    tr["eta"] = cfg.trainer.eta;
    tr["steps"] = cfg.trainer.steps;
    tr["record_stride"] = cfg.trainer.record_stride;
    if (cfg.trainer.t_end) tr["t_end"] = *cfg.trainer.t_end;
    if (cfg.t_end_lambda0_units) tr["t_end_lambda0_units"] = *cfg.t_end_lambda0_units;
    tr["gradient_mode"] = cfg.trainer.gradient_mode == GradientMode::fast ? "fast" : "verify";
    root["trainer"] = tr;
    root["trials"] = cfg.trials;
    root["workers"] = cfg.workers;
    root["seed"] = cfg.seed;
    root["out"] = cfg.out_dir.string();
    root["quadrature_nodes"] = cfg.quadrature_nodes;
    root["mc_samples"] = cfg.mc_samples;
    root["lazy_bias_scale"] = cfg.lazy_bias_scale;
    return root.dump(2) + "\n";
}

void validate_config(const ExperimentConfig& cfg) {
    const auto& ds = cfg.dataset;
    if (ds.kind != DatasetKind::file) {
        if (ds.n == 0 || ds.d == 0) throw std::invalid_argument("dataset n and d must be positive");
        if (ds.kind == DatasetKind::orthonormal && ds.n > ds.d) {
            throw std::invalid_argument("orthonormal dataset needs n <= d");
        }
    } else if (!std::filesystem::exists(ds.path)) {
        throw std::invalid_argument("dataset file not found: " + ds.path.string());
    }
    if (!(ds.kappa > 0.0) || !std::isfinite(ds.kappa)) {
        throw std::invalid_argument("kappa must be positive and finite");
    }
    if (!(cfg.delta > 0.0 && cfg.delta < 1.0)) throw std::invalid_argument("delta must lie in (0, 1)");
    for (std::size_t m : cfg.m_grid) {
        if (m == 0) throw std::invalid_argument("widths must be positive");
    }
    if (cfg.trials == 0) throw std::invalid_argument("trials must be positive");
    if (cfg.workers == 0) throw std::invalid_argument("workers must be positive");
    if (cfg.quadrature_nodes < 20) throw std::invalid_argument("quadrature_nodes must be >= 20");
    if (cfg.t_end_lambda0_units && !(*cfg.t_end_lambda0_units > 0.0)) {
        throw std::invalid_argument("t_end_lambda0_units must be positive");
    }
    if (!(cfg.lazy_bias_scale >= 0.0)) throw std::invalid_argument("lazy_bias_scale must be >= 0");
    activation_by_name(cfg.activation);
    TrainConfig tc = cfg.trainer;
    if (cfg.t_end_lambda0_units) tc.t_end = 1.0;
    validate_config(tc);
}

Dataset gen_dataset(DatasetKind kind, std::size_t n, std::size_t d, double kappa,
                    std::uint64_t seed, bool rotate) {
    if (n == 0 || d == 0) throw std::invalid_argument("gen_dataset: n and d must be positive");
    if (!(kappa > 0.0)) throw std::invalid_argument("gen_dataset: kappa must be positive");
    Rng rng(seed);
    Dataset data;
    data.kappa = kappa;
    data.inputs = Matrix(n, d);
    switch (kind) {
        case DatasetKind::orthonormal: {
            if (n > d) throw std::invalid_argument("orthonormal dataset needs n <= d");
            if (rotate) {
                const Matrix q = random_rotation(d, rng);
                for (std::size_t i = 0; i < n; ++i) {
                    for (std::size_t k = 0; k < d; ++k) data.inputs(i, k) = q(k, i);
                }
            } else {
                for (std::size_t i = 0; i < n; ++i) data.inputs(i, i) = 1.0;
            }
            break;
        }
        case DatasetKind::sphere_random: {
            std::size_t accepted = 0;
            std::size_t draws = 0;
            Vector v(d);
            while (accepted < n) {
                if (++draws > kSphereDrawBudget) {
                    throw std::runtime_error("sphere_random: rejection budget exhausted");
                }
                for (double& x : v) x = rng.normal();
                const double norm = norm2(v);
                for (double& x : v) x /= norm;
                bool far = true;
                for (std::size_t j = 0; j < accepted && far; ++j) {
                    double s = 0.0;
                    for (std::size_t k = 0; k < d; ++k) {
                        const double diff = v[k] - data.inputs(j, k);
                        s += diff * diff;
                    }
                    far = std::sqrt(s) > kSphereMinDistance;
                }
                if (!far) continue;
                for (std::size_t k = 0; k < d; ++k) data.inputs(accepted, k) = v[k];
                ++accepted;
            }
            break;
        }
        case DatasetKind::file:
            throw std::invalid_argument("gen_dataset cannot generate a file dataset");
    }
    data.targets.resize(n);
    for (double& y : data.targets) y = rng.uniform(-kappa, kappa);
    validate_dataset(data);
    return data;
}

Dataset make_dataset(const DatasetSpec& spec) {
    if (spec.kind == DatasetKind::file) return load_dataset(spec.path, spec.kappa);
    return gen_dataset(spec.kind, spec.n, spec.d, spec.kappa, spec.seed, spec.rotate);
}

std::uint64_t trial_seed(std::uint64_t master, std::size_t m, std::size_t trial) {
    return derive_seed(master, m, trial);
}

CertifiedRun run_certified_on(const Dataset& data, const Activation& act, double lambda0,
                              const ExperimentConfig& cfg, std::size_t m, std::uint64_t seed) {
    CertifiedRun run;
    run.lambda0 = lambda0;
    run.m = m;
    run.theorem = theorem_report(data.n(), cfg.delta, act, data.kappa, lambda0);
    run.in_certified_regime = m > run.theorem.m_threshold;
    TrainConfig tc = cfg.trainer;
    tc.m = m;
    tc.seed = seed;
    if (cfg.t_end_lambda0_units) tc.t_end = *cfg.t_end_lambda0_units / lambda0;
    run.trace = train_gd(init_state(m, data.d(), seed), act, data, tc);
    run.certificate = certify(run.trace, lambda0, data);
    run.decay_slope = decay_slope(run.trace);
    return run;
}

CertifiedRun run_certified(const ExperimentConfig& cfg) {
    validate_config(cfg);
    const std::size_t m = primary_width(cfg);
    const Dataset data = make_dataset(cfg.dataset);
    const Activation act = activation_by_name(cfg.activation);
    const double lam0 = lambda0(data, act, cfg.quadrature_nodes);
    CertifiedRun run = run_certified_on(data, act, lam0, cfg, m, trial_seed(cfg.seed, m, 0));
    if (!cfg.out_dir.empty()) {
        std::filesystem::create_directories(cfg.out_dir);
        write_file_atomic(cfg.out_dir / "trace.csv", format_trace(run.trace));
        write_file_atomic(cfg.out_dir / "report.txt", format_run_report(run));
        write_file_atomic(cfg.out_dir / "resolved_config.json", config_to_json(cfg));
    }
    return run;
}

std::string format_key_values(const std::vector<std::pair<std::string, std::string>>& items) {
    std::string out;
    for (const auto& [k, v] : items) out += k + " = " + v + "\n";
    return out;
}

std::string format_run_report(const CertifiedRun& run) {
    const auto& c = run.certificate;
    const auto& rows = run.trace.rows;
    const auto flag = [](bool b) { return std::string(b ? "true" : "false"); };
    std::vector<std::pair<std::string, std::string>> items = {
        {"regime", run.in_certified_regime ? "certified" : "outside certified regime"},
        {"m", std::to_string(run.m)},
        {"n", std::to_string(run.trace.n)},
        {"lambda0", format_double(run.lambda0)},
        {"eta", format_double(run.trace.eta)},
        {"eta_source", run.trace.eta_source},
        {"steps", std::to_string(rows.empty() ? 0 : rows.back().step)},
        {"t_end", format_double(rows.empty() ? 0.0 : rows.back().time)},
        {"residual_sq_initial", format_double(rows.empty() ? 0.0 : rows.front().residual_sq)},
        {"residual_sq_final", format_double(rows.empty() ? 0.0 : rows.back().residual_sq)},
        {"decay_ok", flag(c.decay_ok)},
        {"decay_margin", format_double(c.decay_margin)},
        {"drift_ok", flag(c.drift_ok)},
        {"drift_margin", format_double(c.drift_margin)},
        {"drift_bound", format_double(c.drift_bound)},
        {"gram_stability_ok", flag(c.gram_stability_ok)},
        {"gram_margin", format_double(c.gram_margin)},
        {"first_violation_step",
         c.first_violation_step ? std::to_string(*c.first_violation_step) : "none"},
        {"decay_slope", run.decay_slope ? format_double(*run.decay_slope) : "none"},
        {"certificates", c.all_ok() ? "pass" : "fail"},
    };
    return format_key_values(items) + format_theorem_report(run.theorem);
}

void parallel_for(std::size_t count, std::size_t workers,
                  const std::function<void(std::size_t)>& body) {
    const std::size_t threads = std::max<std::size_t>(1, std::min(workers, count));
    std::atomic<std::size_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    const auto work = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= count) return;
            try {
                body(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
                next.store(count);
            }
        }
    };
    if (threads == 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(threads);
        for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(work);
        for (auto& th : pool) th.join();
    }
    if (first_error) std::rethrow_exception(first_error);
}

std::vector<SweepRow> run_sweep(const ExperimentConfig& cfg) {
    if (cfg.m_grid.empty()) throw std::invalid_argument("run_sweep: empty m grid");
    validate_config(cfg);
    std::vector<std::size_t> grid = cfg.m_grid;
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());

    const Dataset data = make_dataset(cfg.dataset);
    const Activation act = activation_by_name(cfg.activation);
    const double lam0 = lambda0(data, act, cfg.quadrature_nodes);

    struct Outcome {
        bool success = false;
        double final_residual = 0.0;
        double lambda_min0 = 0.0;
    };
    const std::size_t trials = cfg.trials;
    std::vector<Outcome> outcomes(grid.size() * trials);
    if (!cfg.out_dir.empty()) {
        for (std::size_t m : grid) {
            std::filesystem::create_directories(cfg.out_dir / ("m" + std::to_string(m)));
        }
    }
    parallel_for(outcomes.size(), cfg.workers, [&](std::size_t idx) {
        const std::size_t m = grid[idx / trials];
        const std::size_t j = idx % trials;
        const CertifiedRun run = run_certified_on(data, act, lam0, cfg, m, trial_seed(cfg.seed, m, j));
        outcomes[idx] = {run.certificate.all_ok(), run.trace.rows.back().residual_sq,
                         run.trace.rows.front().gram_lambda_min};
        if (!cfg.out_dir.empty()) {
            write_file_atomic(cfg.out_dir / ("m" + std::to_string(m)) /
                                  ("trial" + std::to_string(j) + ".csv"),
                              format_trace(run.trace));
        }
    });

    std::vector<SweepRow> rows;
    for (std::size_t g = 0; g < grid.size(); ++g) {
        SweepRow row;
        row.m = grid[g];
        row.trials = trials;
        for (std::size_t j = 0; j < trials; ++j) {
            const Outcome& o = outcomes[g * trials + j];
            if (o.success) ++row.success_count;
            row.mean_final_residual_sq += o.final_residual;
            row.mean_gram_lambda_min0 += o.lambda_min0;
        }
        row.success_rate = static_cast<double>(row.success_count) / static_cast<double>(trials);
        row.mean_final_residual_sq /= static_cast<double>(trials);
        row.mean_gram_lambda_min0 /= static_cast<double>(trials);
        rows.push_back(row);
    }
    if (!cfg.out_dir.empty()) {
        write_file_atomic(cfg.out_dir / "sweep.csv", format_sweep(rows));
        write_file_atomic(cfg.out_dir / "resolved_config.json", config_to_json(cfg));
    }
    return rows;
}

std::string format_sweep(const std::vector<SweepRow>& rows) {
    std::string out = std::string(kSweepHeader) + "\n";
    for (const auto& r : rows) {
        out += std::to_string(r.m) + "," + std::to_string(r.trials) + "," +
               std::to_string(r.success_count) + "," + format_double(r.success_rate) + "," +
               format_double(r.mean_final_residual_sq) + "," +
               format_double(r.mean_gram_lambda_min0) + "\n";
    }
    return out;
}

LazyReport run_lazy(const ExperimentConfig& cfg) {
    validate_config(cfg);
    const Dataset data = make_dataset(cfg.dataset);
    const Activation act = activation_by_name(cfg.activation);
    LazyReport report;
    report.n = data.n();
    report.m = cfg.m_grid.empty() ? data.n() : cfg.m_grid.front();
    report.trials = cfg.trials;
    if (report.m < report.n) throw std::invalid_argument("lazy: m must be at least n");
    double ysq = 0.0;
    for (double y : data.targets) ysq += y * y;

    struct Outcome {
        bool invertible = false;
        double rel_residual = 0.0;
        double grad_norm = 0.0;
        double condition = 0.0;
    };
    std::vector<Outcome> outcomes(cfg.trials);
    parallel_for(cfg.trials, cfg.workers, [&](std::size_t j) {
        const std::uint64_t seed = trial_seed(cfg.seed, report.m, j);
        const NetworkState state = init_state(report.m, data.d(), seed);
        Vector biases(report.m, 0.0);
        if (cfg.lazy_bias_scale > 0.0) {
            Rng rng(derive_seed(seed, 0xb1a5));
            for (double& b : biases) b = cfg.lazy_bias_scale * rng.normal();
        }
        const FeatureMatrix features = feature_matrix(state, act, data, biases);
        const Invertibility inv = gram_invertibility(features);
        Outcome& o = outcomes[j];
        o.invertible = inv.invertible;
        o.condition = inv.condition_number();
        if (!inv.invertible) return;
        const LastLayerFit fit = fit_last_layer(features, data);
        o.rel_residual = ysq > 0.0 ? fit.residual / ysq : fit.residual;
        o.grad_norm = norm2(output_gradient(features, fit.a_star, data));
    });
    for (const auto& o : outcomes) {
        if (o.invertible) ++report.invertible_count;
        report.max_relative_residual = std::max(report.max_relative_residual, o.rel_residual);
        report.max_output_gradient_norm = std::max(report.max_output_gradient_norm, o.grad_norm);
        report.max_condition_number = std::max(report.max_condition_number, o.condition);
    }
    report.invertibility_rate =
        static_cast<double>(report.invertible_count) / static_cast<double>(report.trials);
    return report;
}

std::string format_lazy_report(const LazyReport& r) {
    return format_key_values({
        {"trials", std::to_string(r.trials)},
        {"m", std::to_string(r.m)},
        {"n", std::to_string(r.n)},
        {"invertible_count", std::to_string(r.invertible_count)},
        {"invertibility_rate", format_double(r.invertibility_rate)},
        {"max_relative_residual", format_double(r.max_relative_residual)},
        {"max_output_gradient_norm", format_double(r.max_output_gradient_norm)},
        {"max_condition_number", format_double(r.max_condition_number)},
    });
}

}  // namespace gdcert
