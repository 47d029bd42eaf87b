#include "gdcert/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "gdcert/gram.hpp"
#include "gdcert/io.hpp"
#include "gdcert/linalg.hpp"
#include "gdcert/rng.hpp"

namespace gdcert {

namespace {

TraceRow make_row(std::size_t step, double time, const NetworkState& state,
                  const NetworkState& state0, const Activation& act, const Dataset& data) {
    TraceRow row;
    row.step = step;
    row.time = time;
    const Vector u = predictions(state, act, data);
    row.loss = loss_from_predictions(u, data.targets);
    row.residual_sq = 2.0 * row.loss;
    row.gram_lambda_min = empirical_gram(state, act, data).lambda_min;
    double total = 0.0;
    for (std::size_t r = 0; r < state.m(); ++r) {
        double s = 0.0;
        for (std::size_t l = 0; l < state.d(); ++l) {
            const double diff = state.W(r, l) - state0.W(r, l);
            s += diff * diff;
        }
        row.max_drift = std::max(row.max_drift, std::sqrt(s));
        total += s;
    }
    row.total_drift = std::sqrt(total);
    return row;
}

void check_divergence(std::size_t step, double current, double initial) {
    if (!std::isfinite(current)) {
        throw DivergenceError(step, "training diverged at step " + std::to_string(step) +
                                        ": loss is not finite (step size too large?)");
    }
    if (initial > 0.0 && current > kDivergenceFactor * initial) {
        throw DivergenceError(step, "training diverged at step " + std::to_string(step) +
                                        ": loss " + format_double(current) +
                                        " exceeds 1e6 x initial (step size too large?)");
    }
}

}  // namespace

void validate_config(const TrainConfig& cfg) {
    if (cfg.eta_policy == EtaPolicy::fixed && !(cfg.eta > 0.0 && std::isfinite(cfg.eta))) {
        throw std::invalid_argument("train config: eta must be positive");
    }
    if (cfg.t_end) {
        if (!(*cfg.t_end >= 0.0 && std::isfinite(*cfg.t_end))) {
            throw std::invalid_argument("train config: t_end must be non-negative");
        }
    } else if (cfg.steps == 0) {
        throw std::invalid_argument("train config: steps must be at least 1");
    }
    if (cfg.record_stride == 0) {
        throw std::invalid_argument("train config: record_stride must be at least 1");
    }
}

double auto_step_size(const NetworkState& state, const Activation& act, const Dataset& data) {
    const double lmax = lambda_min_symmetric(empirical_gram_matrix(state, act, data)).lambda_max;
    if (!(lmax > 0.0)) {
        throw std::runtime_error("auto step size: C[W(0)] has no positive eigenvalue");
    }
    return 1.0 / lmax;
}

TrainingTrace train_gd(const NetworkState& state0, const Activation& act, const Dataset& data,
                       const TrainConfig& cfg) {
    validate_config(cfg);
    validate_state(state0);
    if (state0.d() != data.d()) {
        throw std::invalid_argument("train_gd: state dimension does not match data");
    }
    TrainingTrace trace;
    trace.m = state0.m();
    trace.n = data.n();
    if (cfg.eta_policy == EtaPolicy::automatic) {
        trace.eta = auto_step_size(state0, act, data);
        trace.eta_source = "auto";
    } else {
        trace.eta = cfg.eta;
        trace.eta_source = "fixed";
    }
    const std::size_t steps =
        cfg.t_end ? static_cast<std::size_t>(std::ceil(*cfg.t_end / trace.eta - 1e-12)) : cfg.steps;

    NetworkState state = state0;
    trace.rows.push_back(make_row(0, 0.0, state, state0, act, data));
    const double initial_loss = trace.rows.front().loss;
    for (std::size_t k = 1; k <= steps; ++k) {
        Matrix g = gradient(state, act, data, cfg.gradient_mode);
        g *= trace.eta;
        state.W -= g;
        const bool record = k % cfg.record_stride == 0 || k == steps;
        if (record) {
            trace.rows.push_back(
                make_row(k, static_cast<double>(k) * trace.eta, state, state0, act, data));
            check_divergence(k, trace.rows.back().loss, initial_loss);
        } else {
            check_divergence(k, loss(state, act, data), initial_loss);
        }
    }
    trace.final_state = std::move(state);
    return trace;
}

TrainingTrace integrate_flow(const NetworkState& state0, const Activation& act,
                             const Dataset& data, double t_end, double dt,
                             std::size_t record_stride) {
    if (!(dt > 0.0) || !(t_end >= 0.0) || record_stride == 0) {
        throw std::invalid_argument("integrate_flow: need dt > 0, t_end >= 0, stride >= 1");
    }
    validate_state(state0);
    TrainingTrace trace;
    trace.m = state0.m();
    trace.n = data.n();
    trace.eta = dt;
    trace.eta_source = "rk4";

    const auto velocity = [&](const Matrix& w) {
        NetworkState s{w, state0.a};
        return -1.0 * gradient(s, act, data);
    };

    NetworkState state = state0;
    trace.rows.push_back(make_row(0, 0.0, state, state0, act, data));
    const double initial_loss = trace.rows.front().loss;
    const auto steps = static_cast<std::size_t>(std::ceil(t_end / dt - 1e-9));
    double t = 0.0;
    for (std::size_t k = 1; k <= steps; ++k) {
        const double h = std::min(dt, t_end - t);
        state.W = rk4_step(velocity, state.W, h);
        t = k == steps ? t_end : t + h;
        if (k % record_stride == 0 || k == steps) {
            trace.rows.push_back(make_row(k, t, state, state0, act, data));
            check_divergence(k, trace.rows.back().loss, initial_loss);
        }
    }
    trace.final_state = std::move(state);
    return trace;
}

CertificateReport certify(const TrainingTrace& trace, double lambda0, const Dataset& data) {
    if (trace.rows.empty()) {
        throw std::invalid_argument("certify: empty trace");
    }
    if (!(lambda0 > 0.0)) {
        throw std::invalid_argument("certify: lambda0 must be positive");
    }
    CertificateReport rep;
    const double r0 = trace.rows.front().residual_sq;
    rep.drift_bound = std::sqrt(static_cast<double>(data.n())) * std::sqrt(r0) /
                      (std::sqrt(static_cast<double>(trace.m)) * lambda0);
    rep.decay_margin = std::numeric_limits<double>::infinity();
    rep.drift_margin = std::numeric_limits<double>::infinity();
    rep.gram_margin = std::numeric_limits<double>::infinity();

    auto violation = [&rep](std::size_t step) {
        if (!rep.first_violation_step) {
            rep.first_violation_step = step;
        }
    };

    bool hypothesis = true;
    for (const auto& row : trace.rows) {
        rep.gram_margin = std::min(rep.gram_margin, row.gram_lambda_min - 0.5 * lambda0);
        if (!(row.gram_lambda_min > 0.5 * lambda0)) {
            rep.gram_stability_ok = false;
            hypothesis = false;
            violation(row.step);
        }
        if (!hypothesis) {
            continue;
        }
        const double decay_bound = std::exp(-lambda0 * row.time) * r0 * (1.0 + kCertificateSlack);
        rep.decay_margin =
            std::min(rep.decay_margin, r0 > 0.0 ? (decay_bound - row.residual_sq) / r0
                                                : decay_bound - row.residual_sq);
        if (!(row.residual_sq <= decay_bound)) {
            rep.decay_ok = false;
            violation(row.step);
        }
        const double drift_limit = rep.drift_bound * (1.0 + kCertificateSlack);
        rep.drift_margin = std::min(rep.drift_margin, drift_limit - row.max_drift);
        if (!(row.max_drift <= drift_limit)) {
            rep.drift_ok = false;
            violation(row.step);
        }
    }
    return rep;
}

std::optional<double> decay_slope(const TrainingTrace& trace, double floor) {
    if (trace.rows.empty()) {
        return std::nullopt;
    }
    const double r0 = trace.rows.front().residual_sq;
    std::vector<double> ts;
    std::vector<double> ys;
    for (const auto& row : trace.rows) {
        if (!(row.residual_sq > floor * r0) || row.residual_sq <= 0.0) {
            break;
        }
        ts.push_back(row.time);
        ys.push_back(std::log(row.residual_sq));
    }
    if (ts.size() < 2) {
        return std::nullopt;
    }
    const double k = static_cast<double>(ts.size());
    double tm = 0.0;
    double ym = 0.0;
    for (std::size_t i = 0; i < ts.size(); ++i) {
        tm += ts[i];
        ym += ys[i];
    }
    tm /= k;
    ym /= k;
    double sxy = 0.0;
    double sxx = 0.0;
    for (std::size_t i = 0; i < ts.size(); ++i) {
        sxy += (ts[i] - tm) * (ys[i] - ym);
        sxx += (ts[i] - tm) * (ts[i] - tm);
    }
    if (sxx == 0.0) {
        return std::nullopt;
    }
    return sxy / sxx;
}

LipschitzResult gram_lipschitz_check(const Activation& act, const Dataset& data, std::size_t m,
                                     std::size_t pairs, std::uint64_t seed) {
    if (pairs == 0 || m == 0) {
        throw std::invalid_argument("gram_lipschitz_check: pairs and m must be positive");
    }
    LipschitzResult res;
    const double scale = std::sqrt(static_cast<double>(m)) / (4.0 * act.c1 * act.c2);
    for (std::size_t j = 0; j < pairs; ++j) {
        const auto base = init_state(m, data.d(), derive_seed(seed, j, 0));
        NetworkState other = base;
        Rng rng(derive_seed(seed, j, 1));
        switch (j % 3) {
            case 0:
                for (double& w : other.W.data()) {
                    w = rng.normal();
                }
                break;
            case 1: {
                const double s = std::pow(10.0, rng.uniform(-4.0, 0.0));
                for (double& w : other.W.data()) {
                    w += s * rng.normal();
                }
                break;
            }
            default: {
                const double s = std::pow(10.0, rng.uniform(-4.0, 0.5));
                const auto r = static_cast<std::size_t>(rng.next_u64() % m);
                for (double& w : other.W.row(r)) {
                    w += s * rng.normal();
                }
                break;
            }
        }
        const double dist = frobenius_norm(other.W - base.W);
        if (dist == 0.0) {
            continue;
        }
        const Matrix diff =
            empirical_gram_matrix(other, act, data) - empirical_gram_matrix(base, act, data);
        res.max_ratio = std::max(res.max_ratio, max_abs(diff) * scale / dist);
        ++res.pairs_evaluated;
    }
    res.ok = res.max_ratio <= 1.0 + 1e-9;
    return res;
}

std::string format_trace(const TrainingTrace& trace) {
    std::ostringstream out;
    out << kTraceHeader << '\n';
    for (const auto& r : trace.rows) {
        out << r.step << ',' << format_double(r.time) << ',' << format_double(r.residual_sq) << ','
            << format_double(r.loss) << ',' << format_double(r.gram_lambda_min) << ','
            << format_double(r.max_drift) << ',' << format_double(r.total_drift) << '\n';
    }
    return out.str();
}

std::vector<TraceRow> parse_trace(std::string_view text) {
    const auto header_end = text.find('\n');
    auto header = text.substr(0, header_end);
    if (!header.empty() && header.back() == '\r') {
        header.remove_suffix(1);
    }
    if (header != kTraceHeader) {
        throw std::runtime_error("trace: unexpected header '" + std::string(header) + "'");
    }
    const Matrix table = parse_table(text, true);
    if (table.rows() > 0 && table.cols() != 7) {
        throw std::runtime_error("trace: expected 7 columns");
    }
    std::vector<TraceRow> rows(table.rows());
    for (std::size_t i = 0; i < table.rows(); ++i) {
        rows[i] = TraceRow{static_cast<std::size_t>(table(i, 0)), table(i, 1), table(i, 2),
                           table(i, 3), table(i, 4), table(i, 5), table(i, 6)};
    }
    return rows;
}

}  // namespace gdcert
