#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "gdcert/activation.hpp"
#include "gdcert/dataset.hpp"
#include "gdcert/model.hpp"

namespace gdcert {

enum class EtaPolicy {
    fixed,
    // eta = 1 / lambda_max(C[W(0)]). This is a chosen default, not a bound
    // derived from the convergence theorem.
    automatic,
};

struct TrainConfig {
    double eta = 0.0;  // used when eta_policy == fixed
    std::size_t steps = 1;
    std::size_t record_stride = 10;
    std::uint64_t seed = 0;
    std::size_t m = 0;
    EtaPolicy eta_policy = EtaPolicy::automatic;
    // When set, steps = ceil(t_end / eta) once eta is resolved.
    std::optional<double> t_end;
    GradientMode gradient_mode = GradientMode::fast;
};

// Throws std::invalid_argument on a non-positive fixed eta, zero steps (with
// no t_end) or a zero record stride.
void validate_config(const TrainConfig& cfg);

struct TraceRow {
    std::size_t step = 0;
    double time = 0.0;         // step * eta, or the integrator's clock
    double residual_sq = 0.0;  // ||y - u||^2 == 2 * loss
    double loss = 0.0;
    double gram_lambda_min = 0.0;
    double max_drift = 0.0;    // max_r ||w_r(t) - w_r(0)||
    double total_drift = 0.0;  // ||W(t) - W(0)||_F
};

struct TrainingTrace {
    std::vector<TraceRow> rows;
    double eta = 0.0;
    std::string eta_source;  // "fixed", "auto" or "rk4"
    std::size_t m = 0;
    std::size_t n = 0;
    NetworkState final_state;
};

class DivergenceError : public std::runtime_error {
public:
    DivergenceError(std::size_t step, const std::string& what)
        : std::runtime_error(what), step_(step) {}
    std::size_t step() const { return step_; }

private:
    std::size_t step_;
};

inline constexpr double kDivergenceFactor = 1e6;

// 1 / lambda_max(C[W]).
double auto_step_size(const NetworkState& state, const Activation& act, const Dataset& data);

// Full-batch gradient descent on W with a frozen. Rows are recorded at step
// 0, every record_stride steps and at the final step. Throws DivergenceError
// when the loss becomes non-finite or exceeds 1e6 times its initial value.
TrainingTrace train_gd(const NetworkState& state0, const Activation& act, const Dataset& data,
                       const TrainConfig& cfg);

// Classical fourth-order Runge-Kutta on dW/dt = -grad L(W) up to t_end
// (the last step is shortened to land on t_end exactly).
TrainingTrace integrate_flow(const NetworkState& state0, const Activation& act,
                             const Dataset& data, double t_end, double dt,
                             std::size_t record_stride = 1);

// One RK4 step for y' = f(y). State must support +, and scalar *.
template <class State, class Deriv>
State rk4_step(const Deriv& f, const State& y, double h) {
    const State k1 = f(y);
    const State k2 = f(y + (0.5 * h) * k1);
    const State k3 = f(y + (0.5 * h) * k2);
    const State k4 = f(y + h * k3);
    return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

inline constexpr double kCertificateSlack = 1e-6;

struct CertificateReport {
    bool decay_ok = true;
    // min over checked rows of (e^{-lambda0 t} r0 (1 + 1e-6) - r(t)) / r0
    double decay_margin = 0.0;
    bool drift_ok = true;
    // min over checked rows of (drift bound - max_drift)
    double drift_margin = 0.0;
    bool gram_stability_ok = true;
    // min over rows of (gram_lambda_min - lambda0 / 2)
    double gram_margin = 0.0;
    double drift_bound = 0.0;
    std::optional<std::size_t> first_violation_step;

    bool all_ok() const { return decay_ok && drift_ok && gram_stability_ok; }
};

// Evaluates at every recorded row:
//   (i)   residual_sq(t) <= e^{-lambda0 t} residual_sq(0) (1 + 1e-6)
//   (ii)  max_drift <= sqrt(n) sqrt(residual_sq(0)) / (sqrt(m) lambda0) (1 + 1e-6)
//   (iii) gram_lambda_min > lambda0 / 2
// (i) and (ii) are only assessed on rows where (iii) has held so far, since
// that is their hypothesis. Violations are reported, never thrown.
CertificateReport certify(const TrainingTrace& trace, double lambda0, const Dataset& data);

inline constexpr double kDecayFitFloor = 1e-24;

// Least-squares slope of ln residual_sq against time over the leading rows
// with residual_sq > floor * residual_sq(0); rows past that sit at the
// round-off floor and carry no rate information. Empty when fewer than two
// rows qualify.
std::optional<double> decay_slope(const TrainingTrace& trace, double floor = kDecayFitFloor);

struct LipschitzResult {
    double max_ratio = 0.0;
    std::size_t pairs_evaluated = 0;
    bool ok = false;  // max_ratio <= 1 + 1e-9
};

// max over pairs (W, W') and entries (p, q) of
//   |C_pq(W) - C_pq(W')| sqrt(m) / (4 c1 c2 ||W - W'||).
// Pairs cycle through independent draws, small isotropic perturbations and
// single-row perturbations; identical pairs are skipped.
LipschitzResult gram_lipschitz_check(const Activation& act, const Dataset& data, std::size_t m,
                                     std::size_t pairs, std::uint64_t seed);

inline constexpr const char* kTraceHeader =
    "step,time,residual_sq,loss,gram_lambda_min,max_drift,total_drift";

std::string format_trace(const TrainingTrace& trace);
std::vector<TraceRow> parse_trace(std::string_view text);

}  // namespace gdcert
