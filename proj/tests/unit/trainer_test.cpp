#include <gtest/gtest.h>

#include <cmath>
#include <stdexcept>

#include "gdcert/gram.hpp"
#include "gdcert/harness.hpp"
#include "gdcert/linalg.hpp"
#include "gdcert/trainer.hpp"
#include "support/oracles.hpp"

using namespace gdcert;

namespace {

struct Instance {
    Dataset data = gen_dataset(DatasetKind::orthonormal, 4, 4, 1.0, 7);
    Activation act = softplus();
    double lam0 = lambda0(data, act);
};

TrainingTrace synthetic(const std::vector<TraceRow>& rows, std::size_t m) {
    TrainingTrace t;
    t.rows = rows;
    t.m = m;
    t.n = 4;
    return t;
}

}  // namespace

TEST(TrainConfig, RejectsBadValues) {
    TrainConfig c;
    c.eta_policy = EtaPolicy::fixed;
    c.eta = 0.0;
    EXPECT_THROW(validate_config(c), std::invalid_argument);
    c.eta = 0.1;
    c.steps = 0;
    EXPECT_THROW(validate_config(c), std::invalid_argument);
    c.steps = 3;
    c.record_stride = 0;
    EXPECT_THROW(validate_config(c), std::invalid_argument);
    c.record_stride = 1;
    EXPECT_NO_THROW(validate_config(c));
}

TEST(TrainGd, RecordsInitialStrideAndFinalRows) {
    Instance in;
    TrainConfig c;
    c.eta_policy = EtaPolicy::fixed;
    c.eta = 0.5;
    c.steps = 23;
    c.record_stride = 10;
    const auto trace = train_gd(init_state(256, 4, 1), in.act, in.data, c);
    ASSERT_EQ(trace.rows.size(), 4u);
    EXPECT_EQ(trace.rows[0].step, 0u);
    EXPECT_EQ(trace.rows[1].step, 10u);
    EXPECT_EQ(trace.rows[2].step, 20u);
    EXPECT_EQ(trace.rows[3].step, 23u);
    EXPECT_DOUBLE_EQ(trace.rows[3].time, 23 * 0.5);
    EXPECT_EQ(trace.eta_source, "fixed");
    EXPECT_EQ(trace.rows[0].max_drift, 0.0);
    EXPECT_DOUBLE_EQ(trace.rows[0].residual_sq, 2.0 * trace.rows[0].loss);
}

TEST(TrainGd, IsDeterministic) {
    Instance in;
    TrainConfig c;
    c.steps = 15;
    c.record_stride = 1;
    const auto a = train_gd(init_state(512, 4, 3), in.act, in.data, c);
    const auto b = train_gd(init_state(512, 4, 3), in.act, in.data, c);
    EXPECT_EQ(format_trace(a), format_trace(b));
    EXPECT_EQ(a.final_state.W, b.final_state.W);
}

TEST(TrainGd, AutoStepAndTimeHorizon) {
    Instance in;
    const NetworkState s0 = init_state(1024, 4, 5);
    TrainConfig c;
    c.t_end = 25.0 / in.lam0;
    c.record_stride = 1;
    const auto trace = train_gd(s0, in.act, in.data, c);
    EXPECT_EQ(trace.eta_source, "auto");
    const double lmax = lambda_min_symmetric(empirical_gram_matrix(s0, in.act, in.data)).lambda_max;
    EXPECT_DOUBLE_EQ(trace.eta, 1.0 / lmax);
    EXPECT_EQ(trace.rows.back().step, static_cast<std::size_t>(std::ceil(*c.t_end / trace.eta)));
    EXPECT_GE(trace.rows.back().time, *c.t_end);
}

TEST(TrainGd, LossDecreasesMonotonicallyAboveTheFloor) {
    Instance in;
    TrainConfig c;
    c.steps = 40;
    c.record_stride = 1;
    const auto trace = train_gd(init_state(8192, 4, 11), in.act, in.data, c);
    const double r0 = trace.rows.front().residual_sq;
    for (std::size_t k = 1; k < trace.rows.size(); ++k) {
        if (trace.rows[k - 1].residual_sq < 1e-24 * r0) break;
        EXPECT_LT(trace.rows[k].residual_sq, trace.rows[k - 1].residual_sq) << "step " << k;
    }
}

TEST(TrainGd, DivergenceIsReported) {
    Instance in;
    TrainConfig c;
    c.eta_policy = EtaPolicy::fixed;
    c.eta = 1e4;
    c.steps = 200;
    try {
        train_gd(init_state(64, 4, 2), in.act, in.data, c);
        FAIL() << "expected divergence";
    } catch (const DivergenceError& e) {
        EXPECT_GE(e.step(), 1u);
    }
}

TEST(Certify, AcceptsCertifiedRun) {
    Instance in;
    TrainConfig c;
    c.t_end = 25.0 / in.lam0;
    c.record_stride = 1;
    const auto trace = train_gd(init_state(8192, 4, 1), in.act, in.data, c);
    const auto rep = certify(trace, in.lam0, in.data);
    EXPECT_TRUE(rep.all_ok());
    EXPECT_FALSE(rep.first_violation_step.has_value());
    EXPECT_GT(rep.gram_margin, 0.0);
    EXPECT_NEAR(rep.drift_bound,
                2.0 * std::sqrt(trace.rows[0].residual_sq) / (std::sqrt(8192.0) * in.lam0), 1e-15);
    const auto slope = decay_slope(trace);
    ASSERT_TRUE(slope.has_value());
    EXPECT_LE(*slope, -0.98 * in.lam0);
}

TEST(Certify, FlagsEachViolation) {
    const double lam0 = 0.3;
    // decay too slow at step 1
    auto rep = certify(synthetic({{0, 0.0, 1.0, 0.5, 0.3, 0.0, 0.0},
                                  {1, 1.0, 0.9, 0.45, 0.3, 0.0, 0.0}}, 4096),
                       lam0, gen_dataset(DatasetKind::orthonormal, 4, 4, 1.0, 1));
    EXPECT_FALSE(rep.decay_ok);
    EXPECT_TRUE(rep.drift_ok);
    EXPECT_EQ(rep.first_violation_step, 1u);
    // drift beyond sqrt(n) sqrt(r0) / (sqrt(m) lambda0) = 2 / (64 * 0.3)
    rep = certify(synthetic({{0, 0.0, 1.0, 0.5, 0.3, 0.0, 0.0},
                             {1, 1.0, 0.5, 0.25, 0.3, 0.2, 0.2}}, 4096),
                  lam0, gen_dataset(DatasetKind::orthonormal, 4, 4, 1.0, 1));
    EXPECT_TRUE(rep.decay_ok);
    EXPECT_FALSE(rep.drift_ok);
    // gram collapse at step 2; later rows are outside the hypothesis
    rep = certify(synthetic({{0, 0.0, 1.0, 0.5, 0.3, 0.0, 0.0},
                             {1, 1.0, 0.5, 0.25, 0.3, 0.0, 0.0},
                             {2, 2.0, 0.9, 0.45, 0.1, 0.0, 0.0}}, 4096),
                  lam0, gen_dataset(DatasetKind::orthonormal, 4, 4, 1.0, 1));
    EXPECT_FALSE(rep.gram_stability_ok);
    EXPECT_TRUE(rep.decay_ok);
    EXPECT_EQ(rep.first_violation_step, 2u);
    EXPECT_THROW(certify(synthetic({}, 1), lam0, gen_dataset(DatasetKind::orthonormal, 4, 4, 1.0, 1)),
                 std::invalid_argument);
}

TEST(DecaySlope, RecoversExactExponential) {
    std::vector<TraceRow> rows;
    for (std::size_t k = 0; k < 20; ++k) {
        rows.push_back({k, 0.5 * k, 3.0 * std::exp(-0.7 * 0.5 * k), 0.0, 1.0, 0.0, 0.0});
    }
    const auto slope = decay_slope(synthetic(rows, 1));
    ASSERT_TRUE(slope.has_value());
    EXPECT_NEAR(*slope, -0.7, 1e-12);
    rows.resize(1);
    EXPECT_FALSE(decay_slope(synthetic(rows, 1)).has_value());
}

TEST(Rk4, FourthOrderOnLinearSystemAgainstMatrixExponential) {
    const Matrix m{{2.0, 0.5, 0.0}, {0.5, 1.0, 0.3}, {0.0, 0.3, 0.5}};
    const Matrix y0{{1.0}, {-1.0}, {0.5}};
    const double t = 2.0;
    Matrix neg = m;
    neg *= -t;
    const Matrix exact = matmul(oracle::expm(neg), y0);
    const auto f = [&](const Matrix& y) {
        Matrix d = matmul(m, y);
        d *= -1.0;
        return d;
    };
    double prev = 0.0;
    for (int steps : {40, 80, 160}) {
        Matrix y = y0;
        for (int k = 0; k < steps; ++k) y = rk4_step(f, y, t / steps);
        const double err = max_abs(y - exact);
        if (prev > 0.0) EXPECT_NEAR(prev / err, 16.0, 2.0);
        prev = err;
    }
}

TEST(IntegrateFlow, StepHalvingConvergesAtFourthOrder) {
    Instance in;
    const NetworkState s0 = init_state(512, 4, 8);
    const double t_end = 10.0;
    const auto final_residual = [&](double dt) {
        return integrate_flow(s0, in.act, in.data, t_end, dt, 1000000).rows.back().residual_sq;
    };
    const double r1 = final_residual(1.0);
    const double r2 = final_residual(0.5);
    const double r4 = final_residual(0.25);
    EXPECT_NEAR((r1 - r2) / (r2 - r4), 16.0, 3.0);
}

TEST(IntegrateFlow, EndsExactlyAtHorizon) {
    Instance in;
    const auto trace = integrate_flow(init_state(64, 4, 8), in.act, in.data, 1.05, 0.1);
    EXPECT_EQ(trace.eta_source, "rk4");
    EXPECT_DOUBLE_EQ(trace.rows.back().time, 1.05);
    EXPECT_EQ(integrate_flow(init_state(64, 4, 8), in.act, in.data, 0.0, 0.1).rows.size(), 1u);
    EXPECT_THROW(integrate_flow(init_state(64, 4, 8), in.act, in.data, 1.0, 0.0), std::invalid_argument);
}

TEST(IntegrateFlow, SmallStepGradientDescentTracksTheFlow) {
    Instance in;
    const NetworkState s0 = init_state(2048, 4, 9);
    const double lmax = lambda_min_symmetric(empirical_gram_matrix(s0, in.act, in.data)).lambda_max;
    TrainConfig c;
    c.eta_policy = EtaPolicy::fixed;
    c.eta = 0.1 / lmax;
    c.t_end = 1.0;
    const auto gd = train_gd(s0, in.act, in.data, c);
    const auto flow = integrate_flow(s0, in.act, in.data, gd.rows.back().time, 0.01);
    const double a = gd.rows.back().residual_sq;
    const double b = flow.rows.back().residual_sq;
    EXPECT_LT(std::abs(a - b) / b, 0.05);
}

TEST(TraceFormat, RoundTripsAtFullPrecision) {
    Instance in;
    TrainConfig c;
    c.steps = 5;
    c.record_stride = 1;
    const auto trace = train_gd(init_state(128, 4, 4), in.act, in.data, c);
    const std::string text = format_trace(trace);
    EXPECT_EQ(text.substr(0, text.find('\n')), kTraceHeader);
    const auto rows = parse_trace(text);
    ASSERT_EQ(rows.size(), trace.rows.size());
    for (std::size_t k = 0; k < rows.size(); ++k) {
        EXPECT_EQ(rows[k].residual_sq, trace.rows[k].residual_sq);
        EXPECT_EQ(rows[k].max_drift, trace.rows[k].max_drift);
    }
    EXPECT_THROW(parse_trace("a,b\n1,2\n"), std::runtime_error);
}

TEST(Lipschitz, GramEntriesRespectTheLipschitzBound) {
    const Dataset data = gen_dataset(DatasetKind::sphere_random, 4, 3, 1.0, 70);
    const auto res = gram_lipschitz_check(softplus(), data, 64, 500, 71);
    EXPECT_TRUE(res.ok);
    EXPECT_EQ(res.pairs_evaluated, 500u);
    EXPECT_GT(res.max_ratio, 0.0);
}
