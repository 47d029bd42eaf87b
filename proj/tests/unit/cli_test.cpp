#include <gtest/gtest.h>

#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "gdcert/io.hpp"

namespace fs = std::filesystem;

namespace {

struct Result {
    int status = -1;
    std::string out;
};

Result run(const std::string& args) {
    const std::string cmd = std::string(GDCERT_CLI_PATH) + " " + args + " 2>&1";
    Result r;
    FILE* pipe = popen(cmd.c_str(), "r");
    if (!pipe) return r;
    std::array<char, 4096> buf{};
    while (fgets(buf.data(), buf.size(), pipe)) r.out += buf.data();
    const int raw = pclose(pipe);
    r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
    return r;
}

fs::path write_config(const std::string& name, const std::string& json) {
    const fs::path path = fs::temp_directory_path() / ("gdcert_cli_" + name + ".json");
    std::ofstream(path) << json;
    return path;
}

const char* kTrainConfig = R"({
  "dataset": {"kind": "orthonormal", "n": 4, "d": 4, "kappa": 1.0, "seed": 7},
  "m": 2048,
  "trainer": {"record_stride": 1, "t_end_lambda0_units": 25}
})";

}  // namespace

TEST(Cli, ThresholdPrintsTheoremReport) {
    const auto r = run("threshold --n 10 --delta 0.005 --lambda0 0.05 --kappa 1");
    EXPECT_EQ(r.status, 0);
    EXPECT_NE(r.out.find("m_threshold = 1327048\n"), std::string::npos);
    EXPECT_NE(r.out.find("delta_prime = 0.2171186226180043\n"), std::string::npos);
    EXPECT_NE(r.out.find("c3 = 0.92124590885930024\n"), std::string::npos);
}

TEST(Cli, UsageErrorsExitWithTwo) {
    EXPECT_EQ(run("").status, 2);
    EXPECT_EQ(run("frobnicate").status, 2);
    EXPECT_EQ(run("threshold --n ten").status, 2);
    EXPECT_EQ(run("threshold --delta 0.1").status, 2);
    EXPECT_EQ(run("train --config /nonexistent.json").status, 2);
    EXPECT_EQ(run("train --config " + write_config("bad", R"({"m": 4, "wat": 1})").string()).status, 2);
    EXPECT_EQ(run("--help").status, 0);
}

TEST(Cli, TrainIsByteReproducible) {
    const fs::path cfg = write_config("train", kTrainConfig);
    const fs::path a = fs::temp_directory_path() / "gdcert_cli_train_a";
    const fs::path b = fs::temp_directory_path() / "gdcert_cli_train_b";
    fs::remove_all(a);
    fs::remove_all(b);
    const auto ra = run("train --config " + cfg.string() + " --seed 5 --out " + a.string());
    const auto rb = run("train --config " + cfg.string() + " --seed 5 --out " + b.string());
    EXPECT_EQ(ra.status, 0) << ra.out;
    EXPECT_EQ(rb.status, 0);
    EXPECT_EQ(ra.out, rb.out);
    EXPECT_EQ(gdcert::read_file(a / "trace.csv"), gdcert::read_file(b / "trace.csv"));
    EXPECT_NE(ra.out.find("certificates = pass"), std::string::npos);
    const auto rc = run("train --config " + cfg.string() + " --seed 6");
    EXPECT_NE(ra.out, rc.out);
}

TEST(Cli, GramReportsLambda0) {
    const auto r = run("gram --config " + write_config("gram", kTrainConfig).string());
    EXPECT_EQ(r.status, 0);
    const auto pos = r.out.find("lambda0 = ");
    ASSERT_NE(pos, std::string::npos);
    EXPECT_NEAR(std::stod(r.out.substr(pos + 10)), 0.29337903585809296274, 1e-15);
}

TEST(Cli, SweepPrintsStableSchema) {
    const fs::path cfg = write_config("sweep", R"({
      "dataset": {"kind": "orthonormal", "n": 4, "d": 4, "seed": 7},
      "m_grid": [512, 256], "trials": 2, "workers": 2,
      "trainer": {"record_stride": 1, "t_end_lambda0_units": 5}
    })");
    const auto r = run("sweep --config " + cfg.string());
    EXPECT_EQ(r.status, 0);
    EXPECT_EQ(r.out.rfind("m,trials,success_count,success_rate,mean_final_residual_sq,mean_gram_lambda_min0\n256,2,", 0), 0u)
        << r.out;
}

TEST(Cli, LazyReport) {
    const fs::path cfg = write_config("lazy", R"({
      "dataset": {"kind": "sphere_random", "n": 5, "d": 3, "seed": 2}, "m": 5, "trials": 10
    })");
    const auto r = run("lazy --config " + cfg.string());
    EXPECT_EQ(r.status, 0);
    EXPECT_NE(r.out.find("invertibility_rate = 1\n"), std::string::npos);
}

TEST(Cli, VerifyExitStatusTracksSuites) {
    EXPECT_EQ(run("verify").status, 0);
    const auto g = run("verify --inject-gradient-perturbation 1e-3");
    EXPECT_EQ(g.status, 1);
    EXPECT_NE(g.out.find("gradient_finite_difference = FAIL"), std::string::npos);
    const auto c = run("verify --declare-softplus-c2 0.2");
    EXPECT_EQ(c.status, 1);
    EXPECT_NE(c.out.find("activation_assumptions = FAIL"), std::string::npos);
}
