#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "gdcert/dataset.hpp"
#include "gdcert/io.hpp"

using namespace gdcert;

namespace {

Dataset small() {
    Dataset d;
    d.inputs = Matrix{{1.0, 0.0}, {0.0, 0.5}};
    d.targets = {0.3, -0.9};
    d.kappa = 1.0;
    return d;
}

std::string violated(const Dataset& d) {
    try {
        validate_dataset(d);
    } catch (const DatasetError& e) {
        return e.invariant();
    }
    return "";
}

std::filesystem::path temp_file(const std::string& name, const std::string& content) {
    const auto path = std::filesystem::temp_directory_path() / ("gdcert_ds_" + name);
    std::ofstream(path) << content;
    return path;
}

}  // namespace

TEST(Dataset, ValidPasses) { EXPECT_EQ(violated(small()), ""); }

TEST(Dataset, EachInvariantIsNamed) {
    Dataset d = small();
    d.targets.pop_back();
    EXPECT_EQ(violated(d), "shape");

    d = small();
    d.inputs(0, 1) = NAN;
    EXPECT_EQ(violated(d), "finite");

    d = small();
    d.inputs(1, 1) = 1.5;
    EXPECT_EQ(violated(d), "norm_bound");

    d = small();
    d.inputs(1, 0) = 1.0;
    d.inputs(1, 1) = 0.0;
    EXPECT_EQ(violated(d), "distinct");

    d = small();
    d.targets[0] = 1.0;  // the bound is strict
    EXPECT_EQ(violated(d), "target_bound");
}

TEST(Dataset, NormBoundAllowsRoundOff) {
    Dataset d = small();
    d.inputs(0, 0) = 1.0 + 1e-13;
    EXPECT_EQ(violated(d), "");
}

TEST(Dataset, FileRoundTrip) {
    const Dataset d = small();
    const auto path = temp_file("roundtrip.csv", format_dataset(d));
    const Dataset back = load_dataset(path, 1.0);
    EXPECT_EQ(back.inputs, d.inputs);
    EXPECT_EQ(back.targets, d.targets);
}

TEST(Dataset, FileErrorsNameTheInvariant) {
    try {
        load_dataset(temp_file("far.csv", "x1,x2,y\n0.9,0.9,0.1\n0,1,0.2\n"), 1.0);
        FAIL() << "expected a norm_bound error";
    } catch (const DatasetError& e) {
        EXPECT_EQ(e.invariant(), "norm_bound");
    }
    try {
        load_dataset(temp_file("nohead.csv", "0.1,0.2,0.3\n"), 1.0);
        FAIL() << "expected a header error";
    } catch (const DatasetError& e) {
        EXPECT_EQ(e.invariant(), "header");
    }
    try {
        load_dataset(temp_file("ragged.csv", "x1,x2,y\n0.1,0.2,0.3\n0.1,0.3\n"), 1.0);
        FAIL() << "expected a shape error";
    } catch (const DatasetError& e) {
        EXPECT_EQ(e.invariant(), "shape");
    }
}
