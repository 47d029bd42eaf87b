#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "gdcert/rng.hpp"

using gdcert::Rng;

TEST(Rng, SameSeedSameStream) {
    Rng a(42);
    Rng b(42);
    for (int i = 0; i < 1000; ++i) {
        ASSERT_EQ(a.normal(), b.normal());
        ASSERT_EQ(a.uniform(), b.uniform());
    }
}

TEST(Rng, UniformStaysInsideOpenInterval) {
    Rng rng(1);
    for (int i = 0; i < 100000; ++i) {
        const double u = rng.uniform();
        ASSERT_GT(u, 0.0);
        ASSERT_LT(u, 1.0);
    }
}

TEST(Rng, NormalMomentsWithinFiveStandardErrors) {
    Rng rng(7);
    const int n = 1000000;
    double s = 0.0;
    double s2 = 0.0;
    double s4 = 0.0;
    for (int i = 0; i < n; ++i) {
        const double g = rng.normal();
        s += g;
        s2 += g * g;
        s4 += g * g * g * g;
    }
    EXPECT_LT(std::abs(s / n), 5.0 / std::sqrt(n));
    // var(g^2) = 2, var(g^4) = 96
    EXPECT_LT(std::abs(s2 / n - 1.0), 5.0 * std::sqrt(2.0 / n));
    EXPECT_LT(std::abs(s4 / n - 3.0), 5.0 * std::sqrt(96.0 / n));
}

TEST(Rng, SignIsBalanced) {
    Rng rng(3);
    const int n = 100000;
    int plus = 0;
    for (int i = 0; i < n; ++i) {
        const double s = rng.sign();
        ASSERT_TRUE(s == 1.0 || s == -1.0);
        plus += s > 0.0;
    }
    EXPECT_LT(std::abs(plus - n / 2), 5.0 * std::sqrt(n / 4.0));
}

TEST(Rng, DerivedSeedsAreDeterministicAndDistinct) {
    std::set<std::uint64_t> seen;
    for (std::uint64_t m : {256u, 1024u, 4096u}) {
        for (std::uint64_t j = 0; j < 100; ++j) {
            ASSERT_EQ(gdcert::derive_seed(9, m, j), gdcert::derive_seed(9, m, j));
            seen.insert(gdcert::derive_seed(9, m, j));
        }
    }
    EXPECT_EQ(seen.size(), 300u);
    EXPECT_NE(gdcert::derive_seed(1, 2, 3), gdcert::derive_seed(2, 2, 3));
    EXPECT_NE(gdcert::derive_seed(1, 2, 3), gdcert::derive_seed(1, 3, 2));
}
