#include "evtfair/error.hpp"
#include "evtfair/statcompare.hpp"

#include <gtest/gtest.h>

#include <random>
#include <vector>

using namespace evtfair;

using V = std::vector<double>;

TEST(CliffsDelta, Examples) {
    EXPECT_EQ(cliffs_delta(V{1, 2, 3}, V{1, 2, 3}), 0.0);
    EXPECT_EQ(cliffs_delta(V{4, 5, 6}, V{1, 2, 3}), 1.0);
    EXPECT_EQ(cliffs_delta(V{1, 2, 3}, V{4, 5, 6}), -1.0);
    // Pairs (1,2) (1,3) (2,3) are a < b and (2,2) is a tie: (0 - 3) / 4.
    EXPECT_EQ(cliffs_delta(V{1, 2}, V{2, 3}), -0.75);
}

TEST(CliffsDelta, EmptyInput) {
    try {
        cliffs_delta(V{}, V{1});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::EmptyInput);
    }
}

TEST(CliffsDelta, MatchesPairEnumeration) {
    std::mt19937_64 rng(1);
    std::uniform_int_distribution<int> d(0, 9);
    for (int t = 0; t < 50; ++t) {
        V a(1 + t % 7), b(1 + t % 5);
        for (auto& x : a) x = d(rng);
        for (auto& x : b) x = d(rng);
        double gt = 0, lt = 0;
        for (double x : a)
            for (double y : b) {
                gt += x > y;
                lt += x < y;
            }
        const double oracle = (gt - lt) / double(a.size() * b.size());
        EXPECT_DOUBLE_EQ(cliffs_delta(a, b), oracle);
        EXPECT_DOUBLE_EQ(cliffs_delta(b, a), -oracle);
        EXPECT_LE(std::abs(oracle), 1.0);
    }
}

TEST(Magnitude, Cutpoints) {
    EXPECT_EQ(cliffs_magnitude(0.1), Magnitude::Negligible);
    EXPECT_EQ(cliffs_magnitude(-0.147), Magnitude::Small);
    EXPECT_EQ(cliffs_magnitude(0.33), Magnitude::Medium);
    EXPECT_EQ(cliffs_magnitude(-0.474), Magnitude::Large);
    EXPECT_EQ(magnitude_from_string(to_string(Magnitude::Medium)), Magnitude::Medium);
}

TEST(BootstrapTest, IdenticalConstants) {
    const V a(20, 3.0);
    const auto r = bootstrap_test(a, a, 500, 0.05, 1);
    EXPECT_EQ(r.bootstrap_ci.first, 0.0);
    EXPECT_EQ(r.bootstrap_ci.second, 0.0);
    EXPECT_FALSE(r.significant);
    EXPECT_EQ(r.magnitude, Magnitude::Negligible);
}

TEST(BootstrapTest, ClearGap) {
    std::mt19937_64 rng(2);
    std::normal_distribution<double> noise(0.0, 1.0);
    V a(100), b(100);
    for (auto& x : a) x = 10 + noise(rng);
    for (auto& x : b) x = noise(rng);
    const auto r = bootstrap_test(a, b, 1000, 0.05, 3);
    EXPECT_TRUE(r.significant);
    EXPECT_GT(r.bootstrap_ci.first, 9.0);
    EXPECT_LT(r.bootstrap_ci.second, 11.0);
    EXPECT_EQ(r.cliffs_delta, 1.0);
    EXPECT_EQ(r.magnitude, Magnitude::Large);
}

TEST(BootstrapTest, DeterministicPerSeed) {
    const V a{1, 2, 3, 4, 5}, b{2, 3, 4, 5, 9};
    const auto x = bootstrap_test(a, b, 300, 0.1, 7), y = bootstrap_test(a, b, 300, 0.1, 7);
    EXPECT_EQ(x.bootstrap_ci, y.bootstrap_ci);
    EXPECT_LE(x.bootstrap_ci.first, x.bootstrap_ci.second);
}

TEST(BootstrapTest, WidthShrinksWithSampleSize) {
    std::mt19937_64 rng(4);
    std::normal_distribution<double> d;
    const auto width = [&](std::size_t n) {
        V a(n), b(n);
        for (auto& x : a) x = d(rng);
        for (auto& x : b) x = d(rng);
        const auto r = bootstrap_test(a, b, 1000, 0.05, 5);
        return r.bootstrap_ci.second - r.bootstrap_ci.first;
    };
    EXPECT_GT(width(20), width(2000));
}

TEST(BootstrapTest, Preconditions) {
    EXPECT_THROW(bootstrap_test(V{}, V{1}, 200, 0.05, 1), Error);
    EXPECT_THROW(bootstrap_test(V{1}, V{1}, 50, 0.05, 1), Error);
    EXPECT_THROW(bootstrap_test(V{1}, V{1}, 200, 1.5, 1), Error);
}
