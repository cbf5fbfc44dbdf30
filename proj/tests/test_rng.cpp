// Copyright Contributors to the nff Project
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "nff/rng.hpp"

using namespace nff;

TEST_CASE("draws are pure functions of (seed, stream, counter)") {
    double a = rng::uniform(42, 7, 1001);
    double b = rng::uniform(42, 7, 1001);
    CHECK(a == b);
    CHECK(rng::uniform(42, 7, 1002) != a);
    CHECK(rng::uniform(42, 8, 1001) != a);
    CHECK(rng::uniform(43, 7, 1001) != a);
}

TEST_CASE("uniform draws look uniform") {
    const int n = 200000;
    double sum = 0.0, sumsq = 0.0, lo = 1.0, hi = 0.0;
    for (int i = 0; i < n; ++i) {
        double u = rng::uniform(123, 5, static_cast<uint64_t>(i));
        sum += u;
        sumsq += u * u;
        lo = std::min(lo, u);
        hi = std::max(hi, u);
    }
    double mean = sum / n;
    double var = sumsq / n - mean * mean;
    CHECK(mean == doctest::Approx(0.5).epsilon(0.01));
    CHECK(var == doctest::Approx(1.0 / 12.0).epsilon(0.02));
    CHECK(lo >= 0.0);
    CHECK(hi < 1.0);
    CHECK(lo < 0.001); // tails are reached
    CHECK(hi > 0.999);
}

TEST_CASE("normal draws have the right moments") {
    const int n = 200000;
    double sum = 0.0, sumsq = 0.0;
    for (int i = 0; i < n; ++i) {
        double z = rng::normal(99, 2, static_cast<uint64_t>(i));
        sum += z;
        sumsq += z * z;
    }
    double mean = sum / n;
    double var = sumsq / n - mean * mean;
    CHECK(std::abs(mean) < 0.01);
    CHECK(var == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("stream resumes bit-exactly from a saved cursor") {
    rng::Stream s{7, 3, 0};
    for (int i = 0; i < 17; ++i) s.next_uniform();
    uint64_t saved = s.cursor;
    std::vector<double> tail;
    for (int i = 0; i < 9; ++i) tail.push_back(s.next_uniform());

    rng::Stream r{7, 3, saved};
    for (int i = 0; i < 9; ++i) CHECK(r.next_uniform() == tail[static_cast<size_t>(i)]);
}

TEST_CASE("index draws cover the range") {
    std::vector<int> hits(13, 0);
    for (int i = 0; i < 13000; ++i) hits[rng::index(1, 1, static_cast<uint64_t>(i), 13)]++;
    for (int h : hits) CHECK(h > 700); // expectation 1000
}
