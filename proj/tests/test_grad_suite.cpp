// Copyright Contributors to the nff Project
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <chrono>

#include "grad_configs.hpp"

using namespace nff;

TEST_CASE("registry covers at least 100 configurations") {
    auto cfgs = gradsuite::all_configs();
    CHECK(cfgs.size() >= 100);
}

TEST_CASE("every config matches central differences") {
    auto t0 = std::chrono::steady_clock::now();
    auto cfgs = gradsuite::all_configs();
    double worst = 0.0;
    std::string worst_name;
    for (const auto& c : cfgs) {
        auto rep = ad::finite_diff_check(c.build, c.inputs, 1e-4, 24);
        INFO(c.name, " worst ad=", rep.worst_ad, " fd=", rep.worst_fd);
        CHECK(rep.max_rel_err < 1e-3);
        CHECK(rep.probes > 0);
        if (rep.max_rel_err > worst) {
            worst = rep.max_rel_err;
            worst_name = c.name;
        }
    }
    auto secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    MESSAGE("configs=", cfgs.size(), " worst=", worst, " (", worst_name, ") time=", secs, "s");
    CHECK(secs < 300.0);
}
