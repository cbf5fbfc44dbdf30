// Copyright Contributors to the nff Project
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "nff/gradcheck.hpp"
#include "nff/ops.hpp"

using namespace nff;
using namespace nff::ad;

TEST_CASE("backward requires forward_eval and a scalar root") {
    Var x = make_param(Tensor({3}, std::vector<double>{1, 2, 3}));
    Var y = mul(x, x);
    Var s = sum(y);
    CHECK_THROWS_AS(backward(s), Error); // not evaluated yet
    forward_eval(s);
    CHECK_NOTHROW(backward(s));
    CHECK_THROWS_AS(backward(y), Error); // non-scalar root (y was marked evaluated)
}

TEST_CASE("gradients accumulate through shared subexpressions") {
    Var x = make_param(Tensor({2}, std::vector<double>{3.0, -1.5}));
    // y = x*x + x  =>  dy/dx = 2x + 1
    Var s = sum(add(mul(x, x), x));
    forward_eval(s);
    backward(s);
    CHECK(x->grad[0] == doctest::Approx(7.0));
    CHECK(x->grad[1] == doctest::Approx(-2.0));
}

TEST_CASE("repeated backward starts from zeroed gradients") {
    Var x = make_param(Tensor({2}, std::vector<double>{1.0, 2.0}));
    Var s = sum(mul(x, x));
    forward_eval(s);
    backward(s);
    Tensor g1 = x->grad;
    backward(s);
    CHECK(max_abs_diff(g1, x->grad) == 0.0);
}

TEST_CASE("constants do not receive gradients and block requires_grad") {
    Var x = make_param(Tensor({2}, std::vector<double>{1.0, 2.0}));
    Var c = make_const(Tensor({2}, std::vector<double>{5.0, 5.0}));
    Var s = sum(mul(c, c));
    forward_eval(s);
    CHECK_FALSE(s->requires_grad);
    backward(s); // no differentiable inputs: fine, nothing to pull
    CHECK_FALSE(c->grad_ready);

    Var s2 = sum(mul(x, c));
    forward_eval(s2);
    backward(s2);
    CHECK(x->grad[0] == doctest::Approx(5.0));
    CHECK_FALSE(c->grad_ready);
}

TEST_CASE("detach cuts the graph") {
    Var x = make_param(Tensor({2}, std::vector<double>{2.0, 3.0}));
    Var d = detach(mul(x, x));
    Var s = sum(mul(d, x)); // only the direct x factor is differentiable
    forward_eval(s);
    backward(s);
    CHECK(x->grad[0] == doctest::Approx(4.0)); // d = [4,9]
    CHECK(x->grad[1] == doctest::Approx(9.0));
}

TEST_CASE("graph_size sees shared nodes once") {
    Var x = make_param(Tensor({2}, std::vector<double>{1.0, 1.0}));
    Var y = mul(x, x);
    Var s = sum(add(y, y));
    CHECK(graph_size(s) == 4); // x, y, add, sum
}

TEST_CASE("scalar parameter broadcast multiply routes gradients both ways") {
    Var x = make_param(Tensor({3}, std::vector<double>{1, 2, 3}));
    Var s = make_param(Tensor::scalar(2.0));
    Var r = sum(mul_scalar_var(x, s));
    forward_eval(r);
    backward(r);
    CHECK(scalar_value(r) == doctest::Approx(12.0));
    CHECK(x->grad[1] == doctest::Approx(2.0));
    CHECK(s->grad[0] == doctest::Approx(6.0)); // sum of x
}

TEST_CASE("composite_weights forward matches the explicit recurrence and sums correctly") {
    // alpha = (0.5, 0.5, 1.0): w = (0.5, 0.25, 0.25), total 1
    Var a = make_param(Tensor({1, 3}, std::vector<double>{0.5, 0.5, 1.0}));
    Var w = composite_weights(a);
    CHECK(w->value[0] == doctest::Approx(0.5));
    CHECK(w->value[1] == doctest::Approx(0.25));
    CHECK(w->value[2] == doctest::Approx(0.25));
}

TEST_CASE("gather_rows backward scatters with duplicate accumulation") {
    Var t = make_param(Tensor({3, 2}, std::vector<double>{0, 0, 0, 0, 0, 0}));
    auto idx = std::make_shared<std::vector<int64_t>>(std::vector<int64_t>{1, 1, 2});
    Var g = gather_rows(t, idx);
    Var s = sum(g);
    forward_eval(s);
    backward(s);
    CHECK(t->grad.at(1, 0) == doctest::Approx(2.0));
    CHECK(t->grad.at(2, 0) == doctest::Approx(1.0));
    CHECK(t->grad.at(0, 0) == doctest::Approx(0.0));
}
