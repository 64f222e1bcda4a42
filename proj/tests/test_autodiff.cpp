//
// molvae - Copyright 2026 the molvae authors
// SPDX-License-Identifier: Apache-2.0
//
#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "molvae/optim.hpp"
#include "molvae/tape.hpp"
#include "molvae/tensor.hpp"
#include "support/helpers.hpp"

using namespace molvae::ad;
using molvae::Rng;
using Catch::Approx;

namespace {

Tensor random_tensor(std::vector<int> shape, Rng& rng, double scale = 1.0) {
  Tensor t = Tensor::zeros(std::move(shape));
  for (auto& v : t.data) v = scale * rng.normal();
  return t;
}

}  // namespace

TEST_CASE("primitive forward values") {
  Tape tape;

  SECTION("softmax rows sum to one") {
    Rng rng(1);
    for (int i = 0; i < 20; ++i) {
      Tape::Ref x = tape.constant(random_tensor({1, 7}, rng, 3.0));
      const Tensor& s = tape.value(tape.softmax(x));
      double sum = 0.0;
      for (double v : s.data) sum += v;
      CHECK(sum == Approx(1.0).margin(1e-12));
    }
  }

  SECTION("matmul shape algebra") {
    Rng rng(2);
    Tape::Ref a = tape.constant(random_tensor({2, 3}, rng));
    Tape::Ref b = tape.constant(random_tensor({3, 4}, rng));
    CHECK(tape.value(tape.matmul(a, b)).shape == std::vector<int>{2, 4});
    Tape::Ref bad = tape.constant(random_tensor({2, 4}, rng));
    CHECK_THROWS_AS(tape.matmul(a, bad), ShapeError);
  }

  SECTION("fixed points") {
    Tape::Ref zero = tape.constant(Tensor::scalar(0.0));
    CHECK(tape.value(tape.sigmoid(zero)).item() == Approx(0.5));
    CHECK(tape.value(tape.tanh(zero)).item() == Approx(0.0));
    CHECK(tape.value(tape.exp(zero)).item() == Approx(1.0));
  }

  SECTION("broadcast add over leading dimension") {
    Tape::Ref a = tape.constant(Tensor({2, 3}, {1, 2, 3, 4, 5, 6}));
    Tape::Ref bias = tape.constant(Tensor({3}, {10, 20, 30}));
    const Tensor& out = tape.value(tape.add(a, bias));
    CHECK(out.data == std::vector<double>{11, 22, 33, 14, 25, 36});
  }

  SECTION("concat and slice are inverses on the last dim") {
    Rng rng(3);
    Tape::Ref a = tape.constant(random_tensor({2, 3}, rng));
    Tape::Ref b = tape.constant(random_tensor({2, 2}, rng));
    Tape::Ref cat = tape.concat({a, b});
    CHECK(tape.value(cat).shape == std::vector<int>{2, 5});
    CHECK(tape.value(tape.slice(cat, 0, 3)).data == tape.value(a).data);
    CHECK(tape.value(tape.slice(cat, 3, 5)).data == tape.value(b).data);
  }

  SECTION("non-finite values are trapped") {
    Tape::Ref zero = tape.constant(Tensor::scalar(0.0));
    CHECK_THROWS_AS(tape.log(zero), NonFiniteError);
    Tape::Ref neg = tape.constant(Tensor::scalar(-1.0));
    CHECK_THROWS_AS(tape.log(neg), NonFiniteError);
    CHECK_THROWS_AS(tape.constant(Tensor::scalar(std::nan(""))), NonFiniteError);
  }
}

TEST_CASE("backward") {
  SECTION("d(x^2)/dx at 3 is 6") {
    Tape tape;
    Tape::Ref x = tape.leaf(Tensor::scalar(3.0));
    tape.backward(tape.sum(tape.square(x)));
    CHECK(tape.grad(x).item() == Approx(6.0));
  }

  SECTION("gradient of sum(sigmoid(Wx)) matches finite differences") {
    Rng rng(7);
    ParamStore params;
    params.add("W", random_tensor({4, 4}, rng));
    const Tensor x = random_tensor({4, 1}, rng);

    auto eval = [&]() {
      Tape tape;
      TapeEngine e(tape, params);
      return e.val(e.sum(e.sigmoid(e.matmul(e.param("W"), e.constant(x))))).item();
    };

    Tape tape;
    TapeEngine e(tape, params);
    tape.backward(e.sum(e.sigmoid(e.matmul(e.param("W"), e.constant(x)))));
    const GradVector grads = e.collect_grads();
    for (std::size_t i = 0; i < 16; ++i) {
      const double fd = testsupport::central_diff(params, 0, i, eval);
      CHECK(testsupport::close_rel(grads[0].data[i], fd, 1e-6));
    }
  }

  SECTION("unused parameters get zero gradients") {
    Rng rng(8);
    ParamStore params;
    params.add("used", random_tensor({2, 2}, rng));
    params.add("unused", random_tensor({3, 3}, rng));
    Tape tape;
    TapeEngine e(tape, params);
    tape.backward(e.sum(e.square(e.param("used"))));
    const GradVector grads = e.collect_grads();
    CHECK(grads[1].shape == std::vector<int>{3, 3});
    for (double v : grads[1].data) CHECK(v == 0.0);
  }

  SECTION("repeated use of a value sums its contributions") {
    Tape tape;
    Tape::Ref x = tape.leaf(Tensor::scalar(2.0));
    // f = x*x + x  ->  df/dx = 2x + 1 = 5
    Tape::Ref f = tape.add(tape.mul(x, x), x);
    tape.backward(f);
    CHECK(tape.grad(x).item() == Approx(5.0));
  }

  SECTION("backward requires a scalar") {
    Tape tape;
    Tape::Ref x = tape.leaf(Tensor({2}, {1.0, 2.0}));
    CHECK_THROWS_AS(tape.backward(x), ShapeError);
  }
}

TEST_CASE("per-primitive gradients match finite differences") {
  Rng rng(21);
  struct Case {
    const char* name;
    std::function<Tape::Ref(TapeEngine&, Tape::Ref)> build;
  };
  const std::vector<Case> cases{
      {"sigmoid", [](TapeEngine& e, Tape::Ref x) { return e.sum(e.sigmoid(x)); }},
      {"tanh", [](TapeEngine& e, Tape::Ref x) { return e.sum(e.tanh(x)); }},
      {"exp", [](TapeEngine& e, Tape::Ref x) { return e.sum(e.exp(x)); }},
      {"square", [](TapeEngine& e, Tape::Ref x) { return e.sum(e.square(x)); }},
      {"affine", [](TapeEngine& e, Tape::Ref x) { return e.sum(e.affine(x, -2.5, 1.0)); }},
      {"softmax",
       [](TapeEngine& e, Tape::Ref x) {
         // weighted sum keeps the output sensitive to every coordinate
         Tensor w = Tensor::zeros({1, 6});
         for (int i = 0; i < 6; ++i) w.data[i] = 0.3 * (i + 1);
         return e.sum(e.mul(e.softmax(x), e.constant(w)));
       }},
      {"log_softmax",
       [](TapeEngine& e, Tape::Ref x) {
         Tensor w = Tensor::zeros({1, 6});
         for (int i = 0; i < 6; ++i) w.data[i] = 0.2 * (i - 2);
         return e.sum(e.mul(e.log_softmax(x), e.constant(w)));
       }},
      {"mean", [](TapeEngine& e, Tape::Ref x) { return e.mean(e.square(x)); }},
      {"slice", [](TapeEngine& e, Tape::Ref x) { return e.sum(e.square(e.slice(x, 1, 4))); }},
      {"mul-self", [](TapeEngine& e, Tape::Ref x) { return e.sum(e.mul(x, x)); }},
      {"log",
       [](TapeEngine& e, Tape::Ref x) {
         return e.sum(e.log(e.affine(e.sigmoid(x), 1.0, 0.05)));
       }},
      {"clamp-inside", [](TapeEngine& e, Tape::Ref x) {
         return e.sum(e.square(e.clamp(x, -50.0, 50.0)));
       }},
  };
  for (const auto& c : cases) {
    DYNAMIC_SECTION(c.name) {
      for (int trial = 0; trial < 10; ++trial) {
        ParamStore params;
        params.add("x", random_tensor({1, 6}, rng));
        auto eval = [&]() {
          Tape tape;
          TapeEngine e(tape, params);
          return e.val(c.build(e, e.param("x"))).item();
        };
        Tape tape;
        TapeEngine e(tape, params);
        tape.backward(c.build(e, e.param("x")));
        const GradVector grads = e.collect_grads();
        for (std::size_t i = 0; i < 6; ++i) {
          const double fd = testsupport::central_diff(params, 0, i, eval);
          INFO(c.name << " trial " << trial << " coord " << i);
          CHECK(testsupport::close_rel(grads[0].data[i], fd, 1e-6));
        }
      }
    }
  }
}

TEST_CASE("tape determinism and composability") {
  SECTION("identical inputs give bit-identical outputs and gradients") {
    Rng rng(31);
    ParamStore params;
    params.add("W", random_tensor({5, 5}, rng));
    const Tensor x = random_tensor({1, 5}, rng);
    auto run = [&]() {
      Tape tape;
      TapeEngine e(tape, params);
      Tape::Ref out = e.sum(e.tanh(e.matmul(e.constant(x), e.param("W"))));
      tape.backward(out);
      return std::make_pair(e.val(out).item(), e.collect_grads());
    };
    const auto a = run();
    const auto b = run();
    CHECK(a.first == b.first);
    CHECK(a.second[0].data == b.second[0].data);
  }

  SECTION("gradient of independent subgraphs equals their separate gradients") {
    Rng rng(32);
    ParamStore params;
    params.add("a", random_tensor({1, 4}, rng));
    params.add("b", random_tensor({1, 4}, rng));

    Tape joint;
    TapeEngine je(joint, params);
    joint.backward(je.add(je.sum(je.sigmoid(je.param("a"))),
                          je.sum(je.square(je.param("b")))));
    const GradVector jg = je.collect_grads();

    Tape ta;
    TapeEngine ea(ta, params);
    ta.backward(ea.sum(ea.sigmoid(ea.param("a"))));
    Tape tb;
    TapeEngine eb(tb, params);
    tb.backward(eb.sum(eb.square(eb.param("b"))));
    CHECK(jg[0].data == ea.collect_grads()[0].data);
    CHECK(jg[1].data == eb.collect_grads()[1].data);
  }

  SECTION("eval engine matches tape values bitwise") {
    Rng rng(33);
    ParamStore params;
    params.add("W", random_tensor({6, 6}, rng));
    const Tensor x = random_tensor({1, 6}, rng);
    Tape tape;
    TapeEngine te(tape, params);
    const double tv =
        te.val(te.sum(te.log_softmax(te.matmul(te.constant(x), te.param("W"))))).item();
    EvalEngine ee(params);
    const double ev =
        ee.val(ee.sum(ee.log_softmax(ee.matmul(ee.constant(x), ee.param("W"))))).item();
    CHECK(tv == ev);
  }
}

TEST_CASE("adam") {
  SECTION("zero gradients leave parameters unchanged") {
    ParamStore params;
    params.add("w", Tensor({2, 2}, {1.0, -2.0, 3.0, -4.0}));
    const std::vector<double> before = params.value(0).data;
    AdamState adam(params, AdamConfig{});
    adam.step(params, zero_grads(params));
    CHECK(params.value(0).data == before);
  }

  SECTION("first step moves by about -lr * sign(g)") {
    for (double lr : {1e-3, 0.05}) {
      ParamStore params;
      params.add("w", Tensor({4}, {0.0, 0.0, 0.0, 0.0}));
      AdamState adam(params, AdamConfig{lr, 0.9, 0.999, 1e-8});
      GradVector g{Tensor({4}, {0.5, -3.0, 10.0, -0.01})};
      adam.step(params, g);
      for (int i = 0; i < 4; ++i) {
        const double expected = -lr * (g[0].data[i] > 0 ? 1.0 : -1.0);
        CHECK(params.value(0).data[i] == Approx(expected).epsilon(1e-4));
      }
    }
  }

  SECTION("identical runs produce identical parameters") {
    auto run = [&]() {
      Rng rng(44);
      ParamStore params;
      params.add("w", random_tensor({3, 3}, rng));
      AdamState adam(params, AdamConfig{});
      for (int step = 0; step < 5; ++step) {
        GradVector g{random_tensor({3, 3}, rng)};
        adam.step(params, g);
      }
      return params.value(0).data;
    };
    CHECK(run() == run());
  }

  SECTION("step counter advances") {
    ParamStore params;
    params.add("w", Tensor({1}, {0.0}));
    AdamState adam(params, AdamConfig{});
    adam.step(params, zero_grads(params));
    adam.step(params, zero_grads(params));
    CHECK(adam.step_count() == 2);
  }
}

TEST_CASE("scaled uniform initialization") {
  Rng rng(55);
  ParamStore params;
  params.add("W", Tensor::zeros({30, 50}));
  params.add("b", Tensor::zeros({50}));
  init_uniform_scaled(params, rng);
  const double bound = std::sqrt(6.0 / (30 + 50));
  double max_abs = 0.0;
  for (double v : params.value(0).data) max_abs = std::max(max_abs, std::abs(v));
  CHECK(max_abs <= bound);
  CHECK(max_abs > 0.5 * bound);  // actually fills the range
  for (double v : params.value(1).data) CHECK(v == 0.0);
}
