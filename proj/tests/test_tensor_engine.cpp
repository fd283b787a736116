#include <cmath>

#include "doctest.h"
#include "testutil.hpp"
#include "webcolor/errors.hpp"
#include "webcolor/tensor.hpp"

using namespace webcolor;
using namespace webcolor::testutil;

namespace {

Param make_param(const std::string& name, Shape shape, Rng& rng,
                 double scale = 1.0) {
  Param p(name, std::move(shape));
  for (double& v : p.value) v = rng.normal(0.0, scale);
  return p;
}

}  // namespace

TEST_CASE("matmul against identity and hand values") {
  Tape tape;
  Tensor a = tape.constant({2, 2}, {1, 2, 3, 4});
  Tensor eye = tape.constant({2, 2}, {1, 0, 0, 1});
  CHECK(matmul(a, eye).values() == std::vector<double>{1, 2, 3, 4});
  Tensor b = tape.constant({2, 3}, {1, 2, 3, 4, 5, 6});
  CHECK(matmul(a, b).values() == std::vector<double>{9, 12, 15, 19, 26, 33});
  CHECK_THROWS_AS(matmul(a, tape.constant({3, 2}, {0, 0, 0, 0, 0, 0})),
                  ShapeError);
}

TEST_CASE("softmax rows are symmetric and normalized") {
  Tape tape;
  Tensor x = tape.constant({1, 2}, {0, 0});
  auto s = softmax_rows(x).values();
  CHECK(s[0] == doctest::Approx(0.5));
  CHECK(s[1] == doctest::Approx(0.5));

  Rng rng(3);
  std::vector<double> vals(40);
  for (double& v : vals) v = rng.uniform(-5, 5);
  Tensor y = tape.constant({4, 10}, vals);
  auto sm = softmax_rows(y).values();
  for (int r = 0; r < 4; ++r) {
    double sum = 0.0;
    for (int c = 0; c < 10; ++c) sum += sm[static_cast<std::size_t>(r * 10 + c)];
    CHECK(std::abs(sum - 1.0) < 1e-12);
  }
}

TEST_CASE("gaussian_kl closed form") {
  Tape tape;
  Tensor mu = tape.constant({1}, {1.0});
  Tensor logvar = tape.constant({1}, {0.0});
  CHECK(gaussian_kl(mu, logvar).item() == doctest::Approx(0.5));
  Tensor mu0 = tape.constant({3}, {0, 0, 0});
  Tensor lv0 = tape.constant({3}, {0, 0, 0});
  CHECK(gaussian_kl(mu0, lv0).item() == doctest::Approx(0.0));
}

TEST_CASE("backward of sum of squares") {
  Tape tape;
  Tensor x = tape.leaf({2}, {1, 2});
  Tensor loss = sum_all(mul(x, x));
  tape.backward(loss);
  CHECK(tape.grad(x) == std::vector<double>{2, 4});
}

TEST_CASE("backward contract: scalar only, once per forward") {
  Tape tape;
  Tensor x = tape.leaf({2}, {1, 2});
  Tensor y = mul(x, x);
  CHECK_THROWS_AS(tape.backward(y), ContractError);
  Tensor loss = sum_all(y);
  tape.backward(loss);
  CHECK_THROWS_AS(tape.backward(loss), ContractError);
}

TEST_CASE("detached input receives no gradient") {
  Tape tape;
  Tensor x = tape.leaf({2}, {1, 2});
  Tensor frozen = detach(x);
  Tensor loss = sum_all(mul(frozen, x));
  tape.backward(loss);
  CHECK(tape.grad(x) == std::vector<double>{1, 2});  // only the live path
  CHECK_THROWS_AS(tape.grad(frozen), ContractError);
}

TEST_CASE("small net gradients match finite differences") {
  Rng rng(17);
  Param w = make_param("w", {3, 2}, rng);
  Param b = make_param("b", {2}, rng, 0.1);
  std::vector<double> input{0.3, -1.2, 0.7, 0.9, 0.1, -0.4};
  std::vector<double> target{0.2, -0.1, 0.5, 0.3};
  std::vector<Param*> params{&w, &b};
  double err = check_gradients(
      params,
      [&](Tape& tape) {
        Tensor x = tape.constant({2, 3}, input);
        Tensor y = tape.constant({2, 2}, target);
        Tensor pred = sigmoid(add_rowwise(matmul(x, tape.param(w)), tape.param(b)));
        return masked_mse(pred, y);
      },
      rng, 16);
  CHECK(err < 1e-5);
}

TEST_CASE("every differentiable op passes a finite-difference check") {
  Rng rng(23);
  // Each case builds a scalar loss exercising one op on top of leaves.
  auto run = [&rng](const char* name, auto&& build, std::vector<Param*> params) {
    INFO(name);
    Rng local(101);
    double err = check_gradients(params, build, local, 8);
    CHECK(err < 1e-4);
  };

  Param a = make_param("a", {3, 4}, rng);
  Param b = make_param("b", {3, 4}, rng);
  Param c = make_param("c", {4, 3}, rng);
  Param d = make_param("d", {4}, rng);
  Param table = make_param("table", {5, 4}, rng);

  run("add+mul+scale", [&](Tape& t) {
    return sum_all(scale(mul(add(t.param(a), t.param(b)), t.param(b)), 0.7));
  }, {&a, &b});
  run("sub+add_scalar", [&](Tape& t) {
    return sum_all(add_scalar(sub(t.param(a), t.param(b)), 1.5));
  }, {&a, &b});
  run("matmul", [&](Tape& t) {
    return sum_all(matmul(t.param(a), t.param(c)));
  }, {&a, &c});
  run("matmul_nt", [&](Tape& t) {
    return sum_all(mul(matmul_nt(t.param(a), t.param(b)),
                       matmul_nt(t.param(a), t.param(b))));
  }, {&a, &b});
  run("add_rowwise", [&](Tape& t) {
    return sum_all(mul(add_rowwise(t.param(a), t.param(d)),
                       add_rowwise(t.param(a), t.param(d))));
  }, {&a, &d});
  run("relu", [&](Tape& t) {
    return sum_all(relu(t.param(a)));
  }, {&a});
  run("sigmoid", [&](Tape& t) {
    return sum_all(mul(sigmoid(t.param(a)), sigmoid(t.param(a))));
  }, {&a});
  run("clamp", [&](Tape& t) {
    return sum_all(mul(clamp(t.param(a), -0.5, 0.5), t.param(b)));
  }, {&a, &b});
  run("concat+slice", [&](Tape& t) {
    std::vector<Tensor> rows{t.param(a), t.param(b)};
    Tensor cat = concat_rows(rows);
    std::vector<Tensor> cols{slice_cols(cat, 0, 2), slice_cols(cat, 2, 4)};
    Tensor recols = concat_cols(cols);
    return sum_all(mul(slice_rows(recols, 1, 5), slice_rows(recols, 0, 4)));
  }, {&a, &b});
  run("embedding", [&](Tape& t) {
    Tensor e = embedding(t.param(table), {0, 3, 3, 1});
    return sum_all(mul(e, e));
  }, {&table});
  run("maxpool", [&](Tape& t) {
    std::vector<Tensor> parts{t.param(a), t.param(b)};
    return sum_all(mul(maxpool(parts), t.param(a)));
  }, {&a, &b});
  run("softmax", [&](Tape& t) {
    return sum_all(mul(softmax_rows(t.param(a)), t.param(b)));
  }, {&a, &b});
  run("log_softmax", [&](Tape& t) {
    return sum_all(mul(log_softmax_rows(t.param(a)), t.param(b)));
  }, {&a, &b});
  run("layer_norm", [&](Tape& t) {
    return sum_all(mul(layer_norm(t.param(a), t.param(d), t.param(d)),
                       t.param(b)));
  }, {&a, &b, &d});
  run("mean_all", [&](Tape& t) {
    return mean_all(mul(t.param(a), t.param(a)));
  }, {&a});
  run("masked_mse", [&](Tape& t) {
    std::vector<double> mask{1, 0, 1, 1, 0, 1, 1, 1, 0, 1, 1, 0};
    return masked_mse(t.param(a), t.param(b), mask);
  }, {&a, &b});
  run("cross_entropy", [&](Tape& t) {
    return cross_entropy_rows(t.param(a), {1, 3, 0}, {1, 0, 1});
  }, {&a});
  run("gaussian_kl", [&](Tape& t) {
    return gaussian_kl(t.param(a), t.param(b));
  }, {&a, &b});
  run("reparam", [&](Tape& t) {
    std::vector<double> eps{0.3, -0.7, 1.2, 0.1, -0.2, 0.5,
                            0.9, -1.1, 0.4, 0.2, -0.6, 0.8};
    Tensor z = reparam_sample(t.param(a), t.param(b), eps);
    return sum_all(mul(z, z));
  }, {&a, &b});
  run("broadcast+where", [&](Tape& t) {
    std::vector<char> mask{1, 0, 1};
    Tensor rows = broadcast_rows(t.param(d), 3);
    return sum_all(mul(where_rows(mask, t.param(a), rows), t.param(b)));
  }, {&a, &b, &d});
}

TEST_CASE("backward is additive over loss terms") {
  Rng rng(5);
  Param w = make_param("w", {4, 4}, rng);
  auto grad_of = [&](auto&& loss_fn) {
    w.zero_grad();
    Tape tape;
    tape.backward(loss_fn(tape));
    return w.grad;
  };
  auto g_first = grad_of([&](Tape& t) { return sum_all(t.param(w)); });
  auto g_second = grad_of([&](Tape& t) { return sum_all(mul(t.param(w), t.param(w))); });
  auto g_both = grad_of([&](Tape& t) {
    return add(sum_all(t.param(w)), sum_all(mul(t.param(w), t.param(w))));
  });
  for (std::size_t i = 0; i < g_both.size(); ++i)
    CHECK(g_both[i] == doctest::Approx(g_first[i] + g_second[i]).epsilon(1e-12));
}

TEST_CASE("adamw matches the hand-evaluated first step") {
  Param theta("theta", {1});
  theta.value[0] = 1.0;
  theta.grad[0] = 1.0;
  AdamW opt(1e-4);
  std::vector<Param*> params{&theta};
  opt.step(params);
  // m_hat = 1, v_hat = 1: theta = 1 - 1e-4 * (1/(1 + 1e-8) + 0.01 * 1)
  double expected = 1.0 - 1e-4 * (1.0 / (1.0 + 1e-8) + 0.01);
  CHECK(theta.value[0] == doctest::Approx(expected).epsilon(1e-12));
  CHECK(theta.value[0] == doctest::Approx(0.99989899).epsilon(1e-7));
  CHECK(theta.grad[0] == 0.0);  // cleared by the step
}

TEST_CASE("adamw leaves parameters alone with zero grad and zero decay") {
  Param theta("theta", {2});
  theta.value = {0.5, -0.25};
  AdamW opt(1e-3, 0.9, 0.999, 1e-8, 0.0);
  std::vector<Param*> params{&theta};
  opt.step(params);
  CHECK(theta.value == std::vector<double>{0.5, -0.25});
}

TEST_CASE("adamw updates independent parameters independently") {
  Param a("a", {1});
  Param b("b", {1});
  a.value[0] = 1.0;
  b.value[0] = 1.0;
  a.grad[0] = 1.0;
  b.grad[0] = 0.0;

  Param a_alone("a2", {1});
  a_alone.value[0] = 1.0;
  a_alone.grad[0] = 1.0;

  AdamW both(1e-4, 0.9, 0.999, 1e-8, 0.0);
  std::vector<Param*> pboth{&a, &b};
  both.step(pboth);
  AdamW solo(1e-4, 0.9, 0.999, 1e-8, 0.0);
  std::vector<Param*> psolo{&a_alone};
  solo.step(psolo);
  CHECK(a.value[0] == doctest::Approx(a_alone.value[0]).epsilon(1e-15));
  CHECK(b.value[0] == 1.0);
}

TEST_CASE("two identical seeded runs produce bit-identical losses") {
  auto run = [] {
    Rng rng(99);
    Param w = make_param("w", {6, 6}, rng);
    Tape tape;
    Tensor x = tape.constant({4, 6}, std::vector<double>(24, 0.25));
    Tensor loss = mean_all(sigmoid(matmul(x, tape.param(w))));
    return loss.item();
  };
  CHECK(run() == run());
}

TEST_CASE("shape errors name the op") {
  Tape tape;
  Tensor a = tape.constant({2, 2}, {1, 2, 3, 4});
  Tensor b = tape.constant({3}, {1, 2, 3});
  try {
    add(a, tape.constant({2, 3}, {0, 0, 0, 0, 0, 0}));
    FAIL("expected ShapeError");
  } catch (const ShapeError& e) {
    CHECK(std::string(e.what()).find("add") != std::string::npos);
  }
  CHECK_THROWS_AS(add_rowwise(a, b), ShapeError);
  CHECK_THROWS_AS(slice_rows(a, 1, 1), ShapeError);
  CHECK_THROWS_AS(embedding(a, {5}), ContractError);
}
