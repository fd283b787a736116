#include <cmath>

#include "doctest.h"
#include "testutil.hpp"
#include "webcolor/errors.hpp"
#include "webcolor/transformer.hpp"

using namespace webcolor;
using namespace webcolor::testutil;

namespace {

TransformerConfig toy_config(bool causal = false, bool cross = false) {
  TransformerConfig config;
  config.d_model = 8;
  config.n_heads = 2;
  config.n_layers = 1;
  config.d_ffn = 16;
  config.causal = causal;
  config.cross_attention = cross;
  return config;
}

std::vector<double> random_values(Rng& rng, int n) {
  std::vector<double> out(static_cast<std::size_t>(n));
  for (double& v : out) v = rng.normal();
  return out;
}

}  // namespace

TEST_CASE("encode preserves shape") {
  Rng rng(1);
  TransformerConfig config;
  config.d_model = 32;
  config.n_heads = 4;
  config.n_layers = 2;
  config.d_ffn = 64;
  TransformerStack stack(config, rng);
  Tape tape;
  Tensor x = tape.constant({5, 32}, random_values(rng, 5 * 32));
  Tensor y = stack(tape, x);
  CHECK(y.shape() == Shape{5, 32});
  CHECK_THROWS_AS(stack(tape, tape.constant({5, 16}, random_values(rng, 80))),
                  ShapeError);
}

TEST_CASE("zero weights pass a standardized token through unchanged") {
  Rng rng(2);
  TransformerStack stack(toy_config(), rng);
  std::vector<Param*> params;
  stack.collect_params("enc", params);
  for (Param* p : params)
    if (p->name.find("gain") == std::string::npos)
      std::fill(p->value.begin(), p->value.end(), 0.0);

  // One token with row mean 0 and variance 1: every residual block adds
  // zero and the final layer norm is (numerically) the identity.
  std::vector<double> row{1, -1, 1, -1, 1, -1, 1, -1};
  Tape tape;
  Tensor y = stack(tape, tape.constant({1, 8}, row));
  for (int j = 0; j < 8; ++j)
    CHECK(y.values()[static_cast<std::size_t>(j)] ==
          doctest::Approx(row[static_cast<std::size_t>(j)]).epsilon(1e-4));
}

TEST_CASE("encoder without positions is permutation equivariant") {
  Rng rng(3);
  TransformerStack stack(toy_config(), rng);
  const int n = 6, d = 8;
  std::vector<double> base = random_values(rng, n * d);

  Tape tape;
  Tensor y = stack(tape, tape.constant({n, d}, base));

  std::vector<int> perm{3, 0, 5, 1, 4, 2};
  std::vector<double> permuted(base.size());
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j)
      permuted[static_cast<std::size_t>(i * d + j)] =
          base[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)] * d + j)];
  Tape tape2;
  Tensor y_perm = stack(tape2, tape2.constant({n, d}, permuted));

  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j)
      CHECK(y_perm.values()[static_cast<std::size_t>(i * d + j)] ==
            doctest::Approx(
                y.values()[static_cast<std::size_t>(
                    perm[static_cast<std::size_t>(i)] * d + j)])
                .epsilon(1e-10));
}

TEST_CASE("decoder causality: gradients from early outputs never reach later inputs") {
  Rng rng(4);
  TransformerStack decoder(toy_config(/*causal=*/true, /*cross=*/true), rng);
  const int n = 4, d = 8;
  Tape tape;
  Tensor targets = tape.leaf({n, d}, random_values(rng, n * d));
  Tensor memory = tape.constant({3, d}, random_values(rng, 3 * d));
  Tensor out = decoder(tape, targets, &memory);
  // Weighted readout of output row 0 only (a plain sum of a layer-normed
  // row is constant and would zero every gradient).
  Tensor readout = tape.constant({1, d}, random_values(rng, d));
  Tensor loss = sum_all(mul(slice_rows(out, 0, 1), readout));
  tape.backward(loss);
  const auto& grad = tape.grad(targets);
  for (int i = 1; i < n; ++i)
    for (int j = 0; j < d; ++j)
      CHECK(grad[static_cast<std::size_t>(i * d + j)] == 0.0);  // exact
  // row 0 must receive some gradient
  double row0 = 0.0;
  for (int j = 0; j < d; ++j) row0 += std::abs(grad[static_cast<std::size_t>(j)]);
  CHECK(row0 > 0.0);
}

TEST_CASE("decoder causality: perturbing later targets leaves earlier outputs fixed") {
  Rng rng(5);
  TransformerStack decoder(toy_config(/*causal=*/true, /*cross=*/true), rng);
  const int n = 4, d = 8;
  std::vector<double> targets = random_values(rng, n * d);
  std::vector<double> memory = random_values(rng, 2 * d);

  auto run = [&](const std::vector<double>& t) {
    Tape tape;
    Tensor mem = tape.constant({2, d}, memory);
    Tensor out = decoder(tape, tape.constant({n, d}, t), &mem);
    return out.values();
  };
  auto before = run(targets);
  auto perturbed = targets;
  for (int j = 0; j < d; ++j) perturbed[static_cast<std::size_t>(2 * d + j)] += 3.0;
  auto after = run(perturbed);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < d; ++j)
      CHECK(after[static_cast<std::size_t>(i * d + j)] ==
            before[static_cast<std::size_t>(i * d + j)]);
}

TEST_CASE("decode with single-step target attends memory only") {
  Rng rng(6);
  TransformerStack decoder(toy_config(/*causal=*/true, /*cross=*/true), rng);
  Tape tape;
  Tensor target = tape.constant({1, 8}, random_values(rng, 8));
  Tensor memory = tape.constant({1, 8}, random_values(rng, 8));
  Tensor out = decoder(tape, target, &memory);
  CHECK(out.shape() == Shape{1, 8});
  CHECK_THROWS_AS(decoder(tape, target, nullptr), ContractError);
}

TEST_CASE("attention over a single memory vector is a convex weight of 1") {
  // softmax over one column is exactly 1, so every decoder position
  // receives the same cross-attention message.
  Tape tape;
  Tensor scores = tape.constant({4, 1}, {0.3, -2.0, 5.0, 0.0});
  auto attn = softmax_rows(scores).values();
  for (double v : attn) CHECK(v == 1.0);
}

TEST_CASE("positional encoding basics") {
  auto table = positional_encoding(3, 6);
  // position 0: sin terms 0, cos terms 1
  CHECK(table[0] == 0.0);
  CHECK(table[1] == 1.0);
  CHECK(table[2] == 0.0);
  CHECK(table[3] == 1.0);

  // prefix stability
  auto longer = positional_encoding(10, 6);
  for (int i = 0; i < 3 * 6; ++i)
    CHECK(longer[static_cast<std::size_t>(i)] == table[static_cast<std::size_t>(i)]);

  // distinct rows up to 200 positions
  auto big = positional_encoding(200, 16);
  for (int a = 0; a < 200; ++a)
    for (int b = a + 1; b < 200; ++b) {
      bool differ = false;
      for (int j = 0; j < 16 && !differ; ++j)
        differ = big[static_cast<std::size_t>(a * 16 + j)] !=
                 big[static_cast<std::size_t>(b * 16 + j)];
      if (!differ) {
        CAPTURE(a);
        CAPTURE(b);
        FAIL_CHECK("duplicate positional rows");
      }
    }
}

TEST_CASE("full encoder passes the finite-difference gradient check") {
  Rng rng(7);
  TransformerStack stack(toy_config(), rng);
  std::vector<Param*> params;
  stack.collect_params("enc", params);
  std::vector<double> input = random_values(rng, 3 * 8);
  Rng check_rng(100);
  double err = check_gradients(
      params,
      [&](Tape& tape) {
        Tensor x = tape.constant({3, 8}, input);
        Tensor y = stack(tape, x);
        return mean_all(mul(y, y));
      },
      check_rng, 4);
  CHECK(err < 1e-4);
}

TEST_CASE("attention rows sum to one within 1e-12") {
  Rng rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    Tape tape;
    std::vector<double> scores = random_values(rng, 5 * 5);
    auto sm = softmax_rows(tape.constant({5, 5}, scores)).values();
    for (int r = 0; r < 5; ++r) {
      double sum = 0.0;
      for (int c = 0; c < 5; ++c) sum += sm[static_cast<std::size_t>(r * 5 + c)];
      CHECK(std::abs(sum - 1.0) <= 1e-12);
    }
  }
}
