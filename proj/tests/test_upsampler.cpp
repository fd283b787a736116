#include <cmath>

#include "doctest.h"
#include "testutil.hpp"
#include "webcolor/corpus.hpp"
#include "webcolor/errors.hpp"
#include "webcolor/train.hpp"
#include "webcolor/upsampler.hpp"

using namespace webcolor;
using namespace webcolor::testutil;

namespace {

ModelConfig toy_config() {
  ModelConfig config;
  config.kind = "upsampler";
  config.d_model = 8;
  config.n_heads = 2;
  config.n_layers = 1;
  config.d_ffn = 16;
  return config;
}

PageTree styled_page() {
  PageTree tree = small_page();
  style_page(tree, {40, 80, 120, 255}, {200, 100, 50, 140});
  return tree;
}

}  // namespace

TEST_CASE("forward emits one sigmoid-bounded row of 8 per element") {
  Upsampler model(toy_config(), 3);
  PageTree tree = styled_page();
  Tape tape;
  Tensor out = model.forward(tape, tree, quantized_styles(tree));
  CHECK(out.shape() == Shape{4, 8});
  for (double v : out.values()) {
    CHECK(v > 0.0);
    CHECK(v < 1.0);
  }
  std::vector<QuantizedStyle> wrong(3);
  Tape tape2;
  CHECK_THROWS_AS(model.forward(tape2, tree, wrong), ContractError);
}

TEST_CASE("proportion targets mask text entries for no-text elements") {
  PageTree tree = styled_page();
  ProportionTargets targets = proportion_targets(tree);
  REQUIRE(targets.values.size() == 4 * 8);
  // small_page: elements 0,2 have no text; 1,3 do.
  double mask_sum = 0.0;
  for (double m : targets.mask) mask_sum += m;
  CHECK(mask_sum == 2 * 8 + 2 * 4);  // text elements all 8, others bg-only

  // gt proportions of the background color (200,100,50,140)
  ChannelProportions bg = gt_proportions({200, 100, 50, 140});
  for (int c = 0; c < 4; ++c)
    CHECK(targets.values[static_cast<std::size_t>(4 + c)] ==
          bg[static_cast<std::size_t>(c)]);
}

TEST_CASE("loss is zero when predictions equal targets and mse otherwise") {
  PageTree tree = styled_page();
  ProportionTargets targets = proportion_targets(tree);
  Tape tape;
  Tensor pred = tape.leaf({4, 8}, targets.values);
  Tensor target = tape.constant({4, 8}, targets.values);
  CHECK(masked_mse(pred, target, targets.mask).item() == 0.0);

  // single off-by-0.5 entry: mse = 0.25 / contributing
  auto off = targets.values;
  off[4] += 0.5;
  Tensor pred2 = tape.leaf({4, 8}, off);
  double contributing = 0.0;
  for (double m : targets.mask) contributing += m;
  CHECK(masked_mse(pred2, target, targets.mask).item() ==
        doctest::Approx(0.25 / contributing));
}

TEST_CASE("upsampler gradient check at toy size") {
  Upsampler model(toy_config(), 5);
  PageTree tree = styled_page();
  auto params = model.params();
  Rng check_rng(11);
  double err = check_gradients(
      params, [&](Tape& tape) { return model.loss(tape, tree); }, check_rng, 3);
  CHECK(err < 1e-4);
}

TEST_CASE("apply keeps every color in its quantization bin") {
  Upsampler model(toy_config(), 7);
  Rng rng(13);
  CorpusConfig config;
  config.pages = 8;
  config.seed = 99;
  config.grammar = "noisy";
  config.noise_p = 0.5;
  int cases = 0;
  for (const PageTree& page : generate_corpus(config)) {
    auto q = quantized_styles(page);
    auto full = model.apply(page, q);
    for (std::size_t i = 0; i < q.size(); ++i) {
      CHECK(quantize(full[i].background) == q[i].background);
      if (q[i].text) {
        CHECK(quantize(*full[i].text) == *q[i].text);
        ++cases;
      }
      ++cases;
    }
  }
  CHECK(cases >= 50);
}

TEST_CASE("untrained model with zeroed output layer lands mid-bin") {
  Upsampler model(toy_config(), 9);
  auto params = model.params();
  for (Param* p : params)
    if (p->name.find("out_head") != std::string::npos)
      std::fill(p->value.begin(), p->value.end(), 0.0);
  PageTree tree = styled_page();
  auto q = quantized_styles(tree);
  auto full = model.apply(tree, q);
  // sigmoid(0) = 0.5 -> lo + round(0.5 * 31) = lo + 16
  auto bins = rgb_bins(q[0].background.rgb_index);
  CHECK(full[0].background.r == bin_bounds(bins[0]).first + 16);
  CHECK(full[0].background.g == bin_bounds(bins[1]).first + 16);
  CHECK(full[0].background.b == bin_bounds(bins[2]).first + 16);
}

TEST_CASE("apply is deterministic") {
  Upsampler model(toy_config(), 11);
  PageTree tree = styled_page();
  auto q = quantized_styles(tree);
  auto a = model.apply(tree, q);
  auto b = model.apply(tree, q);
  CHECK(a == b);
}

TEST_CASE("bin-floor corpus trains below 0.02 MSE in 300 toy iterations") {
  CorpusConfig config;
  config.pages = 40;
  config.max_elements = 16;
  config.max_depth = 5;
  config.anchor = BinAnchor::kFloor;
  config.seed = 21;
  auto pages = generate_corpus(config);

  Upsampler model(toy_config(), 23);
  TrainOptions options;
  options.model = "upsampler";
  options.iters = 300;
  options.batch = 8;
  options.lr = 3e-3;  // sanity-learnability run, not the paper schedule
  options.seed = 23;
  options.log_every = 0;
  TrainHistory history = train_upsampler(model, pages, options);
  CHECK(history.loss.back() < 0.02);
}
