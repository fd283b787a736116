#include <set>

#include "doctest.h"
#include "webcolor/color.hpp"
#include "webcolor/errors.hpp"
#include "webcolor/rng.hpp"

using namespace webcolor;

TEST_CASE("quantize maps channels to 32-wide bins") {
  CHECK(quantize({0, 0, 0, 255}) == QuantizedColor{1, 8});
  CHECK(quantize({255, 255, 255, 0}) == QuantizedColor{512, 1});
  // bins (1,2,3,4): 1 + 64*1 + 8*2 + 3 = 84, alpha 1 + 4 = 5
  CHECK(quantize({32, 64, 96, 128}) == QuantizedColor{84, 5});
}

TEST_CASE("bin_bounds covers 32-value ranges") {
  CHECK(bin_bounds(0) == std::pair{0, 31});
  CHECK(bin_bounds(7) == std::pair{224, 255});
  CHECK(bin_bounds(3) == std::pair{96, 127});
  CHECK_THROWS_AS(bin_bounds(8), ContractError);
  CHECK_THROWS_AS(bin_bounds(-1), ContractError);
}

TEST_CASE("gt_proportions is the in-bin position over 31") {
  CHECK(gt_proportions({32, 32, 32, 32})[0] == 0.0);
  CHECK(gt_proportions({63, 63, 63, 63})[0] == 1.0);
  CHECK(gt_proportions({40, 0, 0, 0})[0] == doctest::Approx(8.0 / 31.0));
}

TEST_CASE("reconstruct lands on bin floors and ceilings") {
  CHECK(reconstruct({84, 5}, {0, 0, 0, 0}) == RgbaColor{32, 64, 96, 128});
  RgbaColor top = reconstruct({84, 5}, {1, 1, 1, 1});
  CHECK(top == RgbaColor{63, 95, 127, 159});
  CHECK(quantize(top) == QuantizedColor{84, 5});
}

TEST_CASE("reconstruct clamps out-of-range proportions and counts them") {
  int warnings = 0;
  RgbaColor c = reconstruct({1, 1}, {-0.5, 2.0, 0.5, 0.0}, &warnings);
  CHECK(warnings == 2);
  CHECK(c.r == 0);
  CHECK(c.g == 31);
  CHECK(c.b == 16);
}

TEST_CASE("quantize is surjective onto 512 x 8") {
  std::set<std::pair<int, int>> seen;
  for (int r = 0; r < 8; ++r)
    for (int g = 0; g < 8; ++g)
      for (int b = 0; b < 8; ++b)
        for (int a = 0; a < 8; ++a) {
          QuantizedColor q = quantize({static_cast<std::uint8_t>(32 * r),
                                       static_cast<std::uint8_t>(32 * g),
                                       static_cast<std::uint8_t>(32 * b),
                                       static_cast<std::uint8_t>(32 * a)});
          CHECK(q.rgb_index >= 1);
          CHECK(q.rgb_index <= 512);
          seen.insert({q.rgb_index, q.alpha_index});
        }
  CHECK(seen.size() == 512u * 8u);
}

TEST_CASE("quantize(reconstruct(q, alpha)) == q on random draws") {
  Rng rng(7);
  for (int i = 0; i < 10000; ++i) {
    QuantizedColor q{1 + static_cast<int>(rng.below(512)),
                     1 + static_cast<int>(rng.below(8))};
    ChannelProportions props{rng.uniform(), rng.uniform(), rng.uniform(),
                             rng.uniform()};
    CHECK(quantize(reconstruct(q, props)) == q);
  }
}

TEST_CASE("reconstruct . gt_proportions . quantize is the identity") {
  // Exhaustive per channel: every byte value must survive the round trip.
  for (int v = 0; v < 256; ++v) {
    auto byte = static_cast<std::uint8_t>(v);
    RgbaColor color{byte, static_cast<std::uint8_t>(255 - v), byte, byte};
    RgbaColor back = reconstruct(quantize(color), gt_proportions(color));
    CHECK(back == color);
  }
}
