#include "webcolor/color.hpp"

#include <cmath>

#include "webcolor/errors.hpp"

namespace webcolor {

int channel_bin(std::uint8_t c) { return c / kBinWidth; }

std::pair<int, int> bin_bounds(int bin) {
  if (bin < 0 || bin >= kChannelBins)
    throw ContractError("bin_bounds: bin " + std::to_string(bin) +
                        " outside 0..7");
  int lo = kBinWidth * bin;
  return {lo, lo + kBinWidth - 1};
}

QuantizedColor quantize(const RgbaColor& color) {
  int kr = channel_bin(color.r);
  int kg = channel_bin(color.g);
  int kb = channel_bin(color.b);
  int ka = channel_bin(color.a);
  return {1 + 64 * kr + 8 * kg + kb, 1 + ka};
}

std::array<int, 3> rgb_bins(int rgb_index) {
  if (rgb_index < 1 || rgb_index > kRgbClasses)
    throw ContractError("rgb_bins: rgb_index " + std::to_string(rgb_index) +
                        " outside 1..512");
  int v = rgb_index - 1;
  return {v / 64, (v / 8) % 8, v % 8};
}

ChannelProportions gt_proportions(const RgbaColor& color) {
  auto prop = [](std::uint8_t c) {
    int lo = bin_bounds(channel_bin(c)).first;
    return static_cast<double>(c - lo) / (kBinWidth - 1);
  };
  return {prop(color.r), prop(color.g), prop(color.b), prop(color.a)};
}

RgbaColor reconstruct(const QuantizedColor& q, const ChannelProportions& props,
                      int* clamp_warnings) {
  if (q.rgb_index < 1 || q.rgb_index > kRgbClasses || q.alpha_index < 1 ||
      q.alpha_index > kAlphaClasses)
    throw ContractError("reconstruct: quantized indices out of range");
  auto [r_bin, g_bin, b_bin] = rgb_bins(q.rgb_index);
  std::array<int, 4> bins{r_bin, g_bin, b_bin, q.alpha_index - 1};
  std::array<std::uint8_t, 4> out{};
  for (int i = 0; i < 4; ++i) {
    double alpha = props[static_cast<std::size_t>(i)];
    if (alpha < 0.0 || alpha > 1.0) {
      if (clamp_warnings) ++*clamp_warnings;
      alpha = alpha < 0.0 ? 0.0 : 1.0;
    }
    int lo = bin_bounds(bins[static_cast<std::size_t>(i)]).first;
    int c = lo + static_cast<int>(std::floor(alpha * (kBinWidth - 1) + 0.5));
    out[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(c);
  }
  return {out[0], out[1], out[2], out[3]};
}

}  // namespace webcolor
