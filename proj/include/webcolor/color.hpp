#pragma once

#include <array>
#include <cstdint>
#include <optional>

namespace webcolor {

// One sRGB byte color with straight alpha.
struct RgbaColor {
  std::uint8_t r = 0;
  std::uint8_t g = 0;
  std::uint8_t b = 0;
  std::uint8_t a = 255;

  bool operator==(const RgbaColor&) const = default;
};

// Discrete color: RGB channels quantized jointly into 8^3 bins (1-based),
// alpha into 8 bins (1-based). Indices are 1-based to match the usual
// {1,...,512} x {1,...,8} convention; internal arrays subtract 1.
struct QuantizedColor {
  int rgb_index = 1;    // 1..512
  int alpha_index = 1;  // 1..8

  bool operator==(const QuantizedColor&) const = default;
  auto operator<=>(const QuantizedColor&) const = default;
};

// Discrete style of one element. text is absent iff the element has no
// text content.
struct QuantizedStyle {
  std::optional<QuantizedColor> text;
  QuantizedColor background;

  bool operator==(const QuantizedStyle&) const = default;
};

// Fractional position of each channel value within its quantization bin,
// all in [0, 1]. Order: r, g, b, a.
using ChannelProportions = std::array<double, 4>;

// Per-element regression target of the upsampler: proportions for the
// text color (ignored when the element has no text) and the background.
struct StyleProportions {
  ChannelProportions text{0, 0, 0, 0};
  ChannelProportions background{0, 0, 0, 0};
};

inline constexpr int kChannelBins = 8;
inline constexpr int kRgbClasses = 512;  // 8^3
inline constexpr int kAlphaClasses = 8;
inline constexpr int kBinWidth = 32;

// Channel bin for a byte value: floor(c / 32), in 0..7.
int channel_bin(std::uint8_t c);

// Inclusive byte range [lo, hi] covered by a channel bin. Throws on a bin
// outside 0..7.
std::pair<int, int> bin_bounds(int bin);

// 8 bins per channel; RGB packed r-major: rgb_index = 1 + 64 kr + 8 kg + kb.
QuantizedColor quantize(const RgbaColor& color);

// Channel bins (0-based) of a 1-based rgb_index.
std::array<int, 3> rgb_bins(int rgb_index);

// Ground-truth in-bin proportions: alpha = (c - lo) / 31 per channel.
ChannelProportions gt_proportions(const RgbaColor& color);

// Inverse of gt_proportions within a bin: c = lo + round(alpha * 31).
// Proportions outside [0, 1] are clamped; when `clamp_warnings` is given it
// is incremented once per clamped channel.
RgbaColor reconstruct(const QuantizedColor& q, const ChannelProportions& props,
                      int* clamp_warnings = nullptr);

}  // namespace webcolor
