#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "webcolor/page.hpp"

namespace webcolor {

inline constexpr int kCanvasWidth = 360;
inline constexpr int kCanvasHeight = 640;

struct Rect {
  int x = 0, y = 0, w = 0, h = 0;
  bool empty() const { return w <= 0 || h <= 0; }
  bool operator==(const Rect&) const = default;
};

// Deterministic box layout: the root fills the canvas; children stack
// vertically inside the parent minus 4px padding, heights proportional to
// subtree sizes with an 8px minimum, clipped to the parent.
std::vector<Rect> layout(const PageTree& tree);

// 8-bit RGB buffer, row-major, no alpha.
struct PixelBuffer {
  int width = 0, height = 0;
  std::vector<std::uint8_t> rgb;  // 3 bytes per pixel

  std::uint8_t* pixel(int x, int y) {
    return &rgb[(static_cast<std::size_t>(y) * width + x) * 3];
  }
  const std::uint8_t* pixel(int x, int y) const {
    return &rgb[(static_cast<std::size_t>(y) * width + x) * 3];
  }
};

// Paints elements in pre-order onto an opaque white canvas: backgrounds
// source-over composited into their rects, text elements as a centered
// bar of height min(8, rect height) in the composited text color.
PixelBuffer rasterize(const PageTree& tree, std::span<const ColorStyle> styles,
                      std::span<const Rect> rects);

// layout + rasterize using the page's stored styles.
PixelBuffer render_page(const PageTree& tree);

// Source-over of one channel: round-half-up of (a*src + (255-a)*dst)/255.
std::uint8_t composite_channel(std::uint8_t src, std::uint8_t dst,
                               std::uint8_t alpha);

// Quantized-RGB histogram over all pixels, normalized by pixel count.
std::vector<double> pixel_histogram(const PixelBuffer& buffer);

// Deterministic PNG encoding: 8-bit RGB, filter type 0 on every scanline,
// fixed zlib level, so identical buffers yield identical files.
std::string encode_png(const PixelBuffer& buffer);
void write_png(const PixelBuffer& buffer, const std::string& path);

}  // namespace webcolor
