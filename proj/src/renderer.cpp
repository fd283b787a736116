#include "webcolor/renderer.hpp"

#include <zlib.h>

#include <algorithm>
#include <cmath>
#include <fstream>

#include "webcolor/color.hpp"
#include "webcolor/errors.hpp"

namespace webcolor {

namespace {

constexpr int kPadding = 4;
constexpr int kMinChildHeight = 8;
constexpr int kTextBarHeight = 8;

std::vector<int> subtree_sizes(const PageTree& tree) {
  std::vector<int> size(tree.elements.size(), 1);
  for (int i = tree.size() - 1; i >= 0; --i) {
    const auto& el = tree.elements[static_cast<std::size_t>(i)];
    if (el.parent)
      size[static_cast<std::size_t>(*el.parent)] +=
          size[static_cast<std::size_t>(i)];
  }
  return size;
}

}  // namespace

std::vector<Rect> layout(const PageTree& tree) {
  require_valid(tree);
  auto children = child_lists(tree);
  auto sizes = subtree_sizes(tree);
  std::vector<Rect> rects(tree.elements.size());
  rects[0] = {0, 0, kCanvasWidth, kCanvasHeight};
  for (int i = 0; i < tree.size(); ++i) {
    const auto& kids = children[static_cast<std::size_t>(i)];
    if (kids.empty()) continue;
    const Rect& r = rects[static_cast<std::size_t>(i)];
    Rect inner{r.x + kPadding, r.y + kPadding, r.w - 2 * kPadding,
               r.h - 2 * kPadding};
    if (inner.w < 0) inner.w = 0;
    if (inner.h < 0) inner.h = 0;
    long total = 0;
    for (int c : kids) total += sizes[static_cast<std::size_t>(c)];
    int y = inner.y;
    for (int c : kids) {
      int h = static_cast<int>(static_cast<long>(inner.h) *
                               sizes[static_cast<std::size_t>(c)] / total);
      h = std::max(h, kMinChildHeight);
      int remaining = inner.y + inner.h - y;
      if (h > remaining) h = std::max(0, remaining);
      rects[static_cast<std::size_t>(c)] = {inner.x, y, inner.w, h};
      y += h;
    }
  }
  return rects;
}

std::uint8_t composite_channel(std::uint8_t src, std::uint8_t dst,
                               std::uint8_t alpha) {
  double blended =
      (static_cast<double>(alpha) * src + (255.0 - alpha) * dst) / 255.0;
  return static_cast<std::uint8_t>(std::floor(blended + 0.5));
}

namespace {

void fill_rect(PixelBuffer& buf, const Rect& r, const RgbaColor& color) {
  if (r.empty() || color.a == 0) return;
  int x0 = std::max(0, r.x), x1 = std::min(buf.width, r.x + r.w);
  int y0 = std::max(0, r.y), y1 = std::min(buf.height, r.y + r.h);
  for (int y = y0; y < y1; ++y)
    for (int x = x0; x < x1; ++x) {
      std::uint8_t* px = buf.pixel(x, y);
      px[0] = composite_channel(color.r, px[0], color.a);
      px[1] = composite_channel(color.g, px[1], color.a);
      px[2] = composite_channel(color.b, px[2], color.a);
    }
}

}  // namespace

PixelBuffer rasterize(const PageTree& tree, std::span<const ColorStyle> styles,
                      std::span<const Rect> rects) {
  if (styles.size() != tree.elements.size() ||
      rects.size() != tree.elements.size())
    throw ContractError("rasterize: styles/rects count does not match page");
  PixelBuffer buf;
  buf.width = kCanvasWidth;
  buf.height = kCanvasHeight;
  buf.rgb.assign(static_cast<std::size_t>(buf.width) * buf.height * 3, 255);
  for (int i = 0; i < tree.size(); ++i) {
    const Rect& r = rects[static_cast<std::size_t>(i)];
    const ColorStyle& style = styles[static_cast<std::size_t>(i)];
    fill_rect(buf, r, style.background);
    if (style.text && !r.empty()) {
      int bar_h = std::min(kTextBarHeight, r.h);
      Rect bar{r.x, r.y + (r.h - bar_h) / 2, r.w, bar_h};
      fill_rect(buf, bar, *style.text);
    }
  }
  return buf;
}

PixelBuffer render_page(const PageTree& tree) {
  std::vector<ColorStyle> styles;
  styles.reserve(tree.elements.size());
  for (int i = 0; i < tree.size(); ++i) {
    const auto& el = tree.elements[static_cast<std::size_t>(i)];
    if (!el.style)
      throw ContractError("render: page '" + tree.id + "' element " +
                          std::to_string(i) + " has no style");
    styles.push_back(*el.style);
  }
  return rasterize(tree, styles, layout(tree));
}

std::vector<double> pixel_histogram(const PixelBuffer& buffer) {
  std::vector<double> hist(kRgbClasses, 0.0);
  const std::size_t pixels =
      static_cast<std::size_t>(buffer.width) * buffer.height;
  for (std::size_t i = 0; i < pixels; ++i) {
    const std::uint8_t* px = &buffer.rgb[i * 3];
    QuantizedColor q = quantize({px[0], px[1], px[2], 255});
    hist[static_cast<std::size_t>(q.rgb_index - 1)] += 1.0;
  }
  for (double& v : hist) v /= static_cast<double>(pixels);
  return hist;
}

namespace {

void put_u32_be(std::string& out, std::uint32_t v) {
  out.push_back(static_cast<char>((v >> 24) & 0xff));
  out.push_back(static_cast<char>((v >> 16) & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
  out.push_back(static_cast<char>(v & 0xff));
}

void put_chunk(std::string& out, const char type[4], const std::string& data) {
  put_u32_be(out, static_cast<std::uint32_t>(data.size()));
  std::string body(type, 4);
  body += data;
  out += body;
  auto crc = crc32(0L, reinterpret_cast<const Bytef*>(body.data()),
                   static_cast<uInt>(body.size()));
  put_u32_be(out, static_cast<std::uint32_t>(crc));
}

}  // namespace

std::string encode_png(const PixelBuffer& buffer) {
  std::string out("\x89PNG\r\n\x1a\n", 8);

  std::string ihdr;
  put_u32_be(ihdr, static_cast<std::uint32_t>(buffer.width));
  put_u32_be(ihdr, static_cast<std::uint32_t>(buffer.height));
  ihdr.push_back(8);   // bit depth
  ihdr.push_back(2);   // color type: truecolor
  ihdr.push_back(0);   // compression
  ihdr.push_back(0);   // filter
  ihdr.push_back(0);   // interlace
  put_chunk(out, "IHDR", ihdr);

  // Scanlines with filter byte 0.
  std::string raw;
  raw.reserve(static_cast<std::size_t>(buffer.height) *
              (1 + static_cast<std::size_t>(buffer.width) * 3));
  for (int y = 0; y < buffer.height; ++y) {
    raw.push_back(0);
    raw.append(reinterpret_cast<const char*>(buffer.pixel(0, y)),
               static_cast<std::size_t>(buffer.width) * 3);
  }
  uLongf bound = compressBound(static_cast<uLong>(raw.size()));
  std::string compressed(bound, '\0');
  if (compress2(reinterpret_cast<Bytef*>(compressed.data()), &bound,
                reinterpret_cast<const Bytef*>(raw.data()),
                static_cast<uLong>(raw.size()), 6) != Z_OK)
    throw NumericError("png: zlib compression failed");
  compressed.resize(bound);
  put_chunk(out, "IDAT", compressed);
  put_chunk(out, "IEND", "");
  return out;
}

void write_png(const PixelBuffer& buffer, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open '" + path + "' for writing");
  std::string data = encode_png(buffer);
  f.write(data.data(), static_cast<std::streamsize>(data.size()));
  if (!f) throw IoError("failed writing '" + path + "'");
}

}  // namespace webcolor
