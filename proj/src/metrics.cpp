#include "webcolor/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "webcolor/color.hpp"
#include "webcolor/errors.hpp"
#include "webcolor/renderer.hpp"
#include "webcolor/rng.hpp"

namespace webcolor {

namespace {

struct SlotPair {
  int pred = 0;  // class id
  int gt = 0;
};

// Contributing (pred, gt) class pairs across aligned page lists, split
// into rgb and alpha categories.
struct PairedSlots {
  std::vector<SlotPair> rgb;
  std::vector<SlotPair> alpha;
};

const ColorStyle& style_of(const PageTree& page, int i) {
  const auto& el = page.elements[static_cast<std::size_t>(i)];
  if (!el.style)
    throw ValidationError("page '" + page.id + "': element " +
                          std::to_string(i) + " has no style");
  return *el.style;
}

PairedSlots collect_slots(std::span<const PageTree> pred,
                          std::span<const PageTree> gt) {
  if (pred.size() != gt.size())
    throw ValidationError("metrics: " + std::to_string(pred.size()) +
                          " predicted pages vs " + std::to_string(gt.size()) +
                          " ground-truth pages");
  PairedSlots slots;
  for (std::size_t p = 0; p < pred.size(); ++p) {
    const PageTree& a = pred[p];
    const PageTree& b = gt[p];
    if (a.id != b.id || a.size() != b.size())
      throw ValidationError("metrics: page mismatch at index " +
                            std::to_string(p) + " ('" + a.id + "' vs '" +
                            b.id + "')");
    for (int i = 0; i < a.size(); ++i) {
      bool a_text = a.elements[static_cast<std::size_t>(i)].content.has_text();
      bool b_text = b.elements[static_cast<std::size_t>(i)].content.has_text();
      if (a_text != b_text)
        throw ValidationError("metrics: text mask mismatch on page '" + a.id +
                              "' element " + std::to_string(i));
      QuantizedColor pa = quantize(style_of(a, i).background);
      QuantizedColor pb = quantize(style_of(b, i).background);
      slots.rgb.push_back({pa.rgb_index, pb.rgb_index});
      slots.alpha.push_back({pa.alpha_index, pb.alpha_index});
      if (b_text) {
        QuantizedColor ta = quantize(*style_of(a, i).text);
        QuantizedColor tb = quantize(*style_of(b, i).text);
        slots.rgb.push_back({ta.rgb_index, tb.rgb_index});
        slots.alpha.push_back({ta.alpha_index, tb.alpha_index});
      }
    }
  }
  return slots;
}

double exact_match(const std::vector<SlotPair>& slots) {
  if (slots.empty()) throw ValidationError("metrics: no contributing slots");
  long hit = 0;
  for (const SlotPair& s : slots) hit += s.pred == s.gt ? 1 : 0;
  return static_cast<double>(hit) / static_cast<double>(slots.size());
}

double macro_f_of(const std::vector<SlotPair>& slots) {
  if (slots.empty()) throw ValidationError("metrics: no contributing slots");
  struct Tally {
    long tp = 0, fp = 0, fn = 0;
  };
  std::map<int, Tally> per_class;
  for (const SlotPair& s : slots) {
    if (s.pred == s.gt) {
      ++per_class[s.gt].tp;
    } else {
      ++per_class[s.pred].fp;
      ++per_class[s.gt].fn;
    }
  }
  double sum = 0.0;
  for (const auto& [cls, t] : per_class) {
    double denom_p = static_cast<double>(t.tp + t.fp);
    double denom_r = static_cast<double>(t.tp + t.fn);
    double precision = denom_p > 0.0 ? t.tp / denom_p : 0.0;
    double recall = denom_r > 0.0 ? t.tp / denom_r : 0.0;
    double f = precision + recall > 0.0
                   ? 2.0 * precision * recall / (precision + recall)
                   : 0.0;
    sum += f;
  }
  return sum / static_cast<double>(per_class.size());
}

}  // namespace

PairScores accuracy(std::span<const PageTree> pred,
                    std::span<const PageTree> gt) {
  PairedSlots slots = collect_slots(pred, gt);
  return {exact_match(slots.rgb), exact_match(slots.alpha)};
}

PairScores macro_f(std::span<const PageTree> pred,
                   std::span<const PageTree> gt) {
  PairedSlots slots = collect_slots(pred, gt);
  return {macro_f_of(slots.rgb), macro_f_of(slots.alpha)};
}

ColorHistogram page_histogram(const PageTree& page, HistogramKind kind) {
  if (kind == HistogramKind::kPixel)
    return pixel_histogram(render_page(page));
  ColorHistogram hist(kRgbClasses, 0.0);
  long contributing = 0;
  for (int i = 0; i < page.size(); ++i) {
    const auto& el = page.elements[static_cast<std::size_t>(i)];
    const ColorStyle& style = style_of(page, i);
    if (kind == HistogramKind::kText) {
      if (!el.content.has_text()) continue;
      QuantizedColor q = quantize(*style.text);
      hist[static_cast<std::size_t>(q.rgb_index - 1)] += 1.0;
    } else {
      QuantizedColor q = quantize(style.background);
      hist[static_cast<std::size_t>(q.rgb_index - 1)] += 1.0;
    }
    ++contributing;
  }
  if (contributing > 0)
    for (double& v : hist) v /= static_cast<double>(contributing);
  return hist;
}

GaussianStats fit_gaussian(const std::vector<ColorHistogram>& histograms) {
  if (histograms.size() < 2)
    throw ValidationError("fit_gaussian: need at least 2 histograms, got " +
                          std::to_string(histograms.size()));
  const int d = static_cast<int>(histograms[0].size());
  GaussianStats stats;
  stats.count = static_cast<int>(histograms.size());
  stats.mean.assign(static_cast<std::size_t>(d), 0.0);
  for (const auto& h : histograms) {
    if (static_cast<int>(h.size()) != d)
      throw ValidationError("fit_gaussian: mixed histogram sizes");
    for (int i = 0; i < d; ++i) stats.mean[static_cast<std::size_t>(i)] += h[static_cast<std::size_t>(i)];
  }
  for (double& v : stats.mean) v /= static_cast<double>(stats.count);

  stats.cov = Mat(d, d);
  std::vector<double> centered(static_cast<std::size_t>(d));
  for (const auto& h : histograms) {
    for (int i = 0; i < d; ++i)
      centered[static_cast<std::size_t>(i)] =
          h[static_cast<std::size_t>(i)] - stats.mean[static_cast<std::size_t>(i)];
    for (int i = 0; i < d; ++i) {
      double ci = centered[static_cast<std::size_t>(i)];
      if (ci == 0.0) continue;
      for (int j = 0; j < d; ++j)
        stats.cov.at(i, j) += ci * centered[static_cast<std::size_t>(j)];
    }
  }
  const double denom = static_cast<double>(stats.count - 1);
  for (double& v : stats.cov.a) v /= denom;
  return stats;
}

double frechet_distance(const GaussianStats& a, const GaussianStats& b) {
  if (a.mean.size() != b.mean.size())
    throw ValidationError("frechet_distance: dimension mismatch");
  for (double v : a.mean)
    if (!std::isfinite(v)) throw NumericError("frechet_distance: non-finite mean");
  for (double v : b.mean)
    if (!std::isfinite(v)) throw NumericError("frechet_distance: non-finite mean");
  for (double v : a.cov.a)
    if (!std::isfinite(v))
      throw NumericError("frechet_distance: non-finite covariance");
  for (double v : b.cov.a)
    if (!std::isfinite(v))
      throw NumericError("frechet_distance: non-finite covariance");

  double mean_term = 0.0;
  for (std::size_t i = 0; i < a.mean.size(); ++i) {
    double d = a.mean[i] - b.mean[i];
    mean_term += d * d;
  }
  double trace_a = 0.0, trace_b = 0.0;
  for (int i = 0; i < a.cov.rows; ++i) trace_a += a.cov.at(i, i);
  for (int i = 0; i < b.cov.rows; ++i) trace_b += b.cov.at(i, i);

  Mat root_a = sym_sqrt(a.cov);
  Mat product = matmul(matmul(root_a, b.cov), root_a);
  // Fit noise can leave the product slightly asymmetric; symmetrize before
  // the eigen solve.
  for (int i = 0; i < product.rows; ++i)
    for (int j = i + 1; j < product.cols; ++j) {
      double v = 0.5 * (product.at(i, j) + product.at(j, i));
      product.at(i, j) = v;
      product.at(j, i) = v;
    }
  double cross = trace_sqrt(product);
  return mean_term + trace_a + trace_b - 2.0 * cross;
}

double fcd_protocol(std::span<const PageTree> generated,
                    std::span<const PageTree> real, HistogramKind kind,
                    std::uint64_t seed) {
  if (generated.size() != real.size())
    throw ValidationError("fcd_protocol: page sets differ in size");
  const std::size_t n = generated.size();
  if (n < 4)
    throw ValidationError("fcd_protocol: need at least 4 pages, got " +
                          std::to_string(n));
  Rng rng(seed);
  auto perm = rng.permutation(n);
  std::vector<ColorHistogram> gen_half, real_half;
  for (std::size_t i = 0; i < n; ++i) {
    if (i < n / 2)
      gen_half.push_back(page_histogram(generated[perm[i]], kind));
    else
      real_half.push_back(page_histogram(real[perm[i]], kind));
  }
  return frechet_distance(fit_gaussian(gen_half), fit_gaussian(real_half));
}

namespace {

double luminance_from_channels(double r, double g, double b) {
  auto linearize = [](double c) {
    c /= 255.0;
    return c <= 0.03928 ? c / 12.92 : std::pow((c + 0.055) / 1.055, 2.4);
  };
  return 0.2126 * linearize(r) + 0.7152 * linearize(g) + 0.0722 * linearize(b);
}

struct FloatRgb {
  double r = 255.0, g = 255.0, b = 255.0;
};

FloatRgb composite_over(const RgbaColor& src, const FloatRgb& dst) {
  double alpha = src.a / 255.0;
  return {alpha * src.r + (1.0 - alpha) * dst.r,
          alpha * src.g + (1.0 - alpha) * dst.g,
          alpha * src.b + (1.0 - alpha) * dst.b};
}

double ratio_from_luminances(double la, double lb) {
  double hi = std::max(la, lb), lo = std::min(la, lb);
  return (hi + 0.05) / (lo + 0.05);
}

}  // namespace

double relative_luminance(const RgbaColor& color) {
  return luminance_from_channels(color.r, color.g, color.b);
}

double contrast_ratio(const RgbaColor& fg, const RgbaColor& bg) {
  FloatRgb base{static_cast<double>(bg.r), static_cast<double>(bg.g),
                static_cast<double>(bg.b)};
  FloatRgb composited = composite_over(fg, base);
  double l_fg =
      luminance_from_channels(composited.r, composited.g, composited.b);
  double l_bg = luminance_from_channels(base.r, base.g, base.b);
  return ratio_from_luminances(l_fg, l_bg);
}

std::vector<ContrastViolation> audit_page(const PageTree& page) {
  require_valid(page);
  // Effective background per element: own background over the ancestor
  // chain, rooted on opaque white.
  std::vector<FloatRgb> effective(page.elements.size());
  for (int i = 0; i < page.size(); ++i) {
    const auto& el = page.elements[static_cast<std::size_t>(i)];
    FloatRgb base =
        el.parent ? effective[static_cast<std::size_t>(*el.parent)] : FloatRgb{};
    effective[static_cast<std::size_t>(i)] =
        composite_over(style_of(page, i).background, base);
  }
  std::vector<ContrastViolation> out;
  for (int i = 0; i < page.size(); ++i) {
    const auto& el = page.elements[static_cast<std::size_t>(i)];
    if (!el.content.has_text()) continue;
    const FloatRgb& bg = effective[static_cast<std::size_t>(i)];
    FloatRgb text = composite_over(*style_of(page, i).text, bg);
    double ratio =
        ratio_from_luminances(luminance_from_channels(text.r, text.g, text.b),
                              luminance_from_channels(bg.r, bg.g, bg.b));
    if (ratio < kContrastThreshold) out.push_back({i, ratio});
  }
  return out;
}

ContrastReport aggregate_contrast(std::span<const PageTree> pages) {
  if (pages.empty())
    throw ValidationError("aggregate_contrast: empty page set");
  ContrastReport report;
  long violating_pages = 0, violating_elements = 0;
  for (const PageTree& page : pages) {
    auto violations = audit_page(page);
    report.per_page.emplace_back(page.id, static_cast<int>(violations.size()));
    violating_pages += violations.empty() ? 0 : 1;
    violating_elements += static_cast<long>(violations.size());
  }
  report.pages_violating_fraction =
      static_cast<double>(violating_pages) / static_cast<double>(pages.size());
  report.mean_violating_elements =
      static_cast<double>(violating_elements) / static_cast<double>(pages.size());
  return report;
}

std::string metric_report_json(const MetricReport& r) {
  std::string out = "{\n";
  out += "  \"accuracy\": {\"rgb\": " + format_number(r.accuracy.rgb) +
         ", \"alpha\": " + format_number(r.accuracy.alpha) + "},\n";
  out += "  \"macro_f\": {\"rgb\": " + format_number(r.macro_f.rgb) +
         ", \"alpha\": " + format_number(r.macro_f.alpha) + "},\n";
  out += "  \"fcd\": {\"bg\": " + format_number(r.fcd_bg) +
         ", \"text\": " + format_number(r.fcd_text) +
         ", \"pixel\": " + format_number(r.fcd_pixel) + "},\n";
  out += "  \"contrast\": {\"pct_pages\": " +
         format_number(r.contrast_pct_pages) +
         ", \"mean_elements\": " + format_number(r.contrast_mean_elements) +
         "}\n}\n";
  return out;
}

}  // namespace webcolor
