#pragma once

#include <span>
#include <string>
#include <vector>

#include "webcolor/linalg.hpp"
#include "webcolor/page.hpp"

namespace webcolor {

// Exact-match fractions over contributing (element, property) slots.
// Background slots always contribute; text slots only on text elements.
struct PairScores {
  double rgb = 0.0;
  double alpha = 0.0;
};

// Predictions and ground truth are aligned page lists: same ids, sizes
// and text masks, or the call throws ValidationError.
PairScores accuracy(std::span<const PageTree> pred,
                    std::span<const PageTree> gt);

// Macro F-score: unweighted mean of class-wise F1 over the union of
// classes present in either side; classes with no true or predicted
// positives score 0.
PairScores macro_f(std::span<const PageTree> pred,
                   std::span<const PageTree> gt);

enum class HistogramKind { kBackground, kText, kPixel };

using ColorHistogram = std::vector<double>;  // 512 discrete-RGB bins

// Per-page histogram of quantized RGB colors (alpha ignored), normalized
// by contributing element count; text histograms exclude no-text elements
// (all-zero when the page has no text). Pixel histograms come from the
// deterministic rasterizer and are normalized by pixel count.
ColorHistogram page_histogram(const PageTree& page, HistogramKind kind);

struct GaussianStats {
  std::vector<double> mean;  // 512
  Mat cov;                   // 512 x 512, symmetric
  int count = 0;
};

// Sample mean and covariance (n - 1 denominator); needs >= 2 histograms.
GaussianStats fit_gaussian(const std::vector<ColorHistogram>& histograms);

// ||mu_a - mu_b||^2 + Tr(Sa + Sb - 2 (Sa^{1/2} Sb Sa^{1/2})^{1/2}), matrix
// roots via symmetric eigendecomposition with eigenvalues clamped at 0.
double frechet_distance(const GaussianStats& a, const GaussianStats& b);

// Table-style protocol: `generated` and `real` are aligned versions of
// the same page set. A seeded shuffle splits the indices in half; stats
// of generated[first half] are compared against real[second half].
double fcd_protocol(std::span<const PageTree> generated,
                    std::span<const PageTree> real, HistogramKind kind,
                    std::uint64_t seed);

// WCAG 2.1 relative luminance of an sRGB color (alpha ignored).
double relative_luminance(const RgbaColor& color);

// (L1 + 0.05) / (L2 + 0.05) with L1 >= L2; fg is first alpha-composited
// over the opaque bg. Always in [1, 21].
double contrast_ratio(const RgbaColor& fg, const RgbaColor& bg);

inline constexpr double kContrastThreshold = 4.5;

struct ContrastViolation {
  int element = -1;
  double ratio = 0.0;
};

// Audits every text element against its effective background: the
// element's own background composited over its ancestors' backgrounds
// down to an opaque white base. Requires full-resolution styles.
std::vector<ContrastViolation> audit_page(const PageTree& page);

struct ContrastReport {
  double pages_violating_fraction = 0.0;
  double mean_violating_elements = 0.0;
  std::vector<std::pair<std::string, int>> per_page;  // (page id, violations)
};

ContrastReport aggregate_contrast(std::span<const PageTree> pages);

// Everything `evaluate` reports, serializable as canonical JSON.
struct MetricReport {
  PairScores accuracy;
  PairScores macro_f;
  double fcd_bg = 0.0;
  double fcd_text = 0.0;
  double fcd_pixel = 0.0;
  double contrast_pct_pages = 0.0;
  double contrast_mean_elements = 0.0;
};

std::string metric_report_json(const MetricReport& report);

}  // namespace webcolor
