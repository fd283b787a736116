#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include "webcolor/page.hpp"
#include "webcolor/tensor.hpp"

namespace webcolor::testutil {

inline double rel_err(double a, double b) {
  return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)});
}

// Central finite differences (h = 1e-5) against the tape gradients.
// `forward` must rebuild the loss from scratch on the given tape and be
// deterministic across calls. For large tensors a random sample of
// components is checked. Returns the worst relative error seen.
template <typename Forward>
double check_gradients(const std::vector<Param*>& params, Forward&& forward,
                       Rng& rng, int samples_per_param = 6, double h = 1e-5) {
  for (Param* p : params) p->zero_grad();
  {
    Tape tape;
    Tensor loss = forward(tape);
    tape.backward(loss);
  }
  double max_err = 0.0;
  for (Param* p : params) {
    const int n = numel(p->shape);
    const int samples = std::min(samples_per_param, n);
    for (int s = 0; s < samples; ++s) {
      int idx = n <= samples_per_param ? s : static_cast<int>(rng.below(n));
      double orig = p->value[static_cast<std::size_t>(idx)];
      p->value[static_cast<std::size_t>(idx)] = orig + h;
      double up;
      {
        Tape tape;
        up = forward(tape).item();
      }
      p->value[static_cast<std::size_t>(idx)] = orig - h;
      double down;
      {
        Tape tape;
        down = forward(tape).item();
      }
      p->value[static_cast<std::size_t>(idx)] = orig;
      double fd = (up - down) / (2.0 * h);
      max_err = std::max(max_err, rel_err(fd, p->grad[static_cast<std::size_t>(idx)]));
    }
  }
  return max_err;
}

// Hand-built pages used across the suites.

inline PageElement element(std::optional<int> parent, int order,
                           const std::string& tag, bool text) {
  PageElement el;
  el.parent = parent;
  el.content.order = order;
  el.content.tag = tag;
  if (text)
    el.content.text_feats = text_features_from_string("Sample text", 1, false);
  return el;
}

// root(div) -> {a(text), div -> {span(text)}}
inline PageTree small_page(const std::string& id = "test-page") {
  PageTree tree;
  tree.id = id;
  tree.elements.push_back(element(std::nullopt, 0, "html", false));
  tree.elements.push_back(element(0, 0, "a", true));
  tree.elements.push_back(element(0, 1, "div", false));
  tree.elements.push_back(element(2, 0, "span", true));
  return tree;
}

inline void style_page(PageTree& tree, const RgbaColor& text,
                       const RgbaColor& background) {
  for (auto& el : tree.elements) {
    ColorStyle style;
    style.background = background;
    if (el.content.has_text()) style.text = text;
    el.style = style;
  }
}

// Unique temp directory under the system temp root; removed on scope exit.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    path_ = (std::filesystem::temp_directory_path() /
             ("webcolor_" + tag + "_" + std::to_string(counter_++)))
                .string();
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::string& path() const { return path_; }
  std::string sub(const std::string& name) const { return path_ + "/" + name; }

 private:
  static inline int counter_ = 0;
  std::string path_;
};

}  // namespace webcolor::testutil
