#pragma once

#include <memory>

#include "webcolor/models.hpp"

namespace webcolor {

// Regresses within-bin channel proportions for given discrete styles and
// reconstructs full-resolution RGBA. By construction the reconstructed
// colors stay inside their quantization bins.
class Upsampler : public Module {
 public:
  Upsampler(const ModelConfig& config, std::uint64_t init_seed);

  const ModelConfig& config() const { return config_; }
  std::vector<Param*> params();

  // (N, 8) sigmoid outputs: text r,g,b,a then background r,g,b,a per row.
  Tensor forward(Tape& tape, const PageTree& tree,
                 const std::vector<QuantizedStyle>& styles);

  // MSE against the ground-truth proportions of the page's stored colors;
  // text entries masked out for no-text elements.
  Tensor loss(Tape& tape, const PageTree& tree);

  std::vector<StyleProportions> predict(const PageTree& tree,
                                        const std::vector<QuantizedStyle>& styles);

  // Full-resolution styles for the given discrete styles.
  std::vector<ColorStyle> apply(const PageTree& tree,
                                const std::vector<QuantizedStyle>& styles);

  void collect_params(const std::string& prefix,
                      std::vector<Param*>& out) override;

 private:
  ModelConfig config_;
  std::unique_ptr<HierEncoder> content_;
  std::unique_ptr<StyleEmbedder> style_emb_;
  std::unique_ptr<TransformerStack> encoder_;
  std::unique_ptr<Linear> out_head_;  // (d -> 8)
};

// Ground-truth proportion targets of a fully styled page, flattened to
// (N, 8) with the companion 0/1 mask (text entries masked when no text).
struct ProportionTargets {
  std::vector<double> values;  // N * 8
  std::vector<double> mask;    // N * 8
};
ProportionTargets proportion_targets(const PageTree& tree);

}  // namespace webcolor
