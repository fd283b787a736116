#include "webcolor/upsampler.hpp"

#include "webcolor/errors.hpp"

namespace webcolor {

Upsampler::Upsampler(const ModelConfig& config, std::uint64_t init_seed)
    : config_(config) {
  if (config.kind != "upsampler")
    throw ContractError("Upsampler: config kind is '" + config.kind + "'");
  Rng rng(init_seed);
  content_ = std::make_unique<HierEncoder>(config.hier(), rng);
  style_emb_ = std::make_unique<StyleEmbedder>(config.d_model, rng);
  encoder_ = std::make_unique<TransformerStack>(
      config.transformer(/*causal=*/false, /*cross=*/false), rng);
  out_head_ = std::make_unique<Linear>(config.d_model, 8, rng);
}

std::vector<Param*> Upsampler::params() {
  std::vector<Param*> out;
  collect_params("upsampler", out);
  return out;
}

Tensor Upsampler::forward(Tape& tape, const PageTree& tree,
                          const std::vector<QuantizedStyle>& styles) {
  if (static_cast<int>(styles.size()) != tree.size())
    throw ContractError("upsampler: " + std::to_string(styles.size()) +
                        " styles for " + std::to_string(tree.size()) +
                        " elements");
  Tensor h = add((*content_)(tape, tree), (*style_emb_)(tape, styles));
  return sigmoid((*out_head_)(tape, (*encoder_)(tape, h)));
}

ProportionTargets proportion_targets(const PageTree& tree) {
  ProportionTargets t;
  const std::size_t n = tree.elements.size();
  t.values.assign(n * 8, 0.0);
  t.mask.assign(n * 8, 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& el = tree.elements[i];
    if (!el.style)
      throw ContractError("page '" + tree.id + "': element " +
                          std::to_string(i) + " has no ground-truth style");
    if (el.style->text) {
      ChannelProportions p = gt_proportions(*el.style->text);
      for (int c = 0; c < 4; ++c)
        t.values[i * 8 + static_cast<std::size_t>(c)] =
            p[static_cast<std::size_t>(c)];
    } else {
      for (int c = 0; c < 4; ++c) t.mask[i * 8 + static_cast<std::size_t>(c)] = 0.0;
    }
    ChannelProportions p = gt_proportions(el.style->background);
    for (int c = 0; c < 4; ++c)
      t.values[i * 8 + 4 + static_cast<std::size_t>(c)] =
          p[static_cast<std::size_t>(c)];
  }
  return t;
}

Tensor Upsampler::loss(Tape& tape, const PageTree& tree) {
  ProportionTargets targets = proportion_targets(tree);
  Tensor pred = forward(tape, tree, quantized_styles(tree));
  Tensor target = tape.constant({tree.size(), 8}, std::move(targets.values));
  return masked_mse(pred, target, targets.mask);
}

std::vector<StyleProportions> Upsampler::predict(
    const PageTree& tree, const std::vector<QuantizedStyle>& styles) {
  Tape tape;
  Tensor out = forward(tape, tree, styles);
  const auto& v = out.values();
  std::vector<StyleProportions> props(styles.size());
  for (std::size_t i = 0; i < styles.size(); ++i)
    for (std::size_t c = 0; c < 4; ++c) {
      props[i].text[c] = v[i * 8 + c];
      props[i].background[c] = v[i * 8 + 4 + c];
    }
  return props;
}

std::vector<ColorStyle> Upsampler::apply(
    const PageTree& tree, const std::vector<QuantizedStyle>& styles) {
  auto props = predict(tree, styles);
  std::vector<ColorStyle> out(styles.size());
  for (std::size_t i = 0; i < styles.size(); ++i) {
    out[i].background = reconstruct(styles[i].background, props[i].background);
    if (styles[i].text) out[i].text = reconstruct(*styles[i].text, props[i].text);
  }
  return out;
}

void Upsampler::collect_params(const std::string& prefix,
                               std::vector<Param*>& out) {
  content_->collect_params(prefix + ".content", out);
  style_emb_->collect_params(prefix + ".style_emb", out);
  encoder_->collect_params(prefix + ".encoder", out);
  out_head_->collect_params(prefix + ".out_head", out);
}

}  // namespace webcolor
