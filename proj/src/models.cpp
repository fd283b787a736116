#include "webcolor/models.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "webcolor/errors.hpp"

namespace webcolor {

TransformerConfig ModelConfig::transformer(bool causal, bool cross) const {
  TransformerConfig t;
  t.d_model = d_model;
  t.n_heads = n_heads;
  t.n_layers = n_layers;
  t.d_ffn = d_ffn;
  t.causal = causal;
  t.cross_attention = cross;
  return t;
}

HierEncoderConfig ModelConfig::hier() const {
  return {d_model, no_message_passing, no_residual};
}

std::vector<QuantizedStyle> quantized_styles(const PageTree& tree) {
  std::vector<QuantizedStyle> out;
  out.reserve(tree.elements.size());
  for (int i = 0; i < tree.size(); ++i) {
    const auto& el = tree.elements[static_cast<std::size_t>(i)];
    if (!el.style)
      throw ContractError("page '" + tree.id + "': element " +
                          std::to_string(i) + " has no ground-truth style");
    QuantizedStyle q;
    q.background = quantize(el.style->background);
    if (el.style->text) q.text = quantize(*el.style->text);
    out.push_back(q);
  }
  return out;
}

StyleTargets style_targets(const PageTree& tree) {
  auto styles = quantized_styles(tree);
  StyleTargets t;
  const std::size_t n = styles.size();
  t.text_rgb.resize(n, 0);
  t.text_alpha.resize(n, 0);
  t.bg_rgb.resize(n, 0);
  t.bg_alpha.resize(n, 0);
  t.text_mask.resize(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    t.bg_rgb[i] = styles[i].background.rgb_index - 1;
    t.bg_alpha[i] = styles[i].background.alpha_index - 1;
    if (styles[i].text) {
      t.text_rgb[i] = styles[i].text->rgb_index - 1;
      t.text_alpha[i] = styles[i].text->alpha_index - 1;
      t.text_mask[i] = 1.0;
      ++t.text_count;
    }
  }
  return t;
}

std::vector<char> text_mask_of(const PageTree& tree) {
  std::vector<char> mask(tree.elements.size());
  for (std::size_t i = 0; i < mask.size(); ++i)
    mask[i] = tree.elements[i].content.has_text() ? 1 : 0;
  return mask;
}

StyleEmbedder::StyleEmbedder(int d_model, Rng& rng)
    : d_model_(d_model),
      rgb_emb_(kRgbClasses, d_model / 2, rng),
      alpha_emb_(kAlphaClasses, d_model / 2, rng),
      color_merge_(d_model, d_model, rng),
      style_merge_(2 * d_model, d_model, rng),
      no_text_("no_text", {d_model}) {
  if (d_model % 2 != 0)
    throw ContractError("StyleEmbedder: d_model must be even");
  for (double& v : no_text_.value) v = rng.normal(0.0, 0.02);
}

Tensor StyleEmbedder::operator()(Tape& tape,
                                 const std::vector<QuantizedStyle>& styles) {
  const int n = static_cast<int>(styles.size());
  if (n == 0) throw ContractError("StyleEmbedder: empty style list");
  std::vector<int> bg_rgb(styles.size()), bg_alpha(styles.size());
  std::vector<int> tx_rgb(styles.size(), 0), tx_alpha(styles.size(), 0);
  std::vector<char> has_text(styles.size(), 0);
  for (std::size_t i = 0; i < styles.size(); ++i) {
    const auto& s = styles[i];
    auto check = [](const QuantizedColor& q) {
      if (q.rgb_index < 1 || q.rgb_index > kRgbClasses || q.alpha_index < 1 ||
          q.alpha_index > kAlphaClasses)
        throw ContractError("StyleEmbedder: quantized index out of range");
    };
    check(s.background);
    bg_rgb[i] = s.background.rgb_index - 1;
    bg_alpha[i] = s.background.alpha_index - 1;
    if (s.text) {
      check(*s.text);
      tx_rgb[i] = s.text->rgb_index - 1;
      tx_alpha[i] = s.text->alpha_index - 1;
      has_text[i] = 1;
    }
  }
  auto color_vec = [&](const std::vector<int>& rgb,
                       const std::vector<int>& alpha) {
    std::vector<Tensor> parts{rgb_emb_(tape, rgb), alpha_emb_(tape, alpha)};
    return color_merge_(tape, concat_cols(parts));
  };
  Tensor bg_vec = color_vec(bg_rgb, bg_alpha);
  Tensor tx_vec = where_rows(has_text, color_vec(tx_rgb, tx_alpha),
                             broadcast_rows(tape.param(no_text_), n));
  std::vector<Tensor> merged{tx_vec, bg_vec};
  return style_merge_(tape, concat_cols(merged));
}

void StyleEmbedder::collect_params(const std::string& prefix,
                                   std::vector<Param*>& out) {
  rgb_emb_.collect_params(prefix + ".rgb_emb", out);
  alpha_emb_.collect_params(prefix + ".alpha_emb", out);
  color_merge_.collect_params(prefix + ".color_merge", out);
  style_merge_.collect_params(prefix + ".style_merge", out);
  no_text_.name = prefix + ".no_text";
  out.push_back(&no_text_);
}

StyleHead::StyleHead(int d_model, Rng& rng)
    : text_rgb_(d_model, kRgbClasses, rng),
      text_alpha_(d_model, kAlphaClasses, rng),
      bg_rgb_(d_model, kRgbClasses, rng),
      bg_alpha_(d_model, kAlphaClasses, rng) {}

StyleLogits StyleHead::operator()(Tape& tape, const Tensor& features) {
  return {text_rgb_(tape, features), text_alpha_(tape, features),
          bg_rgb_(tape, features), bg_alpha_(tape, features)};
}

void StyleHead::collect_params(const std::string& prefix,
                               std::vector<Param*>& out) {
  text_rgb_.collect_params(prefix + ".text_rgb", out);
  text_alpha_.collect_params(prefix + ".text_alpha", out);
  bg_rgb_.collect_params(prefix + ".bg_rgb", out);
  bg_alpha_.collect_params(prefix + ".bg_alpha", out);
}

Tensor mle_loss(const StyleLogits& logits, const StyleTargets& targets) {
  const int n = logits.bg_rgb.rows();
  if (static_cast<int>(targets.bg_rgb.size()) != n)
    throw ShapeError("mle_loss: " + std::to_string(targets.bg_rgb.size()) +
                     " targets for " + std::to_string(n) + " logit rows");
  Tensor total = cross_entropy_rows(logits.text_rgb, targets.text_rgb,
                                    targets.text_mask);
  total = add(total, cross_entropy_rows(logits.text_alpha, targets.text_alpha,
                                        targets.text_mask));
  total = add(total, cross_entropy_rows(logits.bg_rgb, targets.bg_rgb));
  total = add(total, cross_entropy_rows(logits.bg_alpha, targets.bg_alpha));
  const int contributing = 2 * n + 2 * targets.text_count;
  return scale(total, 1.0 / contributing);
}

Tensor cvae_loss(const StyleLogits& logits, const StyleTargets& targets,
                 const Tensor& mu, const Tensor& logvar, double lambda) {
  Tensor recon = mle_loss(logits, targets);
  return add(recon, scale(gaussian_kl(mu, logvar), lambda));
}

Nucleus top_p_nucleus(const std::vector<double>& probs, double p) {
  if (probs.empty()) throw ContractError("top_p_nucleus: empty distribution");
  std::vector<int> order(probs.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return probs[static_cast<std::size_t>(a)] > probs[static_cast<std::size_t>(b)];
  });
  Nucleus nucleus;
  double cum = 0.0;
  // Small tolerance so exact-by-construction masses (0.5 + 0.3 vs p = 0.8)
  // are not broken by float summation.
  for (int idx : order) {
    nucleus.indices.push_back(idx);
    cum += probs[static_cast<std::size_t>(idx)];
    if (cum >= p - 1e-9) break;
  }
  nucleus.probs.reserve(nucleus.indices.size());
  double mass = 0.0;
  for (int idx : nucleus.indices) mass += probs[static_cast<std::size_t>(idx)];
  for (int idx : nucleus.indices)
    nucleus.probs.push_back(probs[static_cast<std::size_t>(idx)] / mass);
  return nucleus;
}

int argmax_index(const std::vector<double>& values) {
  if (values.empty()) throw ContractError("argmax_index: empty input");
  return static_cast<int>(
      std::max_element(values.begin(), values.end()) - values.begin());
}

std::vector<double> softmax_of(const std::vector<double>& logits) {
  std::vector<double> out(logits.size());
  double mx = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - mx);
    sum += out[i];
  }
  for (double& v : out) v /= sum;
  return out;
}

int decode_logits(const std::vector<double>& logits, bool greedy, double p,
                  Rng& rng) {
  if (greedy) return argmax_index(logits);
  Nucleus nucleus = top_p_nucleus(softmax_of(logits), p);
  double u = rng.uniform();
  double cum = 0.0;
  for (std::size_t i = 0; i < nucleus.indices.size(); ++i) {
    cum += nucleus.probs[i];
    if (u < cum) return nucleus.indices[i];
  }
  return nucleus.indices.back();
}

CoreModel::CoreModel(const ModelConfig& config, std::uint64_t init_seed)
    : config_(config) {
  const bool is_ar = config.kind == "ar";
  const bool is_nar = config.kind == "nar";
  const bool is_cvae = config.kind == "cvae";
  if (!is_ar && !is_nar && !is_cvae)
    throw ContractError("CoreModel: unknown kind '" + config.kind + "'");

  // One generator drives every init; module creation order is the draw
  // order and must stay stable for checkpoint reproducibility.
  Rng rng(init_seed);
  content_ = std::make_unique<HierEncoder>(config.hier(), rng);
  if (is_ar || is_cvae)
    style_emb_ = std::make_unique<StyleEmbedder>(config.d_model, rng);
  head_ = std::make_unique<StyleHead>(config.d_model, rng);
  if (is_ar || is_nar)
    encoder_ = std::make_unique<TransformerStack>(
        config.transformer(/*causal=*/false, /*cross=*/false), rng);
  if (is_ar)
    decoder_ = std::make_unique<TransformerStack>(
        config.transformer(/*causal=*/true, /*cross=*/true), rng);
  if (is_cvae) {
    posterior_enc_ = std::make_unique<TransformerStack>(
        config.transformer(/*causal=*/false, /*cross=*/false), rng);
    decoder_ = std::make_unique<TransformerStack>(
        config.transformer(/*causal=*/false, /*cross=*/false), rng);
    mu_head_ = std::make_unique<Linear>(config.d_model, config.d_model, rng);
    logvar_head_ =
        std::make_unique<Linear>(config.d_model, config.d_model, rng);
  }
  if (is_ar) {
    start_emb_ = std::make_unique<Param>("start_emb", Shape{config.d_model});
    for (double& v : start_emb_->value) v = rng.normal(0.0, 0.02);
  }
}

std::vector<Param*> CoreModel::params() {
  std::vector<Param*> out;
  collect_params(config_.kind, out);
  return out;
}

StyleLogits CoreModel::nar_forward(Tape& tape, const PageTree& tree) {
  if (!encoder_)
    throw ContractError("nar_forward: model kind is '" + config_.kind + "'");
  Tensor h = (*content_)(tape, tree);
  return (*head_)(tape, (*encoder_)(tape, h));
}

StyleLogits CoreModel::ar_forward_teacher_forced(
    Tape& tape, const PageTree& tree,
    const std::vector<QuantizedStyle>& gt_styles) {
  if (config_.kind != "ar")
    throw ContractError("ar_forward: model kind is '" + config_.kind + "'");
  const int n = tree.size();
  if (static_cast<int>(gt_styles.size()) != n)
    throw ContractError("ar_forward: " + std::to_string(gt_styles.size()) +
                        " styles for " + std::to_string(n) +
                        " elements (pre-order mismatch)");
  Tensor memory = (*encoder_)(tape, (*content_)(tape, tree));
  Tensor start = broadcast_rows(tape.param(*start_emb_), 1);
  Tensor steps;
  if (n == 1) {
    steps = start;
  } else {
    std::vector<QuantizedStyle> prefix(gt_styles.begin(), gt_styles.end() - 1);
    std::vector<Tensor> rows{start, (*style_emb_)(tape, prefix)};
    steps = concat_rows(rows);
  }
  steps = add(steps, positional_encoding_tensor(tape, n, config_.d_model));
  return (*head_)(tape, (*decoder_)(tape, steps, &memory));
}

Tensor CoreModel::cvae_decode(Tape& tape, const PageTree& tree, const Tensor& z,
                              const Tensor& h_content) {
  Tensor dec_in =
      add(add(z, positional_encoding_tensor(tape, tree.size(), config_.d_model)),
          h_content);
  return (*decoder_)(tape, dec_in);
}

CvaeForward CoreModel::cvae_forward_train(
    Tape& tape, const PageTree& tree,
    const std::vector<QuantizedStyle>& gt_styles, Rng& noise) {
  if (config_.kind != "cvae")
    throw ContractError("cvae_forward: model kind is '" + config_.kind + "'");
  Tensor h_content = (*content_)(tape, tree);
  Tensor h_style = (*style_emb_)(tape, gt_styles);
  Tensor post = (*posterior_enc_)(tape, add(h_content, h_style));
  Tensor mu = (*mu_head_)(tape, post);
  Tensor logvar = clamp((*logvar_head_)(tape, post), -10.0, 10.0);
  std::vector<double> eps(mu.values().size());
  for (double& e : eps) e = noise.normal();
  Tensor z = reparam_sample(mu, logvar, eps);
  Tensor decoded = cvae_decode(tape, tree, z, h_content);
  return {(*head_)(tape, decoded), mu, logvar, z};
}

LossParts CoreModel::loss(Tape& tape, const PageTree& tree, Rng& noise) {
  StyleTargets targets = style_targets(tree);
  if (config_.kind == "cvae") {
    CvaeForward fwd = cvae_forward_train(tape, tree, quantized_styles(tree), noise);
    Tensor recon = mle_loss(fwd.logits, targets);
    Tensor kl = gaussian_kl(fwd.mu, fwd.logvar);
    return {add(recon, scale(kl, config_.lambda)), recon, kl};
  }
  StyleLogits logits =
      config_.kind == "ar"
          ? ar_forward_teacher_forced(tape, tree, quantized_styles(tree))
          : nar_forward(tape, tree);
  Tensor recon = mle_loss(logits, targets);
  return {recon, recon, Tensor()};
}

namespace {

std::vector<double> logits_row(const Tensor& logits, int row) {
  const int c = logits.cols();
  auto begin = logits.values().begin() + static_cast<std::size_t>(row) * c;
  return {begin, begin + c};
}

QuantizedStyle decode_element(const StyleLogits& logits, int row, bool has_text,
                              bool greedy, double p, Rng& rng) {
  QuantizedStyle style;
  if (has_text) {
    QuantizedColor text;
    text.rgb_index = 1 + decode_logits(logits_row(logits.text_rgb, row), greedy, p, rng);
    text.alpha_index =
        1 + decode_logits(logits_row(logits.text_alpha, row), greedy, p, rng);
    style.text = text;
  }
  style.background.rgb_index =
      1 + decode_logits(logits_row(logits.bg_rgb, row), greedy, p, rng);
  style.background.alpha_index =
      1 + decode_logits(logits_row(logits.bg_alpha, row), greedy, p, rng);
  return style;
}

}  // namespace

std::vector<QuantizedStyle> CoreModel::generate(const PageTree& tree,
                                                const DecodeOptions& options,
                                                std::uint64_t seed) {
  require_valid(tree);
  const int n = tree.size();
  auto text_mask = text_mask_of(tree);
  Rng rng(seed);

  if (config_.kind == "cvae") {
    if (options.strategy != DecodeOptions::Strategy::kPrior)
      throw ContractError("generate: the CVAE decodes from the prior; use the prior strategy");
    Tape tape;
    Tensor h_content = (*content_)(tape, tree);
    std::vector<double> z_values(static_cast<std::size_t>(n) * config_.d_model);
    for (double& v : z_values) v = rng.normal();
    Tensor z = tape.constant({n, config_.d_model}, std::move(z_values));
    StyleLogits logits = (*head_)(tape, cvae_decode(tape, tree, z, h_content));
    std::vector<QuantizedStyle> out;
    out.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
      out.push_back(decode_element(logits, i, text_mask[static_cast<std::size_t>(i)],
                                   /*greedy=*/true, 0.0, rng));
    return out;
  }

  if (options.strategy == DecodeOptions::Strategy::kPrior)
    throw ContractError("generate: prior strategy requires a cvae model");
  const bool greedy = options.strategy == DecodeOptions::Strategy::kGreedy;

  if (config_.kind == "nar") {
    Tape tape;
    StyleLogits logits = nar_forward(tape, tree);
    std::vector<QuantizedStyle> out;
    out.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
      out.push_back(decode_element(logits, i, text_mask[static_cast<std::size_t>(i)],
                                   greedy, options.top_p, rng));
    return out;
  }

  // AR: sequential decoding in pre-order; each step re-runs the decoder on
  // the sampled prefix (no KV cache at desk scale).
  Tape tape;
  Tensor memory = (*encoder_)(tape, (*content_)(tape, tree));
  std::vector<QuantizedStyle> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int step = 0; step < n; ++step) {
    Tensor start = broadcast_rows(tape.param(*start_emb_), 1);
    Tensor steps = start;
    if (step > 0) {
      std::vector<Tensor> rows{start, (*style_emb_)(tape, out)};
      steps = concat_rows(rows);
    }
    steps = add(steps,
                positional_encoding_tensor(tape, step + 1, config_.d_model));
    Tensor decoded = (*decoder_)(tape, steps, &memory);
    StyleLogits logits = (*head_)(tape, decoded);
    out.push_back(decode_element(logits, step,
                                 text_mask[static_cast<std::size_t>(step)],
                                 greedy, options.top_p, rng));
  }
  return out;
}

void CoreModel::collect_params(const std::string& prefix,
                               std::vector<Param*>& out) {
  content_->collect_params(prefix + ".content", out);
  if (style_emb_) style_emb_->collect_params(prefix + ".style_emb", out);
  head_->collect_params(prefix + ".head", out);
  if (encoder_) encoder_->collect_params(prefix + ".encoder", out);
  if (decoder_) decoder_->collect_params(prefix + ".decoder", out);
  if (posterior_enc_)
    posterior_enc_->collect_params(prefix + ".posterior", out);
  if (mu_head_) mu_head_->collect_params(prefix + ".mu_head", out);
  if (logvar_head_) logvar_head_->collect_params(prefix + ".logvar_head", out);
  if (start_emb_) {
    start_emb_->name = prefix + ".start_emb";
    out.push_back(start_emb_.get());
  }
}

double styling_distance(const PageTree& tree, const std::vector<ColorStyle>& a,
                        const std::vector<ColorStyle>& b) {
  const std::size_t n = tree.elements.size();
  if (a.size() != n || b.size() != n)
    throw ContractError("styling_distance: style count does not match page");
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double sq = 0.0;
    auto accumulate = [&sq](const RgbaColor& x, const RgbaColor& y) {
      auto d = [](int u, int v) {
        double t = static_cast<double>(u - v);
        return t * t;
      };
      sq += d(x.r, y.r) + d(x.g, y.g) + d(x.b, y.b) + d(x.a, y.a);
    };
    if (tree.elements[i].content.has_text()) {
      if (!a[i].text || !b[i].text)
        throw ContractError("styling_distance: missing text color on a text element");
      accumulate(*a[i].text, *b[i].text);
    }
    accumulate(a[i].background, b[i].background);
    total += std::sqrt(sq);
  }
  return total / static_cast<double>(n);
}

std::vector<int> diverse_select_indices(
    const std::vector<std::vector<double>>& dist, int m, int first) {
  const int k = static_cast<int>(dist.size());
  if (m < 1 || m > k)
    throw ContractError("diverse_select: cannot pick " + std::to_string(m) +
                        " of " + std::to_string(k) + " candidates");
  if (first < 0 || first >= k)
    throw ContractError("diverse_select: start index out of range");
  std::vector<int> selected{first};
  std::vector<char> used(static_cast<std::size_t>(k), 0);
  used[static_cast<std::size_t>(first)] = 1;
  while (static_cast<int>(selected.size()) < m) {
    int best = -1;
    double best_score = -1.0;
    for (int i = 0; i < k; ++i) {
      if (used[static_cast<std::size_t>(i)]) continue;
      double score = std::numeric_limits<double>::infinity();
      for (int s : selected)
        score = std::min(score, dist[static_cast<std::size_t>(i)]
                                    [static_cast<std::size_t>(s)]);
      if (score > best_score) {
        best_score = score;
        best = i;
      }
    }
    selected.push_back(best);
    used[static_cast<std::size_t>(best)] = 1;
  }
  return selected;
}

std::vector<int> diverse_select(
    const PageTree& tree,
    const std::vector<std::vector<ColorStyle>>& variations, int m,
    std::uint64_t seed) {
  const int k = static_cast<int>(variations.size());
  if (m < 1 || m > k)
    throw ContractError("diverse_select: cannot pick " + std::to_string(m) +
                        " of " + std::to_string(k) + " variations");
  std::vector<std::vector<double>> dist(
      static_cast<std::size_t>(k),
      std::vector<double>(static_cast<std::size_t>(k), 0.0));
  for (int i = 0; i < k; ++i)
    for (int j = i + 1; j < k; ++j) {
      double d = styling_distance(tree, variations[static_cast<std::size_t>(i)],
                                  variations[static_cast<std::size_t>(j)]);
      dist[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = d;
      dist[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)] = d;
    }
  Rng rng(seed);
  int first = static_cast<int>(rng.below(static_cast<std::uint64_t>(k)));
  return diverse_select_indices(dist, m, first);
}

}  // namespace webcolor
