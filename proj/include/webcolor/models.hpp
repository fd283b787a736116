#pragma once

#include <memory>
#include <string>
#include <vector>

#include "webcolor/color.hpp"
#include "webcolor/hier_encoder.hpp"
#include "webcolor/page.hpp"
#include "webcolor/transformer.hpp"

namespace webcolor {

// Architecture settings shared by the three generative cores and the
// upsampler; serialized into checkpoints.
struct ModelConfig {
  std::string kind = "nar";  // "ar" | "nar" | "cvae" | "upsampler"
  int d_model = 256;
  int n_heads = 8;
  int n_layers = 4;
  int d_ffn = 512;
  bool no_message_passing = false;
  bool no_residual = false;
  double lambda = 0.1;  // CVAE KL weight

  TransformerConfig transformer(bool causal, bool cross) const;
  HierEncoderConfig hier() const;
};

// Per-element categorical logits of the estimation head.
struct StyleLogits {
  Tensor text_rgb;    // (N, 512)
  Tensor text_alpha;  // (N, 8)
  Tensor bg_rgb;      // (N, 512)
  Tensor bg_alpha;    // (N, 8)
};

// Ground-truth class ids (0-based) and the text mask of a styled page.
struct StyleTargets {
  std::vector<int> text_rgb, text_alpha, bg_rgb, bg_alpha;
  std::vector<double> text_mask;  // 1.0 where the element has text
  int text_count = 0;
};

// Quantizes a page's stored full-resolution styles. Throws ContractError
// when any element lacks a style.
std::vector<QuantizedStyle> quantized_styles(const PageTree& tree);
StyleTargets style_targets(const PageTree& tree);
std::vector<char> text_mask_of(const PageTree& tree);

// Maps discrete styles to d-dimensional embeddings: RGB and alpha lookups
// merged into a color vector; text and background color vectors merged
// into the style embedding. No-text elements use a learnable placeholder
// in place of the text color vector.
class StyleEmbedder : public Module {
 public:
  StyleEmbedder(int d_model, Rng& rng);

  // styles.size() rows out; text presence must match the mask.
  Tensor operator()(Tape& tape, const std::vector<QuantizedStyle>& styles);
  void collect_params(const std::string& prefix,
                      std::vector<Param*>& out) override;

 private:
  int d_model_;
  Embedding rgb_emb_;    // (512, d/2)
  Embedding alpha_emb_;  // (8, d/2)
  Linear color_merge_;   // (d -> d)
  Linear style_merge_;   // (2d -> d)
  Param no_text_;        // (d)
};

// Four linear maps from the shared feature dimension to the categorical
// logits.
class StyleHead : public Module {
 public:
  StyleHead(int d_model, Rng& rng);

  StyleLogits operator()(Tape& tape, const Tensor& features);
  void collect_params(const std::string& prefix,
                      std::vector<Param*>& out) override;

 private:
  Linear text_rgb_, text_alpha_, bg_rgb_, bg_alpha_;
};

// Mean cross-entropy over contributing (element, head) terms: background
// heads always contribute, text heads only where the mask is set.
Tensor mle_loss(const StyleLogits& logits, const StyleTargets& targets);

// mle_loss + lambda * KL(N(mu, diag sigma^2) || N(0, I)).
Tensor cvae_loss(const StyleLogits& logits, const StyleTargets& targets,
                 const Tensor& mu, const Tensor& logvar, double lambda);

// ---- decoding utilities ----

struct Nucleus {
  std::vector<int> indices;      // sorted by probability, descending
  std::vector<double> probs;     // renormalized over the nucleus
};

// Smallest probability-sorted prefix with cumulative mass >= p. Ties
// break toward the smaller index so decoding is deterministic.
Nucleus top_p_nucleus(const std::vector<double>& probs, double p);

int argmax_index(const std::vector<double>& values);
std::vector<double> softmax_of(const std::vector<double>& logits);
// Greedy: argmax. Top-p: sample within the nucleus.
int decode_logits(const std::vector<double>& logits, bool greedy, double p,
                  Rng& rng);

struct DecodeOptions {
  enum class Strategy { kGreedy, kTopP, kPrior };
  Strategy strategy = Strategy::kGreedy;
  double top_p = 0.9;
};

// ---- the three generative cores ----

struct CvaeForward {
  StyleLogits logits;
  Tensor mu;      // (N, d)
  Tensor logvar;  // (N, d), clamped to [-10, 10]
  Tensor z;       // (N, d) reparametrized sample
};

struct LossParts {
  Tensor total;
  Tensor recon;  // mle component
  Tensor kl;     // defined() only for the CVAE
};

// One of the AR / NAR / CVAE cores, selected by config.kind. All three
// share the content encoder, style embedder and estimation head wiring.
class CoreModel : public Module {
 public:
  CoreModel(const ModelConfig& config, std::uint64_t init_seed);

  const ModelConfig& config() const { return config_; }
  std::vector<Param*> params();

  // Single-pass estimation from content alone.
  StyleLogits nar_forward(Tape& tape, const PageTree& tree);
  // Teacher-forced decoding: step n sees ground-truth styles of elements
  // 0..n-1 (step 0 sees the learnable start embedding) and cross-attends
  // to the encoded content.
  StyleLogits ar_forward_teacher_forced(
      Tape& tape, const PageTree& tree,
      const std::vector<QuantizedStyle>& gt_styles);
  // Posterior encode + reparametrized sample + decode.
  CvaeForward cvae_forward_train(Tape& tape, const PageTree& tree,
                                 const std::vector<QuantizedStyle>& gt_styles,
                                 Rng& noise);

  // Training loss for this core's kind; requires ground-truth styles on
  // the page.
  LossParts loss(Tape& tape, const PageTree& tree, Rng& noise);

  // Generation. AR honors greedy / top-p; NAR honors greedy / top-p
  // (per-element); CVAE requires the prior strategy.
  std::vector<QuantizedStyle> generate(const PageTree& tree,
                                       const DecodeOptions& options,
                                       std::uint64_t seed);

  void collect_params(const std::string& prefix,
                      std::vector<Param*>& out) override;

 private:
  Tensor cvae_decode(Tape& tape, const PageTree& tree, const Tensor& z,
                     const Tensor& h_content);

  ModelConfig config_;
  // Submodules are built in a fixed order from one seeded Rng; which ones
  // exist depends on the kind.
  std::unique_ptr<HierEncoder> content_;
  std::unique_ptr<StyleEmbedder> style_emb_;         // AR, CVAE
  std::unique_ptr<StyleHead> head_;
  std::unique_ptr<TransformerStack> encoder_;        // AR, NAR content stack
  std::unique_ptr<TransformerStack> decoder_;        // AR (causal+cross), CVAE
  std::unique_ptr<TransformerStack> posterior_enc_;  // CVAE only
  std::unique_ptr<Linear> mu_head_;                  // CVAE only
  std::unique_ptr<Linear> logvar_head_;              // CVAE only
  std::unique_ptr<Param> start_emb_;                 // AR only
};

// ---- diverse variation selection ----

// Mean over elements of the Euclidean distance between per-element RGBA
// vectors (text where present, then background).
double styling_distance(const PageTree& tree, const std::vector<ColorStyle>& a,
                        const std::vector<ColorStyle>& b);

// Greedy max-min selection over a symmetric distance matrix, starting
// from `first`. Returns m indices in selection order.
std::vector<int> diverse_select_indices(
    const std::vector<std::vector<double>>& dist, int m, int first);

// Full pipeline: seeded random first pick, then greedy max-min.
std::vector<int> diverse_select(
    const PageTree& tree,
    const std::vector<std::vector<ColorStyle>>& variations, int m,
    std::uint64_t seed);

}  // namespace webcolor
