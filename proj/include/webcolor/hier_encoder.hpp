#pragma once

#include "webcolor/nn.hpp"
#include "webcolor/page.hpp"

namespace webcolor {

struct HierEncoderConfig {
  int d_model = 256;
  // Ablations: skip the two-pass contextualization entirely (h_C = h_bar),
  // or drop the residual connection (h_C = h_down).
  bool no_message_passing = false;
  bool no_residual = false;
};

// Content encoder: per-element embeddings max-pooled into h_bar, then
// bottom-up and top-down message passing over the tree with a residual
// connection, producing one contextualized vector per element.
class HierEncoder : public Module {
 public:
  HierEncoder(const HierEncoderConfig& config, Rng& rng);

  // Max-pool of {order lookup, tag lookup, dense(text), dense(image),
  // dense(bg image)}; absent feature groups contribute their dense map of
  // the zero vector. Returns (N, d).
  Tensor content_embeddings(Tape& tape, const PageTree& tree);

  // Two message-passing passes over h_bar rows; returns h_C = h_bar +
  // h_down (modulo the ablation switches). Requires a valid tree.
  Tensor message_pass(Tape& tape, const PageTree& tree, const Tensor& h_bar);

  // content_embeddings followed by message_pass.
  Tensor operator()(Tape& tape, const PageTree& tree);

  void collect_params(const std::string& prefix,
                      std::vector<Param*>& out) override;
  const HierEncoderConfig& config() const { return config_; }

 private:
  HierEncoderConfig config_;
  Embedding order_emb_;
  Embedding tag_emb_;
  Linear text_dense_;
  Linear image_dense_;
  Linear bg_image_dense_;
  Mlp mlp_up_;
  Mlp mlp_down_;
  Param h_leaf_;
  Param h_root_;
};

}  // namespace webcolor
