#include "webcolor/hier_encoder.hpp"

#include <algorithm>

#include "webcolor/errors.hpp"

namespace webcolor {

HierEncoder::HierEncoder(const HierEncoderConfig& config, Rng& rng)
    : config_(config),
      order_emb_(kMaxOrderEmbedding + 1, config.d_model, rng),
      tag_emb_(kTagVocabularySize, config.d_model, rng),
      text_dense_(kTextFeatureCount, config.d_model, rng),
      image_dense_(kImageFeatureCount, config.d_model, rng),
      bg_image_dense_(kImageFeatureCount, config.d_model, rng),
      mlp_up_(2 * config.d_model, config.d_model, config.d_model, rng),
      mlp_down_(2 * config.d_model, config.d_model, config.d_model, rng),
      h_leaf_("h_leaf", {config.d_model}),
      h_root_("h_root", {config.d_model}) {
  for (double& v : h_leaf_.value) v = rng.normal(0.0, 0.02);
  for (double& v : h_root_.value) v = rng.normal(0.0, 0.02);
}

Tensor HierEncoder::content_embeddings(Tape& tape, const PageTree& tree) {
  const int n = tree.size();
  std::vector<int> orders(static_cast<std::size_t>(n));
  std::vector<int> tags(static_cast<std::size_t>(n));
  std::vector<double> text(static_cast<std::size_t>(n) * kTextFeatureCount, 0.0);
  std::vector<double> image(static_cast<std::size_t>(n) * kImageFeatureCount, 0.0);
  std::vector<double> bg(static_cast<std::size_t>(n) * kImageFeatureCount, 0.0);
  for (int i = 0; i < n; ++i) {
    const auto& c = tree.elements[static_cast<std::size_t>(i)].content;
    orders[static_cast<std::size_t>(i)] = std::min(c.order, kMaxOrderEmbedding);
    tags[static_cast<std::size_t>(i)] = tag_id(c.tag);
    if (c.text_feats)
      std::copy(c.text_feats->begin(), c.text_feats->end(),
                text.begin() + static_cast<std::size_t>(i) * kTextFeatureCount);
    if (c.image_feats)
      std::copy(c.image_feats->begin(), c.image_feats->end(),
                image.begin() + static_cast<std::size_t>(i) * kImageFeatureCount);
    if (c.bg_image_feats)
      std::copy(c.bg_image_feats->begin(), c.bg_image_feats->end(),
                bg.begin() + static_cast<std::size_t>(i) * kImageFeatureCount);
  }
  std::vector<Tensor> pooled{
      order_emb_(tape, orders),
      tag_emb_(tape, tags),
      text_dense_(tape, tape.constant({n, kTextFeatureCount}, std::move(text))),
      image_dense_(tape,
                   tape.constant({n, kImageFeatureCount}, std::move(image))),
      bg_image_dense_(tape,
                      tape.constant({n, kImageFeatureCount}, std::move(bg)))};
  return maxpool(pooled);
}

Tensor HierEncoder::message_pass(Tape& tape, const PageTree& tree,
                                 const Tensor& h_bar) {
  if (h_bar.rows() != tree.size() || h_bar.cols() != config_.d_model)
    throw ShapeError("message_pass: h_bar " + shape_str(h_bar.shape()) +
                     " for " + std::to_string(tree.size()) + " elements");
  if (config_.no_message_passing) return h_bar;
  require_valid(tree);

  const int n = tree.size();
  auto children = child_lists(tree);
  std::vector<Tensor> rows(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i)
    rows[static_cast<std::size_t>(i)] = slice_rows(h_bar, i, i + 1);

  Tensor leaf_row = broadcast_rows(tape.param(h_leaf_), 1);
  Tensor root_row = broadcast_rows(tape.param(h_root_), 1);

  // Bottom-up: with pre-order storage, children always have larger
  // indices, so a reverse scan visits them before their parent.
  std::vector<Tensor> h_up(static_cast<std::size_t>(n));
  for (int i = n - 1; i >= 0; --i) {
    const auto& kids = children[static_cast<std::size_t>(i)];
    const Tensor& own = rows[static_cast<std::size_t>(i)];
    if (kids.empty()) {
      std::vector<Tensor> cat{own, leaf_row};
      h_up[static_cast<std::size_t>(i)] = mlp_up_(tape, concat_cols(cat));
    } else {
      std::vector<Tensor> messages;
      messages.reserve(kids.size());
      for (int c : kids) {
        std::vector<Tensor> cat{own, h_up[static_cast<std::size_t>(c)]};
        messages.push_back(mlp_up_(tape, concat_cols(cat)));
      }
      h_up[static_cast<std::size_t>(i)] = maxpool(messages);
    }
  }

  // Top-down: parents precede children in storage, so a forward scan works.
  std::vector<Tensor> h_down(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const auto& el = tree.elements[static_cast<std::size_t>(i)];
    const Tensor& context =
        el.parent ? h_down[static_cast<std::size_t>(*el.parent)] : root_row;
    std::vector<Tensor> cat{h_up[static_cast<std::size_t>(i)], context};
    h_down[static_cast<std::size_t>(i)] = mlp_down_(tape, concat_cols(cat));
  }

  Tensor down = concat_rows(h_down);
  return config_.no_residual ? down : add(h_bar, down);
}

Tensor HierEncoder::operator()(Tape& tape, const PageTree& tree) {
  return message_pass(tape, tree, content_embeddings(tape, tree));
}

void HierEncoder::collect_params(const std::string& prefix,
                                 std::vector<Param*>& out) {
  order_emb_.collect_params(prefix + ".order_emb", out);
  tag_emb_.collect_params(prefix + ".tag_emb", out);
  text_dense_.collect_params(prefix + ".text_dense", out);
  image_dense_.collect_params(prefix + ".image_dense", out);
  bg_image_dense_.collect_params(prefix + ".bg_image_dense", out);
  mlp_up_.collect_params(prefix + ".mlp_up", out);
  mlp_down_.collect_params(prefix + ".mlp_down", out);
  h_leaf_.name = prefix + ".h_leaf";
  h_root_.name = prefix + ".h_root";
  out.push_back(&h_leaf_);
  out.push_back(&h_root_);
}

}  // namespace webcolor
