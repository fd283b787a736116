#include "webcolor/transformer.hpp"

#include <cmath>

#include "webcolor/errors.hpp"

namespace webcolor {

namespace {

// Large negative additive mask; exp(x - max) underflows to exactly 0 for
// masked entries, which keeps causality exact in the backward pass too.
constexpr double kMaskedOut = -1e30;

}  // namespace

std::vector<double> positional_encoding(int n, int d) {
  std::vector<double> table(static_cast<std::size_t>(n) * d);
  for (int pos = 0; pos < n; ++pos)
    for (int i = 0; i < d; i += 2) {
      double freq = std::pow(10000.0, -static_cast<double>(i) / d);
      double angle = pos * freq;
      table[static_cast<std::size_t>(pos) * d + i] = std::sin(angle);
      if (i + 1 < d)
        table[static_cast<std::size_t>(pos) * d + i + 1] = std::cos(angle);
    }
  return table;
}

Tensor positional_encoding_tensor(Tape& tape, int n, int d) {
  return tape.constant({n, d}, positional_encoding(n, d));
}

MultiHeadAttention::MultiHeadAttention(int d_model, int n_heads, Rng& rng)
    : n_heads_(n_heads),
      head_dim_(d_model / n_heads),
      wq_(d_model, d_model, rng),
      wk_(d_model, d_model, rng),
      wv_(d_model, d_model, rng),
      wo_(d_model, d_model, rng) {
  if (d_model % n_heads != 0)
    throw ContractError("attention: d_model " + std::to_string(d_model) +
                        " not divisible by " + std::to_string(n_heads) +
                        " heads");
}

Tensor MultiHeadAttention::operator()(Tape& tape, const Tensor& queries,
                                      const Tensor& keys, const Tensor& values,
                                      bool causal) {
  const int nq = queries.rows();
  const int nk = keys.rows();
  Tensor q = wq_(tape, queries);
  Tensor k = wk_(tape, keys);
  Tensor v = wv_(tape, values);

  Tensor mask;
  if (causal) {
    if (nq != nk) throw ContractError("attention: causal mask needs nq == nk");
    std::vector<double> m(static_cast<std::size_t>(nq) * nk, 0.0);
    for (int i = 0; i < nq; ++i)
      for (int j = i + 1; j < nk; ++j)
        m[static_cast<std::size_t>(i) * nk + j] = kMaskedOut;
    mask = tape.constant({nq, nk}, std::move(m));
  }

  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(head_dim_));
  std::vector<Tensor> heads;
  heads.reserve(static_cast<std::size_t>(n_heads_));
  for (int h = 0; h < n_heads_; ++h) {
    int c0 = h * head_dim_, c1 = c0 + head_dim_;
    Tensor qh = slice_cols(q, c0, c1);
    Tensor kh = slice_cols(k, c0, c1);
    Tensor vh = slice_cols(v, c0, c1);
    Tensor scores = scale(matmul_nt(qh, kh), inv_sqrt_d);
    if (causal) scores = add(scores, mask);
    Tensor attn = softmax_rows(scores);
    heads.push_back(matmul(attn, vh));
  }
  return wo_(tape, concat_cols(heads));
}

void MultiHeadAttention::collect_params(const std::string& prefix,
                                        std::vector<Param*>& out) {
  wq_.collect_params(prefix + ".wq", out);
  wk_.collect_params(prefix + ".wk", out);
  wv_.collect_params(prefix + ".wv", out);
  wo_.collect_params(prefix + ".wo", out);
}

TransformerBlock::TransformerBlock(const TransformerConfig& config, Rng& rng)
    : config_(config),
      ln_attn_(config.d_model),
      self_attn_(config.d_model, config.n_heads, rng),
      ln_ffn_(config.d_model),
      ffn_in_(config.d_model, config.d_ffn, rng),
      ffn_out_(config.d_ffn, config.d_model, rng) {
  if (config.cross_attention) {
    ln_cross_.emplace(config.d_model);
    cross_attn_.emplace(config.d_model, config.n_heads, rng);
  }
}

Tensor TransformerBlock::operator()(Tape& tape, const Tensor& x,
                                    const Tensor* memory) {
  Tensor h = x;
  Tensor normed = ln_attn_(tape, h);
  h = add(h, self_attn_(tape, normed, normed, normed, config_.causal));
  if (config_.cross_attention) {
    if (!memory)
      throw ContractError("transformer: cross_attention set but no memory given");
    Tensor q = (*ln_cross_)(tape, h);
    h = add(h, (*cross_attn_)(tape, q, *memory, *memory, false));
  }
  Tensor f = ln_ffn_(tape, h);
  f = relu(ffn_in_(tape, f));
  return add(h, ffn_out_(tape, f));
}

void TransformerBlock::collect_params(const std::string& prefix,
                                      std::vector<Param*>& out) {
  ln_attn_.collect_params(prefix + ".ln_attn", out);
  self_attn_.collect_params(prefix + ".self_attn", out);
  if (cross_attn_) {
    ln_cross_->collect_params(prefix + ".ln_cross", out);
    cross_attn_->collect_params(prefix + ".cross_attn", out);
  }
  ln_ffn_.collect_params(prefix + ".ln_ffn", out);
  ffn_in_.collect_params(prefix + ".ffn_in", out);
  ffn_out_.collect_params(prefix + ".ffn_out", out);
}

TransformerStack::TransformerStack(const TransformerConfig& config, Rng& rng)
    : config_(config), final_ln_(config.d_model) {
  for (int i = 0; i < config.n_layers; ++i)
    blocks_.push_back(std::make_unique<TransformerBlock>(config, rng));
}

Tensor TransformerStack::operator()(Tape& tape, const Tensor& x,
                                    const Tensor* memory) {
  if (x.shape().size() != 2 || x.cols() != config_.d_model)
    throw ShapeError("transformer: input " + shape_str(x.shape()) +
                     " does not match d_model " +
                     std::to_string(config_.d_model));
  if (config_.cross_attention && !memory)
    throw ContractError("transformer: cross_attention set but no memory given");
  Tensor h = x;
  for (auto& block : blocks_) h = (*block)(tape, h, memory);
  return final_ln_(tape, h);
}

void TransformerStack::collect_params(const std::string& prefix,
                                      std::vector<Param*>& out) {
  for (std::size_t i = 0; i < blocks_.size(); ++i)
    blocks_[i]->collect_params(prefix + ".layer" + std::to_string(i), out);
  final_ln_.collect_params(prefix + ".final_ln", out);
}

}  // namespace webcolor
