#pragma once

#include <memory>
#include <optional>
#include <vector>

#include "webcolor/nn.hpp"

namespace webcolor {

struct TransformerConfig {
  int d_model = 256;
  int n_heads = 8;
  int n_layers = 4;
  int d_ffn = 512;
  double dropout = 0.0;  // kept for completeness; always 0 at desk scale
  bool causal = false;
  bool cross_attention = false;
};

// Deterministic sinusoidal table: row p, column 2i = sin(p / 10000^(2i/d)),
// column 2i+1 = cos(same). Prefix-stable in n.
std::vector<double> positional_encoding(int n, int d);
Tensor positional_encoding_tensor(Tape& tape, int n, int d);

class MultiHeadAttention : public Module {
 public:
  MultiHeadAttention(int d_model, int n_heads, Rng& rng);

  // Self- or cross-attention; when causal, query i attends keys <= i.
  Tensor operator()(Tape& tape, const Tensor& queries, const Tensor& keys,
                    const Tensor& values, bool causal);
  void collect_params(const std::string& prefix,
                      std::vector<Param*>& out) override;

 private:
  int n_heads_;
  int head_dim_;
  Linear wq_, wk_, wv_, wo_;
};

// One pre-LN block: x += attn(LN(x)); [x += cross(LN(x), memory);]
// x += ffn(LN(x)).
class TransformerBlock : public Module {
 public:
  TransformerBlock(const TransformerConfig& config, Rng& rng);

  Tensor operator()(Tape& tape, const Tensor& x,
                    const Tensor* memory = nullptr);
  void collect_params(const std::string& prefix,
                      std::vector<Param*>& out) override;

 private:
  TransformerConfig config_;
  LayerNorm ln_attn_;
  MultiHeadAttention self_attn_;
  std::optional<LayerNorm> ln_cross_;
  std::optional<MultiHeadAttention> cross_attn_;
  LayerNorm ln_ffn_;
  Linear ffn_in_, ffn_out_;
};

// Pre-LN residual stack with a final layer norm. Doubles as encoder
// (causal=false, no memory) and decoder (causal=true, cross_attention=true).
class TransformerStack : public Module {
 public:
  TransformerStack(const TransformerConfig& config, Rng& rng);

  // x: (n, d_model). Memory required iff config.cross_attention.
  Tensor operator()(Tape& tape, const Tensor& x,
                    const Tensor* memory = nullptr);
  void collect_params(const std::string& prefix,
                      std::vector<Param*>& out) override;
  const TransformerConfig& config() const { return config_; }

 private:
  TransformerConfig config_;
  std::vector<std::unique_ptr<TransformerBlock>> blocks_;
  LayerNorm final_ln_;
};

}  // namespace webcolor
