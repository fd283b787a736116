#include "webcolor/nn.hpp"

namespace webcolor {

Linear::Linear(int in_dim, int out_dim, Rng& rng)
    : weight("weight", {in_dim, out_dim}), bias("bias", {out_dim}) {
  init_linear(weight, bias, rng);
}

Tensor Linear::operator()(Tape& tape, const Tensor& x) {
  return add_rowwise(matmul(x, tape.param(weight)), tape.param(bias));
}

void Linear::collect_params(const std::string& prefix,
                            std::vector<Param*>& out) {
  weight.name = prefix + ".weight";
  bias.name = prefix + ".bias";
  out.push_back(&weight);
  out.push_back(&bias);
}

Embedding::Embedding(int vocab, int dim, Rng& rng)
    : table("table", {vocab, dim}) {
  init_embedding(table, rng);
}

Tensor Embedding::operator()(Tape& tape, const std::vector<int>& indices) {
  return embedding(tape.param(table), indices);
}

void Embedding::collect_params(const std::string& prefix,
                               std::vector<Param*>& out) {
  table.name = prefix + ".table";
  out.push_back(&table);
}

LayerNorm::LayerNorm(int dim) : gain("gain", {dim}), bias("bias", {dim}) {
  init_layer_norm(gain, bias);
}

Tensor LayerNorm::operator()(Tape& tape, const Tensor& x) {
  return layer_norm(x, tape.param(gain), tape.param(bias));
}

void LayerNorm::collect_params(const std::string& prefix,
                               std::vector<Param*>& out) {
  gain.name = prefix + ".gain";
  bias.name = prefix + ".bias";
  out.push_back(&gain);
  out.push_back(&bias);
}

Mlp::Mlp(int in_dim, int hidden_dim, int out_dim, Rng& rng)
    : first(in_dim, hidden_dim, rng), second(hidden_dim, out_dim, rng) {}

Tensor Mlp::operator()(Tape& tape, const Tensor& x) {
  return second(tape, relu(first(tape, x)));
}

void Mlp::collect_params(const std::string& prefix, std::vector<Param*>& out) {
  first.collect_params(prefix + ".first", out);
  second.collect_params(prefix + ".second", out);
}

}  // namespace webcolor
