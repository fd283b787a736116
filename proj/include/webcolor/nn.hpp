#pragma once

#include <string>
#include <vector>

#include "webcolor/tensor.hpp"

namespace webcolor {

// Base for parameterized modules. Parameters register in construction
// order; that order defines checkpoint layout and RNG draw order.
class Module {
 public:
  virtual ~Module() = default;
  // Appends (prefix + local name, param) pairs in a stable order.
  virtual void collect_params(const std::string& prefix,
                              std::vector<Param*>& out) = 0;
};

class Linear : public Module {
 public:
  Linear(int in_dim, int out_dim, Rng& rng);

  // x: (n, in) -> (n, out)
  Tensor operator()(Tape& tape, const Tensor& x);
  void collect_params(const std::string& prefix,
                      std::vector<Param*>& out) override;

  Param weight;  // (in, out)
  Param bias;    // (out)
};

class Embedding : public Module {
 public:
  Embedding(int vocab, int dim, Rng& rng);

  // indices (0-based) -> (n, dim)
  Tensor operator()(Tape& tape, const std::vector<int>& indices);
  void collect_params(const std::string& prefix,
                      std::vector<Param*>& out) override;

  Param table;  // (vocab, dim)
};

class LayerNorm : public Module {
 public:
  explicit LayerNorm(int dim);

  Tensor operator()(Tape& tape, const Tensor& x);
  void collect_params(const std::string& prefix,
                      std::vector<Param*>& out) override;

  Param gain;
  Param bias;
};

// Two-layer perceptron with ReLU in between (in -> hidden -> out).
class Mlp : public Module {
 public:
  Mlp(int in_dim, int hidden_dim, int out_dim, Rng& rng);

  Tensor operator()(Tape& tape, const Tensor& x);
  void collect_params(const std::string& prefix,
                      std::vector<Param*>& out) override;

  Linear first;
  Linear second;
};

}  // namespace webcolor
