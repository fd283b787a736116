#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "webcolor/rng.hpp"

namespace webcolor {

// Dims of a dense row-major array. Rank 1 (vectors) and rank 2 (matrices)
// cover everything the models need; scalars are rank-1 tensors of length 1.
using Shape = std::vector<int>;

std::string shape_str(const Shape& s);
int numel(const Shape& s);

// A named trainable array. Gradients accumulate here across a backward
// pass; the optimizer consumes and clears them.
struct Param {
  std::string name;
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;

  Param() = default;
  Param(std::string n, Shape s);
  void zero_grad();
};

class Tape;

// Handle to a node on a Tape. Cheap to copy; valid as long as the tape is.
class Tensor {
 public:
  Tensor() = default;

  bool defined() const { return tape_ != nullptr; }
  const Shape& shape() const;
  const std::vector<double>& values() const;
  int rows() const;
  int cols() const;
  // Value of a single-element tensor.
  double item() const;
  Tape& tape() const;

 private:
  friend class Tape;
  friend struct OpBuilder;
  Tensor(Tape* tape, int id) : tape_(tape), id_(id) {}
  Tape* tape_ = nullptr;
  int id_ = -1;
};

// Wengert-list reverse-mode tape. Nodes are created in topological order,
// so backward() is a single reverse sweep. Single-threaded by contract.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // Non-differentiable input.
  Tensor constant(Shape shape, std::vector<double> values);
  Tensor scalar(double v);
  // Differentiable input that is not a Param (used by tests).
  Tensor leaf(Shape shape, std::vector<double> values);
  // Differentiable view of a Param. Calling twice with the same Param on
  // one tape returns the same node so gradients accumulate naturally.
  Tensor param(Param& p);

  // Reverse sweep from a scalar loss. Fills node gradients and adds each
  // Param leaf's gradient into Param::grad. A second call without a new
  // forward pass is an error.
  void backward(const Tensor& loss);

  const std::vector<double>& grad(const Tensor& t) const;
  std::size_t node_count() const { return nodes_.size(); }

  struct Node {
    Shape shape;
    std::vector<double> val;
    std::vector<double> grad;
    bool requires_grad = false;
    std::vector<int> parents;
    // Pulls this node's grad into its parents' grads.
    std::function<void(Tape&, int)> backward;
  };

 private:
  friend class Tensor;
  friend struct OpBuilder;

  Node& node(int id) { return nodes_[static_cast<std::size_t>(id)]; }
  const Node& node(int id) const {
    return nodes_[static_cast<std::size_t>(id)];
  }
  int add_node(Node n);

  std::vector<Node> nodes_;
  std::unordered_map<const Param*, int> param_nodes_;
  std::vector<std::pair<Param*, int>> param_leaves_;
  bool backward_done_ = false;
};

// ---- forward ops ----
// Every op registers a backward rule when any input requires grad and
// throws ShapeError on incompatible shapes.

Tensor matmul(const Tensor& a, const Tensor& b);      // (r,k) @ (k,c)
Tensor matmul_nt(const Tensor& a, const Tensor& b);   // (r,k) @ (c,k)^T
Tensor add(const Tensor& a, const Tensor& b);         // same shape
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);         // elementwise
Tensor add_rowwise(const Tensor& a, const Tensor& bias);  // (n,d) + (d)
Tensor scale(const Tensor& a, double c);
Tensor add_scalar(const Tensor& a, double c);
Tensor relu(const Tensor& a);
Tensor sigmoid(const Tensor& a);
Tensor clamp(const Tensor& a, double lo, double hi);
Tensor concat_rows(std::span<const Tensor> parts);
Tensor concat_cols(std::span<const Tensor> parts);
Tensor slice_rows(const Tensor& a, int r0, int r1);
Tensor slice_cols(const Tensor& a, int c0, int c1);
// Rows of a (vocab,d) table selected by 0-based indices -> (n,d).
Tensor embedding(const Tensor& table, const std::vector<int>& indices);
// Elementwise max over >= 1 same-shape tensors; gradient goes to the
// first argmax.
Tensor maxpool(std::span<const Tensor> parts);
Tensor softmax_rows(const Tensor& a);
Tensor log_softmax_rows(const Tensor& a);
// Row-wise y = gain * (x - mean) / sqrt(var + 1e-5) + bias.
Tensor layer_norm(const Tensor& a, const Tensor& gain, const Tensor& bias);
Tensor sum_all(const Tensor& a);
Tensor mean_all(const Tensor& a);
// Mean of (pred - target)^2 over entries with mask != 0. mask entries are
// 0 or 1; pass an empty mask to use every entry.
Tensor masked_mse(const Tensor& pred, const Tensor& target,
                  const std::vector<double>& mask = {});
// Sum over rows with mask != 0 of -log softmax(logits_row)[target_row].
// Pass an empty mask to include every row.
Tensor cross_entropy_rows(const Tensor& logits, const std::vector<int>& targets,
                          const std::vector<double>& mask = {});
// 0.5 * sum(mu^2 + exp(logvar) - 1 - logvar): KL(N(mu, diag exp(logvar)) ||
// N(0, I)).
Tensor gaussian_kl(const Tensor& mu, const Tensor& logvar);
// z = mu + exp(logvar / 2) * eps with eps fixed (the reparametrization
// trick: gradients flow to mu and logvar, not eps).
Tensor reparam_sample(const Tensor& mu, const Tensor& logvar,
                      const std::vector<double>& eps);
// (1,d) or (d) row replicated n times -> (n,d).
Tensor broadcast_rows(const Tensor& row, int n);
// Per-row select: rows of a where mask[r] != 0, rows of b otherwise.
Tensor where_rows(const std::vector<char>& mask, const Tensor& a,
                  const Tensor& b);
// Non-differentiable copy.
Tensor detach(const Tensor& a);

// ---- optimizer ----

// AdamW with decoupled weight decay:
//   theta <- theta - lr * (m_hat / (sqrt(v_hat) + eps) + wd * theta).
class AdamW {
 public:
  explicit AdamW(double lr = 1e-4, double beta1 = 0.9, double beta2 = 0.999,
                 double eps = 1e-8, double weight_decay = 0.01)
      : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps), wd_(weight_decay) {}

  // Applies one update from each param's accumulated grad, then clears it.
  void step(std::span<Param* const> params);
  long step_count() const { return step_; }

 private:
  struct Moments {
    std::vector<double> m, v;
  };
  double lr_, beta1_, beta2_, eps_, wd_;
  long step_ = 0;
  std::unordered_map<Param*, Moments> moments_;
};

// Initialization used across the models: linear weights and biases
// uniform in +-sqrt(1/fan_in), embeddings Normal(0, 0.02), layer-norm
// gain 1 and bias 0.
void init_linear(Param& weight, Param& bias, Rng& rng);
void init_embedding(Param& table, Rng& rng);
void init_layer_norm(Param& gain, Param& bias);

}  // namespace webcolor
