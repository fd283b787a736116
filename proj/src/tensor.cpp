#include "webcolor/tensor.hpp"

#include <algorithm>
#include <cmath>

#include "webcolor/errors.hpp"

namespace webcolor {

std::string shape_str(const Shape& s) {
  std::string out = "(";
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(s[i]);
  }
  return out + ")";
}

int numel(const Shape& s) {
  int n = 1;
  for (int d : s) n *= d;
  return n;
}

namespace {

int rows_of(const Shape& s) { return s.size() == 2 ? s[0] : 1; }
int cols_of(const Shape& s) {
  return s.size() == 2 ? s[1] : (s.empty() ? 1 : s[0]);
}

[[noreturn]] void shape_fail(const std::string& op, const Shape& a) {
  throw ShapeError(op + ": incompatible shape " + shape_str(a));
}
[[noreturn]] void shape_fail(const std::string& op, const Shape& a,
                             const Shape& b) {
  throw ShapeError(op + ": incompatible shapes " + shape_str(a) + " and " +
                   shape_str(b));
}

}  // namespace

Param::Param(std::string n, Shape s)
    : name(std::move(n)),
      shape(std::move(s)),
      value(static_cast<std::size_t>(numel(shape)), 0.0),
      grad(static_cast<std::size_t>(numel(shape)), 0.0) {}

void Param::zero_grad() { std::fill(grad.begin(), grad.end(), 0.0); }

const Shape& Tensor::shape() const { return tape_->node(id_).shape; }
const std::vector<double>& Tensor::values() const {
  return tape_->node(id_).val;
}
int Tensor::rows() const { return rows_of(shape()); }
int Tensor::cols() const { return cols_of(shape()); }
double Tensor::item() const {
  const auto& v = values();
  if (v.size() != 1)
    throw ContractError("Tensor::item: tensor has " +
                        std::to_string(v.size()) + " elements");
  return v[0];
}
Tape& Tensor::tape() const { return *tape_; }

int Tape::add_node(Node n) {
  if (n.requires_grad) n.grad.assign(n.val.size(), 0.0);
  nodes_.push_back(std::move(n));
  return static_cast<int>(nodes_.size()) - 1;
}

Tensor Tape::constant(Shape shape, std::vector<double> values) {
  if (static_cast<int>(values.size()) != numel(shape))
    throw ShapeError("constant: " + std::to_string(values.size()) +
                     " values for shape " + shape_str(shape));
  Node n;
  n.shape = std::move(shape);
  n.val = std::move(values);
  return Tensor(this, add_node(std::move(n)));
}

Tensor Tape::scalar(double v) { return constant({1}, {v}); }

Tensor Tape::leaf(Shape shape, std::vector<double> values) {
  if (static_cast<int>(values.size()) != numel(shape))
    throw ShapeError("leaf: " + std::to_string(values.size()) +
                     " values for shape " + shape_str(shape));
  Node n;
  n.shape = std::move(shape);
  n.val = std::move(values);
  n.requires_grad = true;
  return Tensor(this, add_node(std::move(n)));
}

Tensor Tape::param(Param& p) {
  auto it = param_nodes_.find(&p);
  if (it != param_nodes_.end()) return Tensor(this, it->second);
  Node n;
  n.shape = p.shape;
  n.val = p.value;
  n.requires_grad = true;
  int id = add_node(std::move(n));
  param_nodes_.emplace(&p, id);
  param_leaves_.emplace_back(&p, id);
  return Tensor(this, id);
}

void Tape::backward(const Tensor& loss) {
  if (loss.tape_ != this) throw ContractError("backward: loss from another tape");
  if (backward_done_)
    throw ContractError("backward: called twice without a new forward pass");
  const Node& ln = node(loss.id_);
  if (ln.val.size() != 1)
    throw ContractError("backward: loss is not a scalar (shape " +
                        shape_str(ln.shape) + ")");
  if (!ln.requires_grad)
    throw ContractError("backward: loss does not depend on any differentiable input");
  backward_done_ = true;
  node(loss.id_).grad[0] = 1.0;
  for (int id = loss.id_; id >= 0; --id) {
    Node& n = node(id);
    if (n.requires_grad && n.backward) n.backward(*this, id);
  }
  for (auto& [p, id] : param_leaves_) {
    const auto& g = node(id).grad;
    for (std::size_t i = 0; i < g.size(); ++i) p->grad[i] += g[i];
  }
}

const std::vector<double>& Tape::grad(const Tensor& t) const {
  const Node& n = node(t.id_);
  if (!n.requires_grad)
    throw ContractError("grad: tensor does not require gradients");
  return n.grad;
}

// Internal helper for building op nodes.
struct OpBuilder {
  static Tensor make(Tape& tape, Shape shape, std::vector<double> val,
                     std::initializer_list<Tensor> parents,
                     std::function<void(Tape&, int)> backward) {
    return make(tape, std::move(shape), std::move(val),
                std::vector<Tensor>(parents), std::move(backward));
  }

  static Tensor make(Tape& tape, Shape shape, std::vector<double> val,
                     const std::vector<Tensor>& parents,
                     std::function<void(Tape&, int)> backward) {
    Tape::Node n;
    n.shape = std::move(shape);
    n.val = std::move(val);
    for (const Tensor& p : parents) {
      if (p.tape_ != &tape)
        throw ContractError("op: inputs live on different tapes");
      n.parents.push_back(p.id_);
      n.requires_grad = n.requires_grad || tape.node(p.id_).requires_grad;
    }
    if (n.requires_grad) n.backward = std::move(backward);
    return Tensor(&tape, tape.add_node(std::move(n)));
  }

  static Tape::Node& node(Tape& t, int id) { return t.node(id); }
};

namespace {

Tape::Node& self_node(Tape& t, int id) { return OpBuilder::node(t, id); }
Tape::Node& parent_node(Tape& t, int id, std::size_t k) {
  return OpBuilder::node(t, OpBuilder::node(t, id).parents[k]);
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.shape().size() != 2 || b.shape().size() != 2 ||
      a.shape()[1] != b.shape()[0])
    shape_fail("matmul", a.shape(), b.shape());
  const int r = a.shape()[0], k = a.shape()[1], c = b.shape()[1];
  std::vector<double> out(static_cast<std::size_t>(r) * c, 0.0);
  const auto& av = a.values();
  const auto& bv = b.values();
  for (int i = 0; i < r; ++i)
    for (int p = 0; p < k; ++p) {
      double aip = av[static_cast<std::size_t>(i) * k + p];
      if (aip == 0.0) continue;
      const double* brow = &bv[static_cast<std::size_t>(p) * c];
      double* orow = &out[static_cast<std::size_t>(i) * c];
      for (int j = 0; j < c; ++j) orow[j] += aip * brow[j];
    }
  return OpBuilder::make(
      a.tape(), {r, c}, std::move(out), {a, b}, [r, k, c](Tape& t, int id) {
        auto& self = self_node(t, id);
        auto& pa = parent_node(t, id, 0);
        auto& pb = parent_node(t, id, 1);
        if (pa.requires_grad) {
          // dA = dY @ B^T
          for (int i = 0; i < r; ++i)
            for (int j = 0; j < c; ++j) {
              double g = self.grad[static_cast<std::size_t>(i) * c + j];
              if (g == 0.0) continue;
              const double* brow = &pb.val[0];
              for (int p = 0; p < k; ++p)
                pa.grad[static_cast<std::size_t>(i) * k + p] +=
                    g * brow[static_cast<std::size_t>(p) * c + j];
            }
        }
        if (pb.requires_grad) {
          // dB = A^T @ dY
          for (int i = 0; i < r; ++i)
            for (int p = 0; p < k; ++p) {
              double aip = pa.val[static_cast<std::size_t>(i) * k + p];
              if (aip == 0.0) continue;
              const double* grow = &self.grad[static_cast<std::size_t>(i) * c];
              double* brow = &pb.grad[static_cast<std::size_t>(p) * c];
              for (int j = 0; j < c; ++j) brow[j] += aip * grow[j];
            }
        }
      });
}

Tensor matmul_nt(const Tensor& a, const Tensor& b) {
  if (a.shape().size() != 2 || b.shape().size() != 2 ||
      a.shape()[1] != b.shape()[1])
    shape_fail("matmul_nt", a.shape(), b.shape());
  const int r = a.shape()[0], k = a.shape()[1], c = b.shape()[0];
  std::vector<double> out(static_cast<std::size_t>(r) * c, 0.0);
  const auto& av = a.values();
  const auto& bv = b.values();
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) {
      const double* arow = &av[static_cast<std::size_t>(i) * k];
      const double* brow = &bv[static_cast<std::size_t>(j) * k];
      double s = 0.0;
      for (int p = 0; p < k; ++p) s += arow[p] * brow[p];
      out[static_cast<std::size_t>(i) * c + j] = s;
    }
  return OpBuilder::make(
      a.tape(), {r, c}, std::move(out), {a, b}, [r, k, c](Tape& t, int id) {
        auto& self = self_node(t, id);
        auto& pa = parent_node(t, id, 0);
        auto& pb = parent_node(t, id, 1);
        for (int i = 0; i < r; ++i)
          for (int j = 0; j < c; ++j) {
            double g = self.grad[static_cast<std::size_t>(i) * c + j];
            if (g == 0.0) continue;
            if (pa.requires_grad) {
              double* arow = &pa.grad[static_cast<std::size_t>(i) * k];
              const double* brow = &pb.val[static_cast<std::size_t>(j) * k];
              for (int p = 0; p < k; ++p) arow[p] += g * brow[p];
            }
            if (pb.requires_grad) {
              double* brow = &pb.grad[static_cast<std::size_t>(j) * k];
              const double* arow = &pa.val[static_cast<std::size_t>(i) * k];
              for (int p = 0; p < k; ++p) brow[p] += g * arow[p];
            }
          }
      });
}

namespace {

Tensor elementwise_pair(const char* name, const Tensor& a, const Tensor& b,
                        double sign_b) {
  if (a.shape() != b.shape()) shape_fail(name, a.shape(), b.shape());
  std::vector<double> out(a.values().size());
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = a.values()[i] + sign_b * b.values()[i];
  return OpBuilder::make(a.tape(), a.shape(), std::move(out), {a, b},
                         [sign_b](Tape& t, int id) {
                           auto& self = self_node(t, id);
                           auto& pa = parent_node(t, id, 0);
                           auto& pb = parent_node(t, id, 1);
                           for (std::size_t i = 0; i < self.grad.size(); ++i) {
                             if (pa.requires_grad) pa.grad[i] += self.grad[i];
                             if (pb.requires_grad)
                               pb.grad[i] += sign_b * self.grad[i];
                           }
                         });
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  return elementwise_pair("add", a, b, 1.0);
}

Tensor sub(const Tensor& a, const Tensor& b) {
  return elementwise_pair("sub", a, b, -1.0);
}

Tensor mul(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) shape_fail("mul", a.shape(), b.shape());
  std::vector<double> out(a.values().size());
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = a.values()[i] * b.values()[i];
  return OpBuilder::make(a.tape(), a.shape(), std::move(out), {a, b},
                         [](Tape& t, int id) {
                           auto& self = self_node(t, id);
                           auto& pa = parent_node(t, id, 0);
                           auto& pb = parent_node(t, id, 1);
                           for (std::size_t i = 0; i < self.grad.size(); ++i) {
                             if (pa.requires_grad)
                               pa.grad[i] += self.grad[i] * pb.val[i];
                             if (pb.requires_grad)
                               pb.grad[i] += self.grad[i] * pa.val[i];
                           }
                         });
}

Tensor add_rowwise(const Tensor& a, const Tensor& bias) {
  const int r = a.rows(), c = a.cols();
  if (a.shape().size() != 2 || numel(bias.shape()) != c)
    shape_fail("add_rowwise", a.shape(), bias.shape());
  std::vector<double> out(a.values().size());
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j)
      out[static_cast<std::size_t>(i) * c + j] =
          a.values()[static_cast<std::size_t>(i) * c + j] +
          bias.values()[static_cast<std::size_t>(j)];
  return OpBuilder::make(a.tape(), a.shape(), std::move(out), {a, bias},
                         [r, c](Tape& t, int id) {
                           auto& self = self_node(t, id);
                           auto& pa = parent_node(t, id, 0);
                           auto& pb = parent_node(t, id, 1);
                           for (int i = 0; i < r; ++i)
                             for (int j = 0; j < c; ++j) {
                               double g = self.grad[static_cast<std::size_t>(i) * c + j];
                               if (pa.requires_grad)
                                 pa.grad[static_cast<std::size_t>(i) * c + j] += g;
                               if (pb.requires_grad)
                                 pb.grad[static_cast<std::size_t>(j)] += g;
                             }
                         });
}

Tensor scale(const Tensor& a, double cfac) {
  std::vector<double> out(a.values().size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.values()[i] * cfac;
  return OpBuilder::make(a.tape(), a.shape(), std::move(out), {a},
                         [cfac](Tape& t, int id) {
                           auto& self = self_node(t, id);
                           auto& pa = parent_node(t, id, 0);
                           for (std::size_t i = 0; i < self.grad.size(); ++i)
                             pa.grad[i] += cfac * self.grad[i];
                         });
}

Tensor add_scalar(const Tensor& a, double cadd) {
  std::vector<double> out(a.values().size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.values()[i] + cadd;
  return OpBuilder::make(a.tape(), a.shape(), std::move(out), {a},
                         [](Tape& t, int id) {
                           auto& self = self_node(t, id);
                           auto& pa = parent_node(t, id, 0);
                           for (std::size_t i = 0; i < self.grad.size(); ++i)
                             pa.grad[i] += self.grad[i];
                         });
}

Tensor relu(const Tensor& a) {
  std::vector<double> out(a.values().size());
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = a.values()[i] > 0.0 ? a.values()[i] : 0.0;
  return OpBuilder::make(a.tape(), a.shape(), std::move(out), {a},
                         [](Tape& t, int id) {
                           auto& self = self_node(t, id);
                           auto& pa = parent_node(t, id, 0);
                           for (std::size_t i = 0; i < self.grad.size(); ++i)
                             if (pa.val[i] > 0.0) pa.grad[i] += self.grad[i];
                         });
}

Tensor sigmoid(const Tensor& a) {
  std::vector<double> out(a.values().size());
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = 1.0 / (1.0 + std::exp(-a.values()[i]));
  return OpBuilder::make(a.tape(), a.shape(), std::move(out), {a},
                         [](Tape& t, int id) {
                           auto& self = self_node(t, id);
                           auto& pa = parent_node(t, id, 0);
                           for (std::size_t i = 0; i < self.grad.size(); ++i) {
                             double y = self.val[i];
                             pa.grad[i] += self.grad[i] * y * (1.0 - y);
                           }
                         });
}

Tensor clamp(const Tensor& a, double lo, double hi) {
  if (lo > hi) throw ContractError("clamp: lo > hi");
  std::vector<double> out(a.values().size());
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = std::min(hi, std::max(lo, a.values()[i]));
  return OpBuilder::make(a.tape(), a.shape(), std::move(out), {a},
                         [lo, hi](Tape& t, int id) {
                           auto& self = self_node(t, id);
                           auto& pa = parent_node(t, id, 0);
                           for (std::size_t i = 0; i < self.grad.size(); ++i)
                             if (pa.val[i] > lo && pa.val[i] < hi)
                               pa.grad[i] += self.grad[i];
                         });
}

Tensor concat_rows(std::span<const Tensor> parts) {
  if (parts.empty()) throw ContractError("concat_rows: empty input");
  const int c = parts[0].cols();
  int r = 0;
  for (const Tensor& p : parts) {
    if (p.shape().size() != 2 || p.cols() != c)
      shape_fail("concat_rows", p.shape());
    r += p.rows();
  }
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(r) * c);
  for (const Tensor& p : parts)
    out.insert(out.end(), p.values().begin(), p.values().end());
  std::vector<Tensor> parents(parts.begin(), parts.end());
  return OpBuilder::make(parts[0].tape(), {r, c}, std::move(out), parents,
                         [](Tape& t, int id) {
                           auto& self = self_node(t, id);
                           std::size_t off = 0;
                           for (std::size_t k = 0; k < self.parents.size(); ++k) {
                             auto& p = parent_node(t, id, k);
                             if (p.requires_grad)
                               for (std::size_t i = 0; i < p.val.size(); ++i)
                                 p.grad[i] += self.grad[off + i];
                             off += p.val.size();
                           }
                         });
}

Tensor concat_cols(std::span<const Tensor> parts) {
  if (parts.empty()) throw ContractError("concat_cols: empty input");
  const int r = rows_of(parts[0].shape());
  int c = 0;
  for (const Tensor& p : parts) {
    if (rows_of(p.shape()) != r) shape_fail("concat_cols", p.shape());
    c += cols_of(p.shape());
  }
  std::vector<double> out(static_cast<std::size_t>(r) * c);
  int col0 = 0;
  for (const Tensor& p : parts) {
    const int pc = cols_of(p.shape());
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < pc; ++j)
        out[static_cast<std::size_t>(i) * c + col0 + j] =
            p.values()[static_cast<std::size_t>(i) * pc + j];
    col0 += pc;
  }
  std::vector<Tensor> parents(parts.begin(), parts.end());
  Shape shape = parts[0].shape().size() == 1 ? Shape{c} : Shape{r, c};
  return OpBuilder::make(
      parts[0].tape(), std::move(shape), std::move(out), parents,
      [r, c](Tape& t, int id) {
        auto& self = self_node(t, id);
        int col0 = 0;
        for (std::size_t k = 0; k < self.parents.size(); ++k) {
          auto& p = parent_node(t, id, k);
          const int pc = cols_of(p.shape);
          if (p.requires_grad)
            for (int i = 0; i < r; ++i)
              for (int j = 0; j < pc; ++j)
                p.grad[static_cast<std::size_t>(i) * pc + j] +=
                    self.grad[static_cast<std::size_t>(i) * c + col0 + j];
          col0 += pc;
        }
      });
}

Tensor slice_rows(const Tensor& a, int r0, int r1) {
  if (a.shape().size() != 2) shape_fail("slice_rows", a.shape());
  const int r = a.rows(), c = a.cols();
  if (r0 < 0 || r1 > r || r0 >= r1)
    throw ShapeError("slice_rows: range [" + std::to_string(r0) + "," +
                     std::to_string(r1) + ") of " + std::to_string(r) + " rows");
  std::vector<double> out(a.values().begin() + static_cast<std::size_t>(r0) * c,
                          a.values().begin() + static_cast<std::size_t>(r1) * c);
  return OpBuilder::make(a.tape(), {r1 - r0, c}, std::move(out), {a},
                         [r0, c](Tape& t, int id) {
                           auto& self = self_node(t, id);
                           auto& pa = parent_node(t, id, 0);
                           for (std::size_t i = 0; i < self.grad.size(); ++i)
                             pa.grad[static_cast<std::size_t>(r0) * c + i] +=
                                 self.grad[i];
                         });
}

Tensor slice_cols(const Tensor& a, int c0, int c1) {
  if (a.shape().size() != 2) shape_fail("slice_cols", a.shape());
  const int r = a.rows(), c = a.cols();
  if (c0 < 0 || c1 > c || c0 >= c1)
    throw ShapeError("slice_cols: range [" + std::to_string(c0) + "," +
                     std::to_string(c1) + ") of " + std::to_string(c) +
                     " cols");
  const int w = c1 - c0;
  std::vector<double> out(static_cast<std::size_t>(r) * w);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < w; ++j)
      out[static_cast<std::size_t>(i) * w + j] =
          a.values()[static_cast<std::size_t>(i) * c + c0 + j];
  return OpBuilder::make(a.tape(), {r, w}, std::move(out), {a},
                         [r, c, c0, w](Tape& t, int id) {
                           auto& self = self_node(t, id);
                           auto& pa = parent_node(t, id, 0);
                           for (int i = 0; i < r; ++i)
                             for (int j = 0; j < w; ++j)
                               pa.grad[static_cast<std::size_t>(i) * c + c0 + j] +=
                                   self.grad[static_cast<std::size_t>(i) * w + j];
                         });
}

Tensor embedding(const Tensor& table, const std::vector<int>& indices) {
  if (table.shape().size() != 2) shape_fail("embedding", table.shape());
  const int v = table.rows(), d = table.cols();
  for (int idx : indices)
    if (idx < 0 || idx >= v)
      throw ContractError("embedding: index " + std::to_string(idx) +
                          " outside 0.." + std::to_string(v - 1));
  const int n = static_cast<int>(indices.size());
  std::vector<double> out(static_cast<std::size_t>(n) * d);
  for (int i = 0; i < n; ++i)
    std::copy_n(
        table.values().begin() + static_cast<std::size_t>(indices[static_cast<std::size_t>(i)]) * d,
        d, out.begin() + static_cast<std::size_t>(i) * d);
  return OpBuilder::make(table.tape(), {n, d}, std::move(out), {table},
                         [indices, d](Tape& t, int id) {
                           auto& self = self_node(t, id);
                           auto& pt = parent_node(t, id, 0);
                           for (std::size_t i = 0; i < indices.size(); ++i)
                             for (int j = 0; j < d; ++j)
                               pt.grad[static_cast<std::size_t>(indices[i]) * d + j] +=
                                   self.grad[i * d + j];
                         });
}

Tensor maxpool(std::span<const Tensor> parts) {
  if (parts.empty()) throw ContractError("maxpool: empty input set");
  const Shape shape = parts[0].shape();
  for (const Tensor& p : parts)
    if (p.shape() != shape) shape_fail("maxpool", p.shape(), shape);
  const std::size_t n = parts[0].values().size();
  std::vector<double> out(n);
  std::vector<int> winner(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    double best = parts[0].values()[i];
    int w = 0;
    for (std::size_t k = 1; k < parts.size(); ++k)
      if (parts[k].values()[i] > best) {
        best = parts[k].values()[i];
        w = static_cast<int>(k);
      }
    out[i] = best;
    winner[i] = w;
  }
  std::vector<Tensor> parents(parts.begin(), parts.end());
  return OpBuilder::make(parts[0].tape(), shape, std::move(out), parents,
                         [winner](Tape& t, int id) {
                           auto& self = self_node(t, id);
                           for (std::size_t i = 0; i < winner.size(); ++i) {
                             auto& p = parent_node(
                                 t, id, static_cast<std::size_t>(winner[i]));
                             if (p.requires_grad) p.grad[i] += self.grad[i];
                           }
                         });
}

namespace {

void softmax_row(const double* x, double* y, int c) {
  double mx = x[0];
  for (int j = 1; j < c; ++j) mx = std::max(mx, x[j]);
  double sum = 0.0;
  for (int j = 0; j < c; ++j) {
    y[j] = std::exp(x[j] - mx);
    sum += y[j];
  }
  for (int j = 0; j < c; ++j) y[j] /= sum;
}

}  // namespace

Tensor softmax_rows(const Tensor& a) {
  const int r = a.rows(), c = a.cols();
  std::vector<double> out(a.values().size());
  for (int i = 0; i < r; ++i)
    softmax_row(&a.values()[static_cast<std::size_t>(i) * c],
                &out[static_cast<std::size_t>(i) * c], c);
  return OpBuilder::make(
      a.tape(), a.shape(), std::move(out), {a}, [r, c](Tape& t, int id) {
        auto& self = self_node(t, id);
        auto& pa = parent_node(t, id, 0);
        for (int i = 0; i < r; ++i) {
          const double* s = &self.val[static_cast<std::size_t>(i) * c];
          const double* dy = &self.grad[static_cast<std::size_t>(i) * c];
          double dot = 0.0;
          for (int j = 0; j < c; ++j) dot += s[j] * dy[j];
          double* dx = &pa.grad[static_cast<std::size_t>(i) * c];
          for (int j = 0; j < c; ++j) dx[j] += s[j] * (dy[j] - dot);
        }
      });
}

Tensor log_softmax_rows(const Tensor& a) {
  const int r = a.rows(), c = a.cols();
  std::vector<double> out(a.values().size());
  for (int i = 0; i < r; ++i) {
    const double* x = &a.values()[static_cast<std::size_t>(i) * c];
    double* y = &out[static_cast<std::size_t>(i) * c];
    double mx = x[0];
    for (int j = 1; j < c; ++j) mx = std::max(mx, x[j]);
    double sum = 0.0;
    for (int j = 0; j < c; ++j) sum += std::exp(x[j] - mx);
    double lse = mx + std::log(sum);
    for (int j = 0; j < c; ++j) y[j] = x[j] - lse;
  }
  return OpBuilder::make(
      a.tape(), a.shape(), std::move(out), {a}, [r, c](Tape& t, int id) {
        auto& self = self_node(t, id);
        auto& pa = parent_node(t, id, 0);
        for (int i = 0; i < r; ++i) {
          const double* y = &self.val[static_cast<std::size_t>(i) * c];
          const double* dy = &self.grad[static_cast<std::size_t>(i) * c];
          double gsum = 0.0;
          for (int j = 0; j < c; ++j) gsum += dy[j];
          double* dx = &pa.grad[static_cast<std::size_t>(i) * c];
          for (int j = 0; j < c; ++j) dx[j] += dy[j] - std::exp(y[j]) * gsum;
        }
      });
}

Tensor layer_norm(const Tensor& a, const Tensor& gain, const Tensor& bias) {
  constexpr double kEps = 1e-5;
  const int r = a.rows(), c = a.cols();
  if (a.shape().size() != 2 || numel(gain.shape()) != c ||
      numel(bias.shape()) != c)
    shape_fail("layer_norm", a.shape(), gain.shape());
  std::vector<double> out(a.values().size());
  std::vector<double> xhat(a.values().size());
  std::vector<double> inv_std(static_cast<std::size_t>(r));
  for (int i = 0; i < r; ++i) {
    const double* x = &a.values()[static_cast<std::size_t>(i) * c];
    double mean = 0.0;
    for (int j = 0; j < c; ++j) mean += x[j];
    mean /= c;
    double var = 0.0;
    for (int j = 0; j < c; ++j) var += (x[j] - mean) * (x[j] - mean);
    var /= c;
    double is = 1.0 / std::sqrt(var + kEps);
    inv_std[static_cast<std::size_t>(i)] = is;
    for (int j = 0; j < c; ++j) {
      double xh = (x[j] - mean) * is;
      xhat[static_cast<std::size_t>(i) * c + j] = xh;
      out[static_cast<std::size_t>(i) * c + j] =
          gain.values()[static_cast<std::size_t>(j)] * xh +
          bias.values()[static_cast<std::size_t>(j)];
    }
  }
  return OpBuilder::make(
      a.tape(), a.shape(), std::move(out), {a, gain, bias},
      [r, c, xhat, inv_std](Tape& t, int id) {
        auto& self = self_node(t, id);
        auto& pa = parent_node(t, id, 0);
        auto& pg = parent_node(t, id, 1);
        auto& pb = parent_node(t, id, 2);
        for (int i = 0; i < r; ++i) {
          const double* dy = &self.grad[static_cast<std::size_t>(i) * c];
          const double* xh = &xhat[static_cast<std::size_t>(i) * c];
          if (pg.requires_grad || pb.requires_grad)
            for (int j = 0; j < c; ++j) {
              if (pg.requires_grad)
                pg.grad[static_cast<std::size_t>(j)] += dy[j] * xh[j];
              if (pb.requires_grad) pb.grad[static_cast<std::size_t>(j)] += dy[j];
            }
          if (pa.requires_grad) {
            // dxhat = dy * gain; dx = (dxhat - mean(dxhat)
            //         - xhat * mean(dxhat * xhat)) * inv_std
            double m1 = 0.0, m2 = 0.0;
            for (int j = 0; j < c; ++j) {
              double dxh = dy[j] * pg.val[static_cast<std::size_t>(j)];
              m1 += dxh;
              m2 += dxh * xh[j];
            }
            m1 /= c;
            m2 /= c;
            double is = inv_std[static_cast<std::size_t>(i)];
            double* dx = &pa.grad[static_cast<std::size_t>(i) * c];
            for (int j = 0; j < c; ++j) {
              double dxh = dy[j] * pg.val[static_cast<std::size_t>(j)];
              dx[j] += (dxh - m1 - xh[j] * m2) * is;
            }
          }
        }
      });
}

Tensor sum_all(const Tensor& a) {
  double s = 0.0;
  for (double v : a.values()) s += v;
  return OpBuilder::make(a.tape(), {1}, {s}, {a}, [](Tape& t, int id) {
    auto& self = self_node(t, id);
    auto& pa = parent_node(t, id, 0);
    for (std::size_t i = 0; i < pa.grad.size(); ++i)
      pa.grad[i] += self.grad[0];
  });
}

Tensor mean_all(const Tensor& a) {
  const double inv = 1.0 / static_cast<double>(a.values().size());
  double s = 0.0;
  for (double v : a.values()) s += v;
  return OpBuilder::make(a.tape(), {1}, {s * inv}, {a},
                         [inv](Tape& t, int id) {
                           auto& self = self_node(t, id);
                           auto& pa = parent_node(t, id, 0);
                           for (std::size_t i = 0; i < pa.grad.size(); ++i)
                             pa.grad[i] += self.grad[0] * inv;
                         });
}

Tensor masked_mse(const Tensor& pred, const Tensor& target,
                  const std::vector<double>& mask) {
  if (pred.shape() != target.shape())
    shape_fail("masked_mse", pred.shape(), target.shape());
  if (!mask.empty() && mask.size() != pred.values().size())
    throw ShapeError("masked_mse: mask size " + std::to_string(mask.size()) +
                     " does not match " + std::to_string(pred.values().size()) +
                     " entries");
  double count = 0.0, sum = 0.0;
  for (std::size_t i = 0; i < pred.values().size(); ++i) {
    double m = mask.empty() ? 1.0 : mask[i];
    if (m == 0.0) continue;
    double d = pred.values()[i] - target.values()[i];
    sum += d * d;
    count += 1.0;
  }
  if (count == 0.0) throw ContractError("masked_mse: no contributing entries");
  return OpBuilder::make(
      pred.tape(), {1}, {sum / count}, {pred, target},
      [mask, count](Tape& t, int id) {
        auto& self = self_node(t, id);
        auto& pp = parent_node(t, id, 0);
        auto& pt = parent_node(t, id, 1);
        for (std::size_t i = 0; i < pp.val.size(); ++i) {
          double m = mask.empty() ? 1.0 : mask[i];
          if (m == 0.0) continue;
          double d = 2.0 * (pp.val[i] - pt.val[i]) / count * self.grad[0];
          if (pp.requires_grad) pp.grad[i] += d;
          if (pt.requires_grad) pt.grad[i] -= d;
        }
      });
}

Tensor cross_entropy_rows(const Tensor& logits, const std::vector<int>& targets,
                          const std::vector<double>& mask) {
  const int r = logits.rows(), c = logits.cols();
  if (logits.shape().size() != 2 || static_cast<int>(targets.size()) != r)
    throw ShapeError("cross_entropy_rows: " + std::to_string(targets.size()) +
                     " targets for " + std::to_string(r) + " rows");
  if (!mask.empty() && static_cast<int>(mask.size()) != r)
    throw ShapeError("cross_entropy_rows: mask size mismatch");
  for (int i = 0; i < r; ++i)
    if (targets[static_cast<std::size_t>(i)] < 0 ||
        targets[static_cast<std::size_t>(i)] >= c)
      throw ContractError("cross_entropy_rows: target class out of range");
  double total = 0.0;
  for (int i = 0; i < r; ++i) {
    if (!mask.empty() && mask[static_cast<std::size_t>(i)] == 0.0) continue;
    const double* x = &logits.values()[static_cast<std::size_t>(i) * c];
    double mx = x[0];
    for (int j = 1; j < c; ++j) mx = std::max(mx, x[j]);
    double sum = 0.0;
    for (int j = 0; j < c; ++j) sum += std::exp(x[j] - mx);
    total += mx + std::log(sum) - x[targets[static_cast<std::size_t>(i)]];
  }
  return OpBuilder::make(
      logits.tape(), {1}, {total}, {logits},
      [targets, mask, r, c](Tape& t, int id) {
        auto& self = self_node(t, id);
        auto& pl = parent_node(t, id, 0);
        std::vector<double> s(static_cast<std::size_t>(c));
        for (int i = 0; i < r; ++i) {
          if (!mask.empty() && mask[static_cast<std::size_t>(i)] == 0.0)
            continue;
          softmax_row(&pl.val[static_cast<std::size_t>(i) * c], s.data(), c);
          double* dx = &pl.grad[static_cast<std::size_t>(i) * c];
          for (int j = 0; j < c; ++j) dx[j] += self.grad[0] * s[static_cast<std::size_t>(j)];
          dx[targets[static_cast<std::size_t>(i)]] -= self.grad[0];
        }
      });
}

Tensor gaussian_kl(const Tensor& mu, const Tensor& logvar) {
  if (mu.shape() != logvar.shape())
    shape_fail("gaussian_kl", mu.shape(), logvar.shape());
  double total = 0.0;
  for (std::size_t i = 0; i < mu.values().size(); ++i) {
    double m = mu.values()[i], lv = logvar.values()[i];
    total += m * m + std::exp(lv) - 1.0 - lv;
  }
  return OpBuilder::make(mu.tape(), {1}, {0.5 * total}, {mu, logvar},
                         [](Tape& t, int id) {
                           auto& self = self_node(t, id);
                           auto& pm = parent_node(t, id, 0);
                           auto& pv = parent_node(t, id, 1);
                           for (std::size_t i = 0; i < pm.val.size(); ++i) {
                             if (pm.requires_grad)
                               pm.grad[i] += self.grad[0] * pm.val[i];
                             if (pv.requires_grad)
                               pv.grad[i] += self.grad[0] * 0.5 *
                                             (std::exp(pv.val[i]) - 1.0);
                           }
                         });
}

Tensor reparam_sample(const Tensor& mu, const Tensor& logvar,
                      const std::vector<double>& eps) {
  if (mu.shape() != logvar.shape() || eps.size() != mu.values().size())
    shape_fail("reparam_sample", mu.shape(), logvar.shape());
  std::vector<double> out(mu.values().size());
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = mu.values()[i] + std::exp(0.5 * logvar.values()[i]) * eps[i];
  return OpBuilder::make(mu.tape(), mu.shape(), std::move(out), {mu, logvar},
                         [eps](Tape& t, int id) {
                           auto& self = self_node(t, id);
                           auto& pm = parent_node(t, id, 0);
                           auto& pv = parent_node(t, id, 1);
                           for (std::size_t i = 0; i < self.grad.size(); ++i) {
                             if (pm.requires_grad) pm.grad[i] += self.grad[i];
                             if (pv.requires_grad)
                               pv.grad[i] += self.grad[i] * 0.5 *
                                             std::exp(0.5 * pv.val[i]) * eps[i];
                           }
                         });
}

Tensor broadcast_rows(const Tensor& row, int n) {
  const int d = numel(row.shape());
  if (row.shape().size() == 2 && row.rows() != 1)
    shape_fail("broadcast_rows", row.shape());
  if (n < 1) throw ShapeError("broadcast_rows: n must be >= 1");
  std::vector<double> out(static_cast<std::size_t>(n) * d);
  for (int i = 0; i < n; ++i)
    std::copy_n(row.values().begin(), d,
                out.begin() + static_cast<std::size_t>(i) * d);
  return OpBuilder::make(row.tape(), {n, d}, std::move(out), {row},
                         [n, d](Tape& t, int id) {
                           auto& self = self_node(t, id);
                           auto& pr = parent_node(t, id, 0);
                           for (int i = 0; i < n; ++i)
                             for (int j = 0; j < d; ++j)
                               pr.grad[static_cast<std::size_t>(j)] +=
                                   self.grad[static_cast<std::size_t>(i) * d + j];
                         });
}

Tensor where_rows(const std::vector<char>& mask, const Tensor& a,
                  const Tensor& b) {
  if (a.shape() != b.shape() || a.shape().size() != 2 ||
      static_cast<int>(mask.size()) != a.rows())
    shape_fail("where_rows", a.shape(), b.shape());
  const int r = a.rows(), c = a.cols();
  std::vector<double> out(a.values().size());
  for (int i = 0; i < r; ++i) {
    const auto& src = mask[static_cast<std::size_t>(i)] ? a.values() : b.values();
    std::copy_n(src.begin() + static_cast<std::size_t>(i) * c, c,
                out.begin() + static_cast<std::size_t>(i) * c);
  }
  return OpBuilder::make(a.tape(), a.shape(), std::move(out), {a, b},
                         [mask, r, c](Tape& t, int id) {
                           auto& self = self_node(t, id);
                           auto& pa = parent_node(t, id, 0);
                           auto& pb = parent_node(t, id, 1);
                           for (int i = 0; i < r; ++i) {
                             auto& p = mask[static_cast<std::size_t>(i)] ? pa : pb;
                             if (!p.requires_grad) continue;
                             for (int j = 0; j < c; ++j)
                               p.grad[static_cast<std::size_t>(i) * c + j] +=
                                   self.grad[static_cast<std::size_t>(i) * c + j];
                           }
                         });
}

Tensor detach(const Tensor& a) {
  return a.tape().constant(a.shape(), a.values());
}

void AdamW::step(std::span<Param* const> params) {
  ++step_;
  const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(step_));
  const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(step_));
  for (Param* p : params) {
    auto& mo = moments_[p];
    if (mo.m.empty()) {
      mo.m.assign(p->value.size(), 0.0);
      mo.v.assign(p->value.size(), 0.0);
    }
    if (mo.m.size() != p->value.size())
      throw ShapeError("AdamW: moment size mismatch for " + p->name);
    for (std::size_t i = 0; i < p->value.size(); ++i) {
      double g = p->grad[i];
      mo.m[i] = beta1_ * mo.m[i] + (1.0 - beta1_) * g;
      mo.v[i] = beta2_ * mo.v[i] + (1.0 - beta2_) * g * g;
      double m_hat = mo.m[i] / bc1;
      double v_hat = mo.v[i] / bc2;
      p->value[i] -=
          lr_ * (m_hat / (std::sqrt(v_hat) + eps_) + wd_ * p->value[i]);
    }
    p->zero_grad();
  }
}

void init_linear(Param& weight, Param& bias, Rng& rng) {
  const int fan_in = weight.shape.at(0);
  const double bound = std::sqrt(1.0 / fan_in);
  for (double& v : weight.value) v = rng.uniform(-bound, bound);
  // Biases share the weight distribution. Zero-init biases would make the
  // dense maps of absent feature groups collide at exactly 0 inside the
  // content max-pool, a tie that breaks gradient checking.
  for (double& v : bias.value) v = rng.uniform(-bound, bound);
}

void init_embedding(Param& table, Rng& rng) {
  for (double& v : table.value) v = rng.normal(0.0, 0.02);
}

void init_layer_norm(Param& gain, Param& bias) {
  std::fill(gain.value.begin(), gain.value.end(), 1.0);
  std::fill(bias.value.begin(), bias.value.end(), 0.0);
}

}  // namespace webcolor
