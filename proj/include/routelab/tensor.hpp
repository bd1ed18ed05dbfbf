#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <sstream>
#include <unordered_set>
#include <vector>

#include "routelab/common.hpp"

namespace routelab::ad {

// ---------------------------------------------------------------------------
// Dense double-precision tensors on a reverse-mode tape. Each op records a
// backward closure only when some input lies on a gradient path, so
// inference-only forwards carry no tape. backward() accumulates into leaf
// grads additively across calls; interior grads are scratch per call.
// A tape is confined to one thread; independent tapes may run concurrently.
// ---------------------------------------------------------------------------

using Shape = std::vector<int>;

inline std::size_t numel(const Shape& shape) {
  std::size_t n = 1;
  for (int d : shape) n *= static_cast<std::size_t>(d);
  return n;
}

inline std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '(';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ',';
    os << shape[i];
  }
  os << ')';
  return os.str();
}

struct Node {
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;  // empty until needed
  bool is_leaf = false;
  bool requires_grad = false;  // leaves only
  bool needs_grad = false;     // on some gradient path
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward_fn;

  void ensure_grad() {
    if (grad.size() != value.size()) grad.assign(value.size(), 0.0);
  }
};

class Tensor {
 public:
  Tensor() = default;

  static Tensor leaf(Shape shape, std::vector<double> data, bool requires_grad) {
    if (numel(shape) != data.size()) {
      throw ShapeError("tensor: shape " + shape_str(shape) + " does not match " +
                       std::to_string(data.size()) + " values");
    }
    auto node = std::make_shared<Node>();
    node->shape = std::move(shape);
    node->value = std::move(data);
    node->is_leaf = true;
    node->requires_grad = requires_grad;
    node->needs_grad = requires_grad;
    return Tensor(std::move(node));
  }

  static Tensor constant(Shape shape, std::vector<double> data) {
    return leaf(std::move(shape), std::move(data), false);
  }

  static Tensor zeros(Shape shape, bool requires_grad = false) {
    std::vector<double> data(numel(shape), 0.0);
    return leaf(std::move(shape), std::move(data), requires_grad);
  }

  static Tensor scalar(double v) { return constant({1}, {v}); }

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  const std::vector<double>& value() const { return node_->value; }
  std::vector<double>& value_mut() { return node_->value; }
  bool requires_grad() const { return node_->requires_grad; }
  bool needs_grad() const { return node_->needs_grad; }

  const std::vector<double>& grad() const {
    node_->ensure_grad();
    return node_->grad;
  }
  std::vector<double>& grad_mut() {
    node_->ensure_grad();
    return node_->grad;
  }
  bool has_grad() const { return node_->grad.size() == node_->value.size(); }
  void zero_grad() { node_->grad.assign(node_->value.size(), 0.0); }

  double item() const {
    if (node_->value.size() != 1) {
      throw InvalidArgumentError("tensor: item() on non-scalar of shape " + shape_str(node_->shape));
    }
    return node_->value[0];
  }

  std::shared_ptr<Node> node() const { return node_; }

  explicit Tensor(std::shared_ptr<Node> node) : node_(std::move(node)) {}

 private:
  std::shared_ptr<Node> node_;
};

namespace detail {

inline Tensor make_op(Shape shape, std::vector<double> value,
                      std::vector<std::shared_ptr<Node>> parents,
                      std::function<void(Node&)> backward_fn) {
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->value = std::move(value);
  bool needs = false;
  for (const auto& p : parents) needs |= p->needs_grad;
  node->needs_grad = needs;
  if (needs) {
    node->parents = std::move(parents);
    node->backward_fn = std::move(backward_fn);
  }
  return Tensor(std::move(node));
}

[[noreturn]] inline void shape_mismatch(const char* op, const Shape& a, const Shape& b) {
  throw ShapeError(std::string(op) + ": incompatible shapes " + shape_str(a) + " and " + shape_str(b));
}

}  // namespace detail

// matmul supports (m,k)x(k,n)->(m,n), (k)x(k,n)->(n) and (m,k)x(k)->(m).
inline Tensor matmul(const Tensor& a, const Tensor& b) {
  const Shape& sa = a.shape();
  const Shape& sb = b.shape();
  int m = 0, k = 0, n = 0;
  bool a_vec = false, b_vec = false;
  if (sa.size() == 2 && sb.size() == 2) {
    m = sa[0];
    k = sa[1];
    n = sb[1];
    if (sb[0] != k) detail::shape_mismatch("matmul", sa, sb);
  } else if (sa.size() == 1 && sb.size() == 2) {
    a_vec = true;
    m = 1;
    k = sa[0];
    n = sb[1];
    if (sb[0] != k) detail::shape_mismatch("matmul", sa, sb);
  } else if (sa.size() == 2 && sb.size() == 1) {
    b_vec = true;
    m = sa[0];
    k = sa[1];
    n = 1;
    if (sb[0] != k) detail::shape_mismatch("matmul", sa, sb);
  } else {
    detail::shape_mismatch("matmul", sa, sb);
  }

  const auto& av = a.value();
  const auto& bv = b.value();
  std::vector<double> out(static_cast<std::size_t>(m) * n, 0.0);
  for (int i = 0; i < m; ++i) {
    for (int p = 0; p < k; ++p) {
      const double aip = av[static_cast<std::size_t>(i) * k + p];
      if (aip == 0.0) continue;
      const double* brow = &bv[static_cast<std::size_t>(p) * n];
      double* orow = &out[static_cast<std::size_t>(i) * n];
      for (int j = 0; j < n; ++j) orow[j] += aip * brow[j];
    }
  }

  Shape out_shape;
  if (a_vec) {
    out_shape = {n};
  } else if (b_vec) {
    out_shape = {m};
  } else {
    out_shape = {m, n};
  }

  auto an = a.node();
  auto bn = b.node();
  return detail::make_op(
      std::move(out_shape), std::move(out), {an, bn}, [an, bn, m, k, n](Node& self) {
        const auto& g = self.grad;
        if (an->needs_grad) {
          an->ensure_grad();
          for (int i = 0; i < m; ++i) {
            for (int p = 0; p < k; ++p) {
              double acc = 0.0;
              const double* brow = &bn->value[static_cast<std::size_t>(p) * n];
              const double* grow = &g[static_cast<std::size_t>(i) * n];
              for (int j = 0; j < n; ++j) acc += grow[j] * brow[j];
              an->grad[static_cast<std::size_t>(i) * k + p] += acc;
            }
          }
        }
        if (bn->needs_grad) {
          bn->ensure_grad();
          for (int p = 0; p < k; ++p) {
            for (int i = 0; i < m; ++i) {
              const double aip = an->value[static_cast<std::size_t>(i) * k + p];
              if (aip == 0.0) continue;
              const double* grow = &g[static_cast<std::size_t>(i) * n];
              double* brow = &bn->grad[static_cast<std::size_t>(p) * n];
              for (int j = 0; j < n; ++j) brow[j] += aip * grow[j];
            }
          }
        }
      });
}

// Elementwise sum; b's shape must equal a's or be a trailing suffix of it
// (broadcast over the leading axes).
inline Tensor add(const Tensor& a, const Tensor& b) {
  const Shape& sa = a.shape();
  const Shape& sb = b.shape();
  if (sb.size() > sa.size()) detail::shape_mismatch("add", sa, sb);
  for (std::size_t i = 0; i < sb.size(); ++i) {
    if (sb[sb.size() - 1 - i] != sa[sa.size() - 1 - i]) detail::shape_mismatch("add", sa, sb);
  }
  const std::size_t bn_elems = numel(sb);
  const std::size_t total = numel(sa);
  std::vector<double> out(total);
  const auto& av = a.value();
  const auto& bv = b.value();
  for (std::size_t i = 0; i < total; ++i) out[i] = av[i] + bv[i % bn_elems];

  auto an = a.node();
  auto bn = b.node();
  return detail::make_op(sa, std::move(out), {an, bn}, [an, bn, bn_elems, total](Node& self) {
    if (an->needs_grad) {
      an->ensure_grad();
      for (std::size_t i = 0; i < total; ++i) an->grad[i] += self.grad[i];
    }
    if (bn->needs_grad) {
      bn->ensure_grad();
      for (std::size_t i = 0; i < total; ++i) bn->grad[i % bn_elems] += self.grad[i];
    }
  });
}

// Concatenation along the last axis; inputs must agree on all other dims.
inline Tensor concat(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw InvalidArgumentError("concat: no inputs");
  const Shape& s0 = parts[0].shape();
  Shape lead(s0.begin(), s0.end() - 1);
  std::size_t outer = 1;
  for (int d : lead) outer *= static_cast<std::size_t>(d);
  int last_total = 0;
  std::vector<int> widths;
  for (const Tensor& t : parts) {
    const Shape& s = t.shape();
    if (s.size() != s0.size() || !std::equal(lead.begin(), lead.end(), s.begin())) {
      detail::shape_mismatch("concat", s0, s);
    }
    widths.push_back(s.back());
    last_total += s.back();
  }
  Shape out_shape = lead;
  out_shape.push_back(last_total);
  std::vector<double> out(outer * static_cast<std::size_t>(last_total));
  std::vector<std::shared_ptr<Node>> parents;
  parents.reserve(parts.size());
  int offset = 0;
  for (std::size_t p = 0; p < parts.size(); ++p) {
    const auto& v = parts[p].value();
    const int w = widths[p];
    for (std::size_t o = 0; o < outer; ++o) {
      for (int j = 0; j < w; ++j) {
        out[o * static_cast<std::size_t>(last_total) + static_cast<std::size_t>(offset + j)] =
            v[o * static_cast<std::size_t>(w) + static_cast<std::size_t>(j)];
      }
    }
    offset += w;
    parents.push_back(parts[p].node());
  }
  return detail::make_op(std::move(out_shape), std::move(out), std::move(parents),
                         [widths, outer, last_total](Node& self) {
                           int off = 0;
                           for (std::size_t p = 0; p < self.parents.size(); ++p) {
                             auto& parent = *self.parents[p];
                             const int w = widths[p];
                             if (parent.needs_grad) {
                               parent.ensure_grad();
                               for (std::size_t o = 0; o < outer; ++o) {
                                 for (int j = 0; j < w; ++j) {
                                   parent.grad[o * static_cast<std::size_t>(w) + static_cast<std::size_t>(j)] +=
                                       self.grad[o * static_cast<std::size_t>(last_total) +
                                                 static_cast<std::size_t>(off + j)];
                                 }
                               }
                             }
                             off += w;
                           }
                         });
}

// Mean over one axis (the axis is removed from the shape).
inline Tensor mean(const Tensor& a, int axis) {
  const Shape& s = a.shape();
  if (axis < 0 || axis >= static_cast<int>(s.size())) {
    throw ShapeError("mean: axis " + std::to_string(axis) + " out of range for " + shape_str(s));
  }
  std::size_t outer = 1, inner = 1;
  for (int i = 0; i < axis; ++i) outer *= static_cast<std::size_t>(s[static_cast<std::size_t>(i)]);
  for (std::size_t i = static_cast<std::size_t>(axis) + 1; i < s.size(); ++i) inner *= static_cast<std::size_t>(s[i]);
  const std::size_t k = static_cast<std::size_t>(s[static_cast<std::size_t>(axis)]);
  if (k == 0) throw ShapeError("mean: empty axis in " + shape_str(s));

  Shape out_shape;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (static_cast<int>(i) != axis) out_shape.push_back(s[i]);
  }
  std::vector<double> out(outer * inner, 0.0);
  const auto& av = a.value();
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t j = 0; j < k; ++j) {
      for (std::size_t i = 0; i < inner; ++i) {
        out[o * inner + i] += av[(o * k + j) * inner + i];
      }
    }
  }
  const double inv = 1.0 / static_cast<double>(k);
  for (double& v : out) v *= inv;

  auto an = a.node();
  return detail::make_op(std::move(out_shape), std::move(out), {an},
                         [an, outer, inner, k, inv](Node& self) {
                           if (!an->needs_grad) return;
                           an->ensure_grad();
                           for (std::size_t o = 0; o < outer; ++o) {
                             for (std::size_t j = 0; j < k; ++j) {
                               for (std::size_t i = 0; i < inner; ++i) {
                                 an->grad[(o * k + j) * inner + i] += self.grad[o * inner + i] * inv;
                               }
                             }
                           }
                         });
}

// Softmax over the last axis. Entries filled with the mask value (the most
// negative finite double) underflow to probability exactly zero.
inline Tensor softmax(const Tensor& a) {
  const Shape& s = a.shape();
  if (s.empty()) throw ShapeError("softmax: scalar input");
  const std::size_t k = static_cast<std::size_t>(s.back());
  const std::size_t rows = numel(s) / k;
  std::vector<double> out(numel(s));
  const auto& av = a.value();
  for (std::size_t r = 0; r < rows; ++r) {
    const double* x = &av[r * k];
    double mx = x[0];
    for (std::size_t j = 1; j < k; ++j) mx = std::max(mx, x[j]);
    double sum = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      const double e = std::exp(x[j] - mx);
      out[r * k + j] = e;
      sum += e;
    }
    const double inv = 1.0 / sum;
    for (std::size_t j = 0; j < k; ++j) out[r * k + j] *= inv;
  }

  auto an = a.node();
  return detail::make_op(s, std::move(out), {an}, [an, rows, k](Node& self) {
    if (!an->needs_grad) return;
    an->ensure_grad();
    for (std::size_t r = 0; r < rows; ++r) {
      const double* y = &self.value[r * k];
      const double* gy = &self.grad[r * k];
      double dot = 0.0;
      for (std::size_t j = 0; j < k; ++j) dot += gy[j] * y[j];
      for (std::size_t j = 0; j < k; ++j) an->grad[r * k + j] += y[j] * (gy[j] - dot);
    }
  });
}

inline Tensor tanh(const Tensor& a) {
  std::vector<double> out(a.value().size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::tanh(a.value()[i]);
  auto an = a.node();
  return detail::make_op(a.shape(), std::move(out), {an}, [an](Node& self) {
    if (!an->needs_grad) return;
    an->ensure_grad();
    for (std::size_t i = 0; i < self.value.size(); ++i) {
      an->grad[i] += self.grad[i] * (1.0 - self.value[i] * self.value[i]);
    }
  });
}

inline Tensor relu(const Tensor& a) {
  std::vector<double> out(a.value().size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.value()[i] > 0.0 ? a.value()[i] : 0.0;
  auto an = a.node();
  return detail::make_op(a.shape(), std::move(out), {an}, [an](Node& self) {
    if (!an->needs_grad) return;
    an->ensure_grad();
    for (std::size_t i = 0; i < self.value.size(); ++i) {
      if (an->value[i] > 0.0) an->grad[i] += self.grad[i];
    }
  });
}

inline Tensor scale(const Tensor& a, double factor) {
  std::vector<double> out(a.value().size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.value()[i] * factor;
  auto an = a.node();
  return detail::make_op(a.shape(), std::move(out), {an}, [an, factor](Node& self) {
    if (!an->needs_grad) return;
    an->ensure_grad();
    for (std::size_t i = 0; i < self.value.size(); ++i) an->grad[i] += self.grad[i] * factor;
  });
}

inline Tensor mul(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) detail::shape_mismatch("mul", a.shape(), b.shape());
  std::vector<double> out(a.value().size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.value()[i] * b.value()[i];
  auto an = a.node();
  auto bn = b.node();
  return detail::make_op(a.shape(), std::move(out), {an, bn}, [an, bn](Node& self) {
    if (an->needs_grad) {
      an->ensure_grad();
      for (std::size_t i = 0; i < self.value.size(); ++i) an->grad[i] += self.grad[i] * bn->value[i];
    }
    if (bn->needs_grad) {
      bn->ensure_grad();
      for (std::size_t i = 0; i < self.value.size(); ++i) bn->grad[i] += self.grad[i] * an->value[i];
    }
  });
}

// Writes `value` at positions where mask != 0. -inf is stored as the most
// negative finite double so softmax stays NaN-free while masked
// probabilities are still exactly zero. No gradient flows to masked inputs.
inline Tensor masked_fill(const Tensor& a, const std::vector<std::uint8_t>& mask, double value) {
  if (mask.size() != a.value().size()) {
    throw ShapeError("masked_fill: mask of size " + std::to_string(mask.size()) +
                     " for tensor " + shape_str(a.shape()));
  }
  const double fill = std::max(value, std::numeric_limits<double>::lowest());
  std::vector<double> out(a.value().size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = mask[i] ? fill : a.value()[i];
  auto an = a.node();
  auto mask_copy = mask;
  return detail::make_op(a.shape(), std::move(out), {an}, [an, mask_copy](Node& self) {
    if (!an->needs_grad) return;
    an->ensure_grad();
    for (std::size_t i = 0; i < self.value.size(); ++i) {
      if (!mask_copy[i]) an->grad[i] += self.grad[i];
    }
  });
}

inline Tensor transpose(const Tensor& a) {
  const Shape& s = a.shape();
  if (s.size() != 2) throw ShapeError("transpose: expected a matrix, got " + shape_str(s));
  const int m = s[0];
  const int n = s[1];
  std::vector<double> out(a.value().size());
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) {
      out[static_cast<std::size_t>(j) * m + i] = a.value()[static_cast<std::size_t>(i) * n + j];
    }
  }
  auto an = a.node();
  return detail::make_op({n, m}, std::move(out), {an}, [an, m, n](Node& self) {
    if (!an->needs_grad) return;
    an->ensure_grad();
    for (int i = 0; i < m; ++i) {
      for (int j = 0; j < n; ++j) {
        an->grad[static_cast<std::size_t>(i) * n + j] += self.grad[static_cast<std::size_t>(j) * m + i];
      }
    }
  });
}

// Rows [begin, end) of a matrix.
inline Tensor slice_rows(const Tensor& a, int begin, int end) {
  const Shape& s = a.shape();
  if (s.size() != 2) throw ShapeError("slice_rows: expected a matrix, got " + shape_str(s));
  if (begin < 0 || end > s[0] || begin > end) {
    throw ShapeError("slice_rows: range [" + std::to_string(begin) + ", " + std::to_string(end) +
                     ") out of bounds for " + shape_str(s));
  }
  const int cols = s[1];
  std::vector<double> out(a.value().begin() + static_cast<std::ptrdiff_t>(begin) * cols,
                          a.value().begin() + static_cast<std::ptrdiff_t>(end) * cols);
  auto an = a.node();
  return detail::make_op({end - begin, cols}, std::move(out), {an}, [an, begin, cols](Node& self) {
    if (!an->needs_grad) return;
    an->ensure_grad();
    for (std::size_t i = 0; i < self.value.size(); ++i) {
      an->grad[static_cast<std::size_t>(begin) * cols + i] += self.grad[i];
    }
  });
}

// One row of a matrix as a vector.
inline Tensor row(const Tensor& a, int i) {
  const Shape& s = a.shape();
  if (s.size() != 2) throw ShapeError("row: expected a matrix, got " + shape_str(s));
  if (i < 0 || i >= s[0]) {
    throw ShapeError("row: index " + std::to_string(i) + " out of bounds for " + shape_str(s));
  }
  const int cols = s[1];
  std::vector<double> out(a.value().begin() + static_cast<std::ptrdiff_t>(i) * cols,
                          a.value().begin() + static_cast<std::ptrdiff_t>(i + 1) * cols);
  auto an = a.node();
  return detail::make_op({cols}, std::move(out), {an}, [an, i, cols](Node& self) {
    if (!an->needs_grad) return;
    an->ensure_grad();
    for (int j = 0; j < cols; ++j) {
      an->grad[static_cast<std::size_t>(i) * cols + j] += self.grad[static_cast<std::size_t>(j)];
    }
  });
}

// Single element by flat index, as a scalar.
inline Tensor pick(const Tensor& a, int flat_index) {
  if (flat_index < 0 || static_cast<std::size_t>(flat_index) >= a.value().size()) {
    throw ShapeError("pick: index " + std::to_string(flat_index) + " out of bounds for " +
                     shape_str(a.shape()));
  }
  auto an = a.node();
  return detail::make_op({1}, {a.value()[static_cast<std::size_t>(flat_index)]}, {an},
                         [an, flat_index](Node& self) {
                           if (!an->needs_grad) return;
                           an->ensure_grad();
                           an->grad[static_cast<std::size_t>(flat_index)] += self.grad[0];
                         });
}

inline Tensor log(const Tensor& a) {
  std::vector<double> out(a.value().size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::log(a.value()[i]);
  auto an = a.node();
  return detail::make_op(a.shape(), std::move(out), {an}, [an](Node& self) {
    if (!an->needs_grad) return;
    an->ensure_grad();
    for (std::size_t i = 0; i < self.value.size(); ++i) {
      an->grad[i] += self.grad[i] / an->value[i];
    }
  });
}

inline Tensor sum(const Tensor& a) {
  double s = 0.0;
  for (double v : a.value()) s += v;
  auto an = a.node();
  return detail::make_op({1}, {s}, {an}, [an](Node& self) {
    if (!an->needs_grad) return;
    an->ensure_grad();
    for (double& g : an->grad) g += self.grad[0];
  });
}

// Reverse pass from a scalar loss. Leaf grads accumulate additively across
// calls; interior grads are reset each call.
inline void backward(const Tensor& loss) {
  if (!loss.defined() || loss.value().size() != 1) {
    throw InvalidArgumentError("backward: loss must be a defined scalar");
  }
  Node* root = loss.node().get();
  if (!root->needs_grad) return;

  std::vector<Node*> order;
  std::unordered_set<Node*> seen;
  std::vector<std::pair<Node*, std::size_t>> stack;
  stack.emplace_back(root, 0);
  seen.insert(root);
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Node* parent = node->parents[next++].get();
      if (parent->needs_grad && seen.insert(parent).second) {
        stack.emplace_back(parent, 0);
      }
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }
  // Post-order: parents precede consumers; reversed gives consumers first.
  for (Node* node : order) {
    if (node->is_leaf) {
      node->ensure_grad();
    } else {
      node->grad.assign(node->value.size(), 0.0);
    }
  }
  root->grad[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* node = *it;
    if (node->backward_fn) node->backward_fn(*node);
  }
}

}  // namespace routelab::ad
