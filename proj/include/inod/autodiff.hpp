// Copyright 2026 The INoD Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Reverse-mode differentiation over a tape of recorded ops.
//
// A Tape owns every value produced during one forward pass. Leaves are added
// with leaf(); each differentiable op appends a node holding its output and a
// closure that accumulates parent gradients from the node gradient. backward()
// walks the tape in reverse recording order, which is a valid topological
// order because nodes only reference earlier nodes.

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "inod/errors.hpp"
#include "inod/ops.hpp"
#include "inod/tensor.hpp"

namespace inod {

template <typename T>
class Tape;

template <typename T>
class Var {
 public:
  Var() = default;
  Var(Tape<T>* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape<T>& tape() const { return *tape_; }
  std::size_t id() const noexcept { return id_; }
  const Tensor<T>& value() const { return tape_->value(*this); }
  const Shape& shape() const { return value().shape(); }
  bool valid() const noexcept { return tape_ != nullptr; }

 private:
  Tape<T>* tape_ = nullptr;
  std::size_t id_ = 0;
};

template <typename T>
class Gradients {
 public:
  explicit Gradients(std::vector<std::optional<Tensor<T>>> grads,
                     std::vector<Shape> shapes)
      : grads_(std::move(grads)), shapes_(std::move(shapes)) {}

  // Gradient of the loss w.r.t. v; zeros when v did not contribute.
  Tensor<T> operator[](const Var<T>& v) const {
    const auto& g = grads_.at(v.id());
    return g ? *g : Tensor<T>(shapes_.at(v.id()));
  }

  bool reached(const Var<T>& v) const { return grads_.at(v.id()).has_value(); }

 private:
  std::vector<std::optional<Tensor<T>>> grads_;
  std::vector<Shape> shapes_;
};

template <typename T>
class Tape {
 public:
  // Receives the tape (for input values), the output gradient, and one slot
  // per input; null slots are inputs that need no gradient.
  using BackwardFn =
      std::function<void(const Tape&, const Tensor<T>&, std::span<Tensor<T>* const>)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var<T> leaf(Tensor<T> value, bool requires_grad = false) {
    nodes_.push_back(Node{std::move(value), {}, {}, requires_grad});
    return Var<T>(this, nodes_.size() - 1);
  }

  Var<T> record(Tensor<T> value, std::vector<std::size_t> inputs, BackwardFn fn) {
    bool needs = false;
    for (auto i : inputs) needs = needs || nodes_.at(i).needs_grad;
    nodes_.push_back(Node{std::move(value), std::move(inputs),
                          needs ? std::move(fn) : BackwardFn{}, needs});
    return Var<T>(this, nodes_.size() - 1);
  }

  const Tensor<T>& value(const Var<T>& v) const { return nodes_.at(v.id()).value; }
  const Tensor<T>& value(std::size_t id) const { return nodes_.at(id).value; }
  bool needs_grad(const Var<T>& v) const { return nodes_.at(v.id()).needs_grad; }
  std::size_t size() const noexcept { return nodes_.size(); }

  Gradients<T> backward(const Var<T>& loss) const {
    if (loss.value().size() != 1) {
      throw ArgumentError("backward needs a scalar loss, got shape " +
                          shape_str(loss.value().shape()));
    }
    std::vector<std::optional<Tensor<T>>> grads(nodes_.size());
    std::vector<Shape> shapes;
    shapes.reserve(nodes_.size());
    for (const auto& n : nodes_) shapes.push_back(n.value.shape());

    grads[loss.id()] = Tensor<T>(loss.value().shape(), T{1});
    std::vector<Tensor<T>*> slots;
    for (std::size_t id = loss.id() + 1; id-- > 0;) {
      const Node& node = nodes_[id];
      if (!grads[id] || !node.backward) continue;
      slots.assign(node.inputs.size(), nullptr);
      for (std::size_t k = 0; k < node.inputs.size(); ++k) {
        const std::size_t in = node.inputs[k];
        if (!nodes_[in].needs_grad) continue;
        if (!grads[in]) grads[in] = Tensor<T>(nodes_[in].value.shape());
        slots[k] = &*grads[in];
      }
      node.backward(*this, *grads[id], slots);
    }
    return Gradients<T>(std::move(grads), std::move(shapes));
  }

 private:
  struct Node {
    Tensor<T> value;
    std::vector<std::size_t> inputs;
    BackwardFn backward;
    bool needs_grad = false;
  };
  std::vector<Node> nodes_;
};

template <typename T>
Gradients<T> backward(const Var<T>& loss) {
  return loss.tape().backward(loss);
}

namespace ad {

namespace detail {
template <typename T>
void same_tape(const Var<T>& a, const Var<T>& b) {
  if (&a.tape() != &b.tape()) throw ArgumentError("operands recorded on different tapes");
}
template <typename T>
void same_shape(const Var<T>& a, const Var<T>& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + " operands differ: " + shape_str(a.shape()) +
                         " vs " + shape_str(b.shape()));
  }
}
}  // namespace detail

template <typename T>
Var<T> conv2d(const Var<T>& x, const Var<T>& w, const Var<T>& b, std::size_t stride,
              std::size_t padding) {
  detail::same_tape(x, w);
  detail::same_tape(x, b);
  const ConvGeometry g{stride, padding};
  auto out = conv2d_forward(x.value(), w.value(), b.value(), g);
  const std::size_t xi = x.id(), wi = w.id();
  return x.tape().record(
      std::move(out), {x.id(), w.id(), b.id()},
      [xi, wi, g](const Tape<T>& t, const Tensor<T>& go, std::span<Tensor<T>* const> gs) {
        conv2d_backward(t.value(xi), t.value(wi), go, g, gs[0], gs[1], gs[2]);
      });
}

// a where mask is set, b elsewhere.
template <typename T>
Var<T> masked_merge(const Var<T>& a, const Var<T>& b, const BinaryGrid& mask) {
  detail::same_tape(a, b);
  auto out = inod::masked_merge(a.value(), b.value(), mask);
  return a.tape().record(
      std::move(out), {a.id(), b.id()},
      [mask](const Tape<T>&, const Tensor<T>& go, std::span<Tensor<T>* const> gs) {
        const std::size_t plane = mask.size();
        const std::size_t channels = go.size() / plane;
        const auto m = mask.data();
        for (std::size_t c = 0; c < channels; ++c) {
          for (std::size_t i = 0; i < plane; ++i) {
            Tensor<T>* dst = m[i] ? gs[0] : gs[1];
            if (dst) (*dst)[c * plane + i] += go[c * plane + i];
          }
        }
      });
}

template <typename T>
Var<T> relu(const Var<T>& x) {
  Tensor<T> out = x.value();
  for (auto& v : out.data()) v = v > T{0} ? v : T{0};
  const std::size_t xi = x.id();
  return x.tape().record(
      std::move(out), {x.id()},
      [xi](const Tape<T>& t, const Tensor<T>& go, std::span<Tensor<T>* const> gs) {
        const auto& in = t.value(xi);
        for (std::size_t i = 0; i < go.size(); ++i) {
          if (in[i] > T{0}) (*gs[0])[i] += go[i];
        }
      });
}

template <typename T>
Var<T> sigmoid(const Var<T>& x) {
  Tensor<T> out = x.value();
  for (auto& v : out.data()) v = inod::sigmoid(v);
  const std::size_t xi = x.id();
  return x.tape().record(
      std::move(out), {x.id()},
      [xi](const Tape<T>& t, const Tensor<T>& go, std::span<Tensor<T>* const> gs) {
        const auto& in = t.value(xi);
        for (std::size_t i = 0; i < go.size(); ++i) {
          const T s = inod::sigmoid(in[i]);
          (*gs[0])[i] += go[i] * s * (T{1} - s);
        }
      });
}

template <typename T>
Var<T> add(const Var<T>& a, const Var<T>& b) {
  detail::same_tape(a, b);
  detail::same_shape(a, b, "add");
  Tensor<T> out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += b.value()[i];
  return a.tape().record(
      std::move(out), {a.id(), b.id()},
      [](const Tape<T>&, const Tensor<T>& go, std::span<Tensor<T>* const> gs) {
        for (auto* g : gs) {
          if (!g) continue;
          for (std::size_t i = 0; i < go.size(); ++i) (*g)[i] += go[i];
        }
      });
}

// Elementwise product.
template <typename T>
Var<T> mul(const Var<T>& a, const Var<T>& b) {
  detail::same_tape(a, b);
  detail::same_shape(a, b, "mul");
  Tensor<T> out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= b.value()[i];
  const std::size_t ai = a.id(), bi = b.id();
  return a.tape().record(
      std::move(out), {ai, bi},
      [ai, bi](const Tape<T>& t, const Tensor<T>& go, std::span<Tensor<T>* const> gs) {
        const auto& av = t.value(ai);
        const auto& bv = t.value(bi);
        for (std::size_t i = 0; i < go.size(); ++i) {
          if (gs[0]) (*gs[0])[i] += go[i] * bv[i];
          if (gs[1]) (*gs[1])[i] += go[i] * av[i];
        }
      });
}

template <typename T>
Var<T> scale(const Var<T>& x, T factor) {
  Tensor<T> out = x.value();
  for (auto& v : out.data()) v *= factor;
  return x.tape().record(
      std::move(out), {x.id()},
      [factor](const Tape<T>&, const Tensor<T>& go, std::span<Tensor<T>* const> gs) {
        for (std::size_t i = 0; i < go.size(); ++i) (*gs[0])[i] += go[i] * factor;
      });
}

template <typename T>
Var<T> sum(const Var<T>& x) {
  T acc{0};
  for (auto v : x.value().data()) acc += v;
  return x.tape().record(
      Tensor<T>::scalar(acc), {x.id()},
      [](const Tape<T>&, const Tensor<T>& go, std::span<Tensor<T>* const> gs) {
        const T g = go[0];
        for (auto& v : gs[0]->data()) v += g;
      });
}

template <typename T>
Var<T> mean(const Var<T>& x) {
  return scale(sum(x), T{1} / static_cast<T>(x.value().size()));
}

// Channel-wise nearest-neighbour resize (centre sampling); gradients are
// scatter-added back to the sampled source cells.
template <typename T>
Var<T> resize_nearest(const Var<T>& x, std::size_t out_h, std::size_t out_w) {
  auto out = inod::resize_nearest(x.value(), out_h, out_w);
  return x.tape().record(
      std::move(out), {x.id()},
      [](const Tape<T>&, const Tensor<T>& go, std::span<Tensor<T>* const> gs) {
        resize_nearest_backward(go, *gs[0]);
      });
}

}  // namespace ad
}  // namespace inod
