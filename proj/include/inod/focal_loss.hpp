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

#include <cmath>
#include <cstddef>
#include <string>

#include "inod/autodiff.hpp"
#include "inod/ops.hpp"
#include "inod/tensor.hpp"

namespace inod {

struct FocalLossParams {
  double alpha = 0.25;
  double gamma = 2.0;
};

namespace detail {

inline void check_logit_target(const Shape& s, const BinaryGrid& target) {
  const bool ok = (s.size() == 2 && s[0] == target.height() && s[1] == target.width()) ||
                  (s.size() == 3 && s[0] == 1 && s[1] == target.height() &&
                   s[2] == target.width());
  if (!ok) {
    throw DimensionError("focal_loss logits " + shape_str(s) + " do not match target " +
                         std::to_string(target.height()) + "x" +
                         std::to_string(target.width()));
  }
}

// Per-cell focal term and its derivative w.r.t. the logit. With z = +x for
// positive cells and -x otherwise, p_t = sigmoid(z), q = 1 - p_t = sigmoid(-z)
// and -log(p_t) = softplus(-z), so no log of a saturated probability is taken.
template <typename T>
void focal_cell(T logit, bool positive, T alpha, T gamma, T& loss, T& dloss) {
  const T z = positive ? logit : -logit;
  const T a = positive ? alpha : T{1} - alpha;
  const T q = inod::sigmoid(-z);
  const T nll = softplus(-z);
  const T qg = gamma == T{0} ? T{1} : std::pow(q, gamma);
  loss = a * qg * nll;
  const T dz = -a * qg * (gamma * (T{1} - q) * nll + q);
  dloss = positive ? dz : -dz;
}

}  // namespace detail

// Mean binary focal loss of per-cell logits against a 0/1 target grid.
template <typename T>
Var<T> focal_loss(const Var<T>& logits, const BinaryGrid& target,
                  FocalLossParams p = {}) {
  detail::check_logit_target(logits.shape(), target);
  const auto& x = logits.value();
  const T alpha = static_cast<T>(p.alpha), gamma = static_cast<T>(p.gamma);
  const T inv_n = T{1} / static_cast<T>(x.size());
  T total{0};
  Tensor<T> dlogits(x.shape());
  const auto t = target.data();
  for (std::size_t i = 0; i < x.size(); ++i) {
    T l, d;
    detail::focal_cell(x[i], t[i] != 0, alpha, gamma, l, d);
    total += l;
    dlogits[i] = d * inv_n;
  }
  return logits.tape().record(
      Tensor<T>::scalar(total * inv_n), {logits.id()},
      [dlogits = std::move(dlogits)](const Tape<T>&, const Tensor<T>& go,
                                     std::span<Tensor<T>* const> gs) {
        const T g = go[0];
        for (std::size_t i = 0; i < dlogits.size(); ++i) (*gs[0])[i] += g * dlogits[i];
      });
}

// Plain-value variant, used by evaluation and tests.
template <typename T>
T focal_loss_value(const Tensor<T>& logits, const BinaryGrid& target,
                   FocalLossParams p = {}) {
  Tape<T> tape;
  return focal_loss(tape.leaf(logits), target, p).value().item();
}

// Focal loss of predicting the same probability for every cell when a
// fraction `positive_rate` of cells is positive.
inline double constant_focal_loss(double prob, double positive_rate, FocalLossParams p = {}) {
  const double pos = p.alpha * std::pow(1.0 - prob, p.gamma) * -std::log(prob);
  const double neg = (1.0 - p.alpha) * std::pow(prob, p.gamma) * -std::log(1.0 - prob);
  return positive_rate * pos + (1.0 - positive_rate) * neg;
}

// Lowest focal loss reachable by a constant prediction (the information-free
// base rate), found by golden-section search; the objective is unimodal in
// the probability.
inline double base_rate_focal_loss(double positive_rate, FocalLossParams p = {},
                                   double* argmin = nullptr) {
  double lo = 1e-9, hi = 1.0 - 1e-9;
  const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = hi - phi * (hi - lo), d = lo + phi * (hi - lo);
  for (int it = 0; it < 200; ++it) {
    if (constant_focal_loss(c, positive_rate, p) < constant_focal_loss(d, positive_rate, p)) {
      hi = d;
    } else {
      lo = c;
    }
    c = hi - phi * (hi - lo);
    d = lo + phi * (hi - lo);
  }
  const double best = 0.5 * (lo + hi);
  if (argmin) *argmin = best;
  return constant_focal_loss(best, positive_rate, p);
}

}  // namespace inod
