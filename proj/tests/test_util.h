// tests/test_util.h
//
// Copyright 2026 The cvec Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef CVEC_TESTS_TEST_UTIL_H_
#define CVEC_TESTS_TEST_UTIL_H_

#include <cmath>
#include <random>
#include <vector>

#include "cvec/ops.h"
#include "cvec/params.h"
#include "cvec/tensor.h"

namespace cvec::testing {

inline Tensor random_tensor(Shape shape, Rng& rng, double lo = -1.0, double hi = 1.0,
                            bool requires_grad = false) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> d(shape_numel(shape));
  for (double& v : d) v = u(rng);
  return Tensor(std::move(shape), std::move(d), requires_grad);
}

// Scalarizes a matrix-valued output against a fixed random target so every
// output coordinate gets a distinct, nonzero upstream gradient.
inline Tensor scalarize(const Tensor& y, const Tensor& target) {
  return frobenius_sq(sub(y, target));
}

// Moves every row-vector parameter to a random positive value, so zero-init
// biases cannot leave a ReLU input exactly at its kink during a gradient check.
inline void lift_biases(std::vector<Tensor> params, Rng& rng) {
  std::uniform_real_distribution<double> u(0.1, 0.4);
  for (Tensor& t : params) {
    if (t.shape().size() == 2 && t.rows() == 1) {
      for (double& v : t.mutable_data()) v = u(rng);
    }
  }
}

inline double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace cvec::testing

#endif  // CVEC_TESTS_TEST_UTIL_H_
