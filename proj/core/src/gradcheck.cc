// core/src/gradcheck.cc
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

#include "cvec/gradcheck.h"

#include <algorithm>
#include <cmath>
#include <vector>

namespace cvec {
namespace {

double relative_error(double analytic, double numeric) {
  const double denom =
      std::max({std::abs(analytic), std::abs(numeric), 1e-8});
  return std::abs(analytic - numeric) / denom;
}

}  // namespace

double grad_check(const std::function<Tensor(const Tensor&)>& f,
                  const Tensor& x, double step) {
  Tensor leaf = x.detach();
  leaf = Tensor(leaf.shape(), {leaf.data().begin(), leaf.data().end()}, true);
  std::vector<Tensor> params{leaf};
  return grad_check([&] { return f(leaf); }, params, step);
}

double grad_check(const std::function<Tensor()>& loss,
                  std::span<Tensor> params, double step) {
  for (Tensor& p : params) p.zero_grad();
  Tensor value = loss();
  if (value.requires_grad()) value.backward();

  std::vector<std::vector<double>> analytic;
  analytic.reserve(params.size());
  for (const Tensor& p : params) analytic.push_back(p.grad());

  double worst = 0.0;
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto data = params[k].mutable_data();
    for (std::size_t i = 0; i < data.size(); ++i) {
      const double saved = data[i];
      data[i] = saved + step;
      const double up = loss().item();
      data[i] = saved - step;
      const double down = loss().item();
      data[i] = saved;
      const double numeric = (up - down) / (2.0 * step);
      worst = std::max(worst, relative_error(analytic[k][i], numeric));
    }
  }
  for (Tensor& p : params) p.zero_grad();
  return worst;
}

}  // namespace cvec
