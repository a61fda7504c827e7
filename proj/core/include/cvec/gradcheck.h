// core/include/cvec/gradcheck.h
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

#ifndef CVEC_GRADCHECK_H_
#define CVEC_GRADCHECK_H_

#include <functional>
#include <span>

#include "cvec/tensor.h"

namespace cvec {

/// Compares the analytic gradient of a scalar function against central
/// differences. Returns the max over coordinates of
/// |analytic - numeric| / max(|analytic|, |numeric|, 1e-8).
double grad_check(const std::function<Tensor(const Tensor&)>& f,
                  const Tensor& x, double step = 1e-5);

/// Same check over every coordinate of every tensor in `params`; `loss` is
/// re-evaluated after each in-place perturbation. Parameter gradients are
/// reset before and after.
double grad_check(const std::function<Tensor()>& loss,
                  std::span<Tensor> params, double step = 1e-5);

}  // namespace cvec

#endif  // CVEC_GRADCHECK_H_
