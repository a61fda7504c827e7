// core/include/cvec/ops.h
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

#ifndef CVEC_OPS_H_
#define CVEC_OPS_H_

#include <span>
#include <vector>

#include "cvec/tensor.h"

namespace cvec {

// All matrix ops treat rank-0 as 1x1 and rank-1 of length n as 1xn.

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& x);

// Broadcasting is limited to a scalar operand or a 1xn row added to every row
// of an mxn operand.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& x, double factor);

Tensor tanh(const Tensor& x);
Tensor relu(const Tensor& x);

enum class ElementwiseOp { kTanh, kRelu, kAdd, kScale };
/// Dispatching front end over the elementwise primitives above. `other` is
/// the second operand for kAdd; `factor` is used by kScale.
Tensor elementwise(ElementwiseOp op, const Tensor& x, const Tensor& other = {},
                   double factor = 1.0);

/// Column-wise softmax, stabilized by subtracting each column's max.
Tensor softmax_columns(const Tensor& x);

/// Sum of squared entries, returned as a rank-0 tensor.
Tensor frobenius_sq(const Tensor& x);
Tensor sum(const Tensor& x);

Tensor reshape(const Tensor& x, Shape shape);
/// Row-major flatten to 1 x numel.
Tensor flatten_row(const Tensor& x);
Tensor concat_rows(std::span<const Tensor> parts);
/// Horizontal concatenation; all parts share the row count.
Tensor concat_cols(std::span<const Tensor> parts);
Tensor slice_rows(const Tensor& x, std::size_t begin, std::size_t end);

/// Each column divided by its l2 norm. Zero columns raise NumericError.
Tensor normalize_columns(const Tensor& x);

/// Mean over rows of -log softmax(logits[r])[labels[r]].
Tensor cross_entropy(const Tensor& logits, std::span<const int> labels);

/// Temporal splicing for TDNN layers: output row t is the concatenation of
/// input rows t+o for o in `offsets`, with indices clamped to [0, T-1].
Tensor splice_frames(const Tensor& x, std::span<const int> offsets);

/// Recurrence s(t) = relu(drive(t) + sum_j s(t - lags[j]) * recurrent[j]),
/// with s(tau) = 0 for tau < 0. `drive` is T x d (input projection plus bias
/// already applied); each recurrent matrix is d x d. Backpropagation through
/// time is done inside the op.
Tensor recurrent_relu(const Tensor& drive,
                      std::span<const Tensor> recurrent,
                      std::span<const int> lags);

}  // namespace cvec

#endif  // CVEC_OPS_H_
