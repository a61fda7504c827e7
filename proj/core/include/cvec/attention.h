// core/include/cvec/attention.h
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

#ifndef CVEC_ATTENTION_H_
#define CVEC_ATTENTION_H_

#include <iosfwd>
#include <span>
#include <vector>

#include "cvec/params.h"
#include "cvec/tensor.h"

namespace cvec {

/// Weights of a multi-head self-attentive pooling layer. No bias terms.
struct AttentionParams {
  Tensor w1;  // input_dim x hidden_dim
  Tensor w2;  // hidden_dim x heads

  std::size_t input_dim() const { return w1.rows(); }
  std::size_t hidden_dim() const { return w1.cols(); }
  std::size_t heads() const { return w2.cols(); }

  static AttentionParams init(std::size_t input_dim, std::size_t hidden_dim,
                              std::size_t heads, Rng& rng);
  void register_in(ParameterSet& params, const std::string& prefix) const;
  static AttentionParams from(const ParameterSet& params,
                              const std::string& prefix);
};

/// Penalty weight and per-head targets for the diagonal of A^T A.
struct PenaltyConfig {
  double mu = 0.1;
  std::vector<double> lambdas;

  /// Every lambda must lie in (0, 1], mu must be non-negative.
  void validate(std::size_t heads) const;

  /// First `spiky` heads get lambda 1, the rest `smooth_lambda`.
  static PenaltyConfig spiky_smooth(std::size_t heads, std::size_t spiky,
                                    double mu, double smooth_lambda);
  /// The 3-spiky + 2-smooth pattern, scaled to `heads`.
  static PenaltyConfig default_pattern(std::size_t heads, double mu = 0.1,
                                       double smooth_lambda = 0.2);
  static PenaltyConfig uniform(std::size_t heads, double lambda,
                               double mu = 0.1);
};

/// A = softmax_columns(tanh(H W1) W2); shape T x heads.
Tensor compute_annotations(const Tensor& inputs, const AttentionParams& params);

/// E = A^T H; row i is the a_i-weighted average of the input rows.
Tensor apply_attention(const Tensor& annotations, const Tensor& inputs);

/// mu * ||A^T A - I||_F^2.
Tensor penalty_original(const Tensor& annotations, double mu);

/// mu * ||A^T A - diag(lambdas)||_F^2.
Tensor penalty_modified(const Tensor& annotations, double mu,
                        std::span<const double> lambdas);

struct SelfAttentionOutput {
  Tensor embedding;    // heads x n
  Tensor penalty;      // scalar
  Tensor annotations;  // T x heads
};

SelfAttentionOutput self_atten(const Tensor& inputs,
                               const AttentionParams& params,
                               const PenaltyConfig& penalty);
/// Stacks `rows` (each 1 x n) into H first.
SelfAttentionOutput self_atten(std::span<const Tensor> rows,
                               const AttentionParams& params,
                               const PenaltyConfig& penalty);

struct HeadStats {
  double entropy;     // nats
  double max_weight;
};

std::vector<HeadStats> annotation_stats(const Tensor& annotations);

/// Appends rows `window_id,head,frame,weight`.
void write_annotation_csv(std::ostream& os, std::size_t window_id,
                          const Tensor& annotations);
void write_annotation_csv_header(std::ostream& os);

}  // namespace cvec

#endif  // CVEC_ATTENTION_H_
