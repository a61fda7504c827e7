// core/src/attention.cc
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

#include "cvec/attention.h"

#include <cmath>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "cvec/ops.h"

namespace cvec {

AttentionParams AttentionParams::init(std::size_t input_dim,
                                      std::size_t hidden_dim,
                                      std::size_t heads, Rng& rng) {
  if (heads == 0 || hidden_dim == 0 || input_dim == 0) {
    throw std::invalid_argument("attention dimensions must be positive");
  }
  AttentionParams p;
  p.w1 = glorot_uniform(input_dim, hidden_dim, rng);
  p.w2 = glorot_uniform(hidden_dim, heads, rng);
  return p;
}

void AttentionParams::register_in(ParameterSet& params,
                                  const std::string& prefix) const {
  params.add(prefix + "w1", w1);
  params.add(prefix + "w2", w2);
}

AttentionParams AttentionParams::from(const ParameterSet& params,
                                      const std::string& prefix) {
  return {params.get(prefix + "w1"), params.get(prefix + "w2")};
}

void PenaltyConfig::validate(std::size_t heads) const {
  if (!(mu >= 0.0)) throw std::invalid_argument("penalty mu must be >= 0");
  if (lambdas.size() != heads) {
    throw DimensionError("penalty has " + std::to_string(lambdas.size()) +
                         " lambdas for " + std::to_string(heads) + " heads");
  }
  for (double l : lambdas) {
    if (!(l > 0.0 && l <= 1.0)) {
      throw std::invalid_argument("penalty lambda " + std::to_string(l) +
                                  " outside (0, 1]");
    }
  }
}

PenaltyConfig PenaltyConfig::spiky_smooth(std::size_t heads, std::size_t spiky,
                                          double mu, double smooth_lambda) {
  PenaltyConfig cfg;
  cfg.mu = mu;
  cfg.lambdas.assign(heads, smooth_lambda);
  for (std::size_t i = 0; i < std::min(spiky, heads); ++i) cfg.lambdas[i] = 1.0;
  return cfg;
}

PenaltyConfig PenaltyConfig::default_pattern(std::size_t heads, double mu,
                                             double smooth_lambda) {
  // 3 of 5 heads spiky; a single head stays spiky.
  const std::size_t spiky =
      heads <= 1 ? heads : (3 * heads + 2) / 5;
  return spiky_smooth(heads, spiky, mu, smooth_lambda);
}

PenaltyConfig PenaltyConfig::uniform(std::size_t heads, double lambda,
                                     double mu) {
  PenaltyConfig cfg;
  cfg.mu = mu;
  cfg.lambdas.assign(heads, lambda);
  return cfg;
}

Tensor compute_annotations(const Tensor& inputs,
                           const AttentionParams& params) {
  if (inputs.cols() != params.input_dim()) {
    throw DimensionError("attention input " + shape_to_string(inputs.shape()) +
                         " does not match W1 " +
                         shape_to_string(params.w1.shape()));
  }
  return softmax_columns(matmul(tanh(matmul(inputs, params.w1)), params.w2));
}

Tensor apply_attention(const Tensor& annotations, const Tensor& inputs) {
  if (annotations.rows() != inputs.rows()) {
    throw DimensionError("annotation rows " +
                         shape_to_string(annotations.shape()) +
                         " do not match inputs " +
                         shape_to_string(inputs.shape()));
  }
  return matmul(transpose(annotations), inputs);
}

Tensor penalty_modified(const Tensor& annotations, double mu,
                        std::span<const double> lambdas) {
  const std::size_t h = annotations.cols();
  if (lambdas.size() != h) {
    throw DimensionError("penalty: " + std::to_string(lambdas.size()) +
                         " lambdas for " + std::to_string(h) + " heads");
  }
  std::vector<double> diag(h * h, 0.0);
  for (std::size_t i = 0; i < h; ++i) diag[i * h + i] = lambdas[i];
  const Tensor gram = matmul(transpose(annotations), annotations);
  return scale(frobenius_sq(sub(gram, Tensor({h, h}, std::move(diag)))), mu);
}

Tensor penalty_original(const Tensor& annotations, double mu) {
  const std::vector<double> ones(annotations.cols(), 1.0);
  return penalty_modified(annotations, mu, ones);
}

SelfAttentionOutput self_atten(const Tensor& inputs,
                               const AttentionParams& params,
                               const PenaltyConfig& penalty) {
  penalty.validate(params.heads());
  SelfAttentionOutput out;
  out.annotations = compute_annotations(inputs, params);
  out.embedding = apply_attention(out.annotations, inputs);
  out.penalty = penalty_modified(out.annotations, penalty.mu, penalty.lambdas);
  return out;
}

SelfAttentionOutput self_atten(std::span<const Tensor> rows,
                               const AttentionParams& params,
                               const PenaltyConfig& penalty) {
  if (rows.empty()) throw std::invalid_argument("self_atten: empty input");
  return self_atten(concat_rows(rows), params, penalty);
}

std::vector<HeadStats> annotation_stats(const Tensor& annotations) {
  const std::size_t t_len = annotations.rows(), h = annotations.cols();
  const auto a = annotations.data();
  std::vector<HeadStats> stats(h, HeadStats{0.0, 0.0});
  for (std::size_t j = 0; j < h; ++j) {
    for (std::size_t t = 0; t < t_len; ++t) {
      const double p = a[t * h + j];
      if (p > 0.0) stats[j].entropy -= p * std::log(p);
      stats[j].max_weight = std::max(stats[j].max_weight, p);
    }
  }
  return stats;
}

void write_annotation_csv_header(std::ostream& os) {
  os << "window_id,head,frame,weight\n";
}

void write_annotation_csv(std::ostream& os, std::size_t window_id,
                          const Tensor& annotations) {
  const std::size_t t_len = annotations.rows(), h = annotations.cols();
  const auto a = annotations.data();
  std::ostringstream buf;
  buf.precision(9);
  for (std::size_t j = 0; j < h; ++j) {
    for (std::size_t t = 0; t < t_len; ++t) {
      buf << window_id << ',' << j << ',' << t << ',' << a[t * h + j] << '\n';
    }
  }
  os << buf.str();
}

}  // namespace cvec
