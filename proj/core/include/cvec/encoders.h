// core/include/cvec/encoders.h
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

#ifndef CVEC_ENCODERS_H_
#define CVEC_ENCODERS_H_

#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "cvec/params.h"
#include "cvec/tensor.h"

namespace cvec {

struct TdnnLayerConfig {
  std::vector<int> offsets;  // sorted frame offsets spliced into this layer
  std::size_t out_dim = 0;
};

struct TdnnConfig {
  std::size_t input_dim = 40;
  std::vector<TdnnLayerConfig> layers;

  /// Five-layer x-vector style stack with contexts {-2..2}, {-2,0,2},
  /// {-3,0,3}, {0}, {0}. The fifth layer emits `projection_dim`.
  static TdnnConfig standard(std::size_t input_dim, std::size_t hidden_dim = 512,
                             std::size_t projection_dim = 128);

  std::size_t projection_dim() const { return layers.back().out_dim; }
  /// Total (min, max) frame offset seen by an output frame.
  std::pair<int, int> receptive_field() const;
  void validate() const;
};

struct HornnConfig {
  std::size_t input_dim = 40;
  std::size_t num_layers = 2;
  std::size_t state_dim = 256;
  std::size_t projection_dim = 128;
  std::vector<int> recurrence_offsets = {1, 4};

  void validate() const;
};

/// Frame-level embedding extractor: T x input_dim features in, T x
/// output_dim() frame embeddings out.
class Encoder {
 public:
  virtual ~Encoder() = default;
  virtual Tensor forward(const Tensor& features) const = 0;
  virtual std::size_t input_dim() const = 0;
  virtual std::size_t output_dim() const = 0;
  virtual std::string kind() const = 0;

  ParameterSet& params() { return params_; }
  const ParameterSet& params() const { return params_; }

 protected:
  ParameterSet params_;
};

/// Stack of spliced affine + ReLU layers; edges use replication padding so
/// the output has exactly T rows. The last layer output is taken after ReLU.
class TdnnEncoder : public Encoder {
 public:
  TdnnEncoder(TdnnConfig cfg, Rng& rng);

  Tensor forward(const Tensor& features) const override;
  std::size_t input_dim() const override { return cfg_.input_dim; }
  std::size_t output_dim() const override { return cfg_.projection_dim(); }
  std::string kind() const override { return "tdnn"; }
  const TdnnConfig& config() const { return cfg_; }

 private:
  TdnnConfig cfg_;
};

/// Causal high-order ReLU RNN. Per layer:
///   s(t) = relu(x(t) Wx + b + sum_k s(t - lag_k) U_k),  s(tau<0) = 0
///   y(t) = s(t) Wp + bp
/// where y feeds the next layer and the last y is the encoder output.
class HornnEncoder : public Encoder {
 public:
  HornnEncoder(HornnConfig cfg, Rng& rng);

  Tensor forward(const Tensor& features) const override;
  std::size_t input_dim() const override { return cfg_.input_dim; }
  std::size_t output_dim() const override { return cfg_.projection_dim; }
  std::string kind() const override { return "hornn"; }
  const HornnConfig& config() const { return cfg_; }

 private:
  HornnConfig cfg_;
};

std::size_t param_count(const TdnnConfig& cfg);
std::size_t param_count(const HornnConfig& cfg);
/// Recurrent part of one HORNN layer: in*state + lags*state^2 + state.
std::size_t hornn_recurrent_param_count(std::size_t input_dim,
                                        std::size_t state_dim,
                                        std::size_t num_lags);

}  // namespace cvec

#endif  // CVEC_ENCODERS_H_
