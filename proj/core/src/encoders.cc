// core/src/encoders.cc
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

#include "cvec/encoders.h"

#include <algorithm>
#include <stdexcept>

#include "cvec/ops.h"

namespace cvec {
namespace {

constexpr double kRecurrentGain = 0.5;

std::string layer_name(std::size_t i) { return "layer" + std::to_string(i + 1); }

void require_frames(const Tensor& features, std::size_t dim, const char* who) {
  if (!features.defined() || features.rank() != 2 || features.rows() == 0) {
    throw std::invalid_argument(std::string(who) + ": empty input");
  }
  if (features.cols() != dim) {
    throw DimensionError(std::string(who) + ": expected " +
                         std::to_string(dim) + " features per frame, got " +
                         shape_to_string(features.shape()));
  }
}

}  // namespace

TdnnConfig TdnnConfig::standard(std::size_t input_dim, std::size_t hidden_dim,
                                std::size_t projection_dim) {
  TdnnConfig cfg;
  cfg.input_dim = input_dim;
  cfg.layers = {
      {{-2, -1, 0, 1, 2}, hidden_dim},
      {{-2, 0, 2}, hidden_dim},
      {{-3, 0, 3}, hidden_dim},
      {{0}, hidden_dim},
      {{0}, projection_dim},
  };
  return cfg;
}

std::pair<int, int> TdnnConfig::receptive_field() const {
  int lo = 0, hi = 0;
  for (const auto& layer : layers) {
    lo += layer.offsets.front();
    hi += layer.offsets.back();
  }
  return {lo, hi};
}

void TdnnConfig::validate() const {
  if (input_dim == 0) throw std::invalid_argument("tdnn: input_dim must be > 0");
  if (layers.empty()) throw std::invalid_argument("tdnn: no layers");
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto& off = layers[i].offsets;
    if (off.empty() || layers[i].out_dim == 0) {
      throw std::invalid_argument("tdnn " + layer_name(i) +
                                  ": needs offsets and a positive width");
    }
    if (!std::is_sorted(off.begin(), off.end()) ||
        std::adjacent_find(off.begin(), off.end()) != off.end()) {
      throw std::invalid_argument("tdnn " + layer_name(i) +
                                  ": offsets must be sorted and distinct");
    }
    const bool has_zero = std::find(off.begin(), off.end(), 0) != off.end();
    bool symmetric = true;
    for (int o : off) {
      symmetric = symmetric && std::find(off.begin(), off.end(), -o) != off.end();
    }
    if (!has_zero && !symmetric) {
      throw std::invalid_argument("tdnn " + layer_name(i) +
                                  ": offsets must include 0 or be symmetric");
    }
  }
}

void HornnConfig::validate() const {
  if (input_dim == 0 || num_layers == 0 || state_dim == 0 ||
      projection_dim == 0) {
    throw std::invalid_argument("hornn: dimensions must be positive");
  }
  for (int o : recurrence_offsets) {
    if (o <= 0) {
      throw std::invalid_argument("hornn: recurrence offsets must be positive");
    }
  }
}

TdnnEncoder::TdnnEncoder(TdnnConfig cfg, Rng& rng) : cfg_(std::move(cfg)) {
  cfg_.validate();
  std::size_t in = cfg_.input_dim;
  for (std::size_t i = 0; i < cfg_.layers.size(); ++i) {
    const auto& layer = cfg_.layers[i];
    const std::size_t spliced = in * layer.offsets.size();
    params_.add(layer_name(i) + ".weight",
                glorot_uniform(spliced, layer.out_dim, rng));
    params_.add(layer_name(i) + ".bias", Tensor::zeros({1, layer.out_dim}));
    in = layer.out_dim;
  }
}

Tensor TdnnEncoder::forward(const Tensor& features) const {
  require_frames(features, cfg_.input_dim, "tdnn_forward");
  Tensor x = features;
  for (std::size_t i = 0; i < cfg_.layers.size(); ++i) {
    const std::string name = layer_name(i);
    const auto& off = cfg_.layers[i].offsets;
    Tensor spliced = off.size() == 1 && off[0] == 0 ? x : splice_frames(x, off);
    x = relu(add(matmul(spliced, params_.get(name + ".weight")),
                 params_.get(name + ".bias")));
  }
  return x;
}

HornnEncoder::HornnEncoder(HornnConfig cfg, Rng& rng) : cfg_(std::move(cfg)) {
  cfg_.validate();
  std::size_t in = cfg_.input_dim;
  const std::size_t s = cfg_.state_dim;
  for (std::size_t i = 0; i < cfg_.num_layers; ++i) {
    const std::string name = layer_name(i);
    params_.add(name + ".input", glorot_uniform(in, s, rng));
    params_.add(name + ".bias", Tensor::zeros({1, s}));
    for (int lag : cfg_.recurrence_offsets) {
      params_.add(name + ".rec" + std::to_string(lag),
                  glorot_uniform(s, s, rng, kRecurrentGain));
    }
    params_.add(name + ".proj", glorot_uniform(s, cfg_.projection_dim, rng));
    params_.add(name + ".proj_bias", Tensor::zeros({1, cfg_.projection_dim}));
    in = cfg_.projection_dim;
  }
}

Tensor HornnEncoder::forward(const Tensor& features) const {
  require_frames(features, cfg_.input_dim, "hornn_forward");
  Tensor x = features;
  for (std::size_t i = 0; i < cfg_.num_layers; ++i) {
    const std::string name = layer_name(i);
    Tensor drive = add(matmul(x, params_.get(name + ".input")),
                       params_.get(name + ".bias"));
    std::vector<Tensor> recurrent;
    for (int lag : cfg_.recurrence_offsets) {
      recurrent.push_back(params_.get(name + ".rec" + std::to_string(lag)));
    }
    Tensor states = recurrent_relu(drive, recurrent, cfg_.recurrence_offsets);
    x = add(matmul(states, params_.get(name + ".proj")),
            params_.get(name + ".proj_bias"));
  }
  return x;
}

std::size_t param_count(const TdnnConfig& cfg) {
  std::size_t n = 0, in = cfg.input_dim;
  for (const auto& layer : cfg.layers) {
    n += in * layer.offsets.size() * layer.out_dim + layer.out_dim;
    in = layer.out_dim;
  }
  return n;
}

std::size_t hornn_recurrent_param_count(std::size_t input_dim,
                                        std::size_t state_dim,
                                        std::size_t num_lags) {
  return input_dim * state_dim + num_lags * state_dim * state_dim + state_dim;
}

std::size_t param_count(const HornnConfig& cfg) {
  std::size_t n = 0, in = cfg.input_dim;
  for (std::size_t i = 0; i < cfg.num_layers; ++i) {
    n += hornn_recurrent_param_count(in, cfg.state_dim,
                                     cfg.recurrence_offsets.size());
    n += cfg.state_dim * cfg.projection_dim + cfg.projection_dim;
    in = cfg.projection_dim;
  }
  return n;
}

}  // namespace cvec
