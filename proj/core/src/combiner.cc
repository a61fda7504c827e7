// core/src/combiner.cc
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

#include "cvec/combiner.h"

#include <stdexcept>

#include "cvec/ops.h"

namespace cvec {

std::string topology_name(Topology t) {
  switch (t) {
    case Topology::kSimultaneous:
      return "simultaneous";
    case Topology::kConsec1:
      return "consec1";
    case Topology::kConsec2:
      return "consec2";
    case Topology::kConsecFc:
      return "consec_fc";
  }
  return "unknown";
}

Topology parse_topology(const std::string& name) {
  if (name == "simultaneous") return Topology::kSimultaneous;
  if (name == "consec1") return Topology::kConsec1;
  if (name == "consec2") return Topology::kConsec2;
  if (name == "consec_fc") return Topology::kConsecFc;
  throw std::invalid_argument("unknown combination topology '" + name + "'");
}

CombinerConfig CombinerConfig::defaults(Topology topology,
                                        std::size_t num_systems,
                                        std::size_t heads, std::size_t dim) {
  CombinerConfig cfg;
  cfg.topology = topology;
  cfg.num_systems = num_systems;
  cfg.heads_per_system.assign(num_systems, heads);
  cfg.stage2_heads = topology == Topology::kConsec1 ? 1 : heads;
  cfg.fc_transform = topology == Topology::kConsec2;
  cfg.fc_dim = dim;
  return cfg;
}

void CombinerConfig::validate() const {
  if (num_systems < 1) throw std::invalid_argument("combiner: k must be >= 1");
  if (heads_per_system.size() != num_systems) {
    throw std::invalid_argument("combiner: need one head count per system");
  }
  for (std::size_t h : heads_per_system) {
    if (h == 0) throw std::invalid_argument("combiner: head counts must be > 0");
  }
  if (topology == Topology::kConsec1) {
    for (std::size_t h : heads_per_system) {
      if (h != heads_per_system.front()) {
        throw std::invalid_argument(
            "combiner: consec1 requires equal head counts across systems");
      }
    }
  }
  if (topology == Topology::kSimultaneous) {
    for (std::size_t h : heads_per_system) {
      if (h != heads_per_system.front()) {
        throw std::invalid_argument(
            "combiner: simultaneous uses one shared head count");
      }
    }
  }
  if ((topology == Topology::kConsec1 || topology == Topology::kConsec2) &&
      stage2_heads == 0) {
    throw std::invalid_argument("combiner: stage-2 heads must be > 0");
  }
  if ((fc_transform || topology == Topology::kConsecFc) && fc_dim == 0) {
    throw std::invalid_argument("combiner: fc_dim must be > 0");
  }
  if (bottleneck_dim == 0) {
    throw std::invalid_argument("combiner: bottleneck_dim must be > 0");
  }
}

std::size_t CombinerConfig::combined_dim(std::size_t dim) const {
  const std::size_t row = fc_transform ? fc_dim : dim;
  switch (topology) {
    case Topology::kSimultaneous:
      return heads_per_system.front() * dim;
    case Topology::kConsec1:
      return stage2_heads * heads_per_system.front() * row;
    case Topology::kConsec2:
      return stage2_heads * row;
    case Topology::kConsecFc:
      return fc_dim;
  }
  return 0;
}

namespace {

void require_same_cols(std::span<const Tensor> parts, const char* who) {
  if (parts.empty()) {
    throw std::invalid_argument(std::string(who) + ": need at least one system");
  }
  for (const Tensor& p : parts) {
    if (p.rank() != 2 || p.cols() != parts.front().cols()) {
      throw DimensionError(std::string(who) + ": system output " +
                           shape_to_string(p.shape()) + " does not match " +
                           shape_to_string(parts.front().shape()));
    }
  }
}

}  // namespace

SelfAttentionOutput combine_simultaneous(std::span<const Tensor> sequences,
                                         const AttentionParams& params,
                                         const PenaltyConfig& penalty) {
  require_same_cols(sequences, "combine_simultaneous");
  for (const Tensor& s : sequences) {
    if (s.rows() != sequences.front().rows()) {
      throw DimensionError("combine_simultaneous: frame counts differ (" +
                           shape_to_string(s.shape()) + " vs " +
                           shape_to_string(sequences.front().shape()) + ")");
    }
  }
  return self_atten(concat_rows(sequences), params, penalty);
}

SelfAttentionOutput combine_consec1(std::span<const Tensor> system_outputs,
                                    const AttentionParams& params,
                                    const PenaltyConfig& penalty) {
  require_same_cols(system_outputs, "combine_consec1");
  std::vector<Tensor> rows;
  rows.reserve(system_outputs.size());
  for (const Tensor& e : system_outputs) {
    if (e.shape() != system_outputs.front().shape()) {
      throw DimensionError("combine_consec1: systems must share h and n, got " +
                           shape_to_string(e.shape()) + " vs " +
                           shape_to_string(system_outputs.front().shape()));
    }
    rows.push_back(flatten_row(e));
  }
  return self_atten(concat_rows(rows), params, penalty);
}

SelfAttentionOutput combine_consec2(std::span<const Tensor> system_outputs,
                                    const AttentionParams& params,
                                    const PenaltyConfig& penalty) {
  require_same_cols(system_outputs, "combine_consec2");
  return self_atten(concat_rows(system_outputs), params, penalty);
}

Tensor fc_transform(const Tensor& system_output, const Tensor& weight) {
  if (system_output.cols() != weight.rows()) {
    throw DimensionError("fc_transform: " +
                         shape_to_string(system_output.shape()) +
                         " incompatible with W " +
                         shape_to_string(weight.shape()));
  }
  return relu(matmul(system_output, weight));
}

Tensor combine_consec_fc(std::span<const Tensor> system_outputs,
                         const Tensor& weight, const Tensor& bias) {
  if (system_outputs.empty()) {
    throw std::invalid_argument("combine_consec_fc: need at least one system");
  }
  std::vector<Tensor> flat;
  std::size_t width = 0;
  for (const Tensor& e : system_outputs) {
    flat.push_back(flatten_row(e));
    width += e.numel();
  }
  if (weight.rows() != width) {
    throw DimensionError("combine_consec_fc: concatenated width " +
                         std::to_string(width) + " does not match W " +
                         shape_to_string(weight.shape()));
  }
  return relu(add(matmul(concat_cols(flat), weight), bias));
}

Tensor bottleneck(const Tensor& combined, const Tensor& weight,
                  const Tensor& bias) {
  const Tensor flat = flatten_row(combined);
  if (flat.cols() != weight.rows()) {
    throw DimensionError("bottleneck: input width " +
                         std::to_string(flat.cols()) + " does not match W " +
                         shape_to_string(weight.shape()));
  }
  return add(matmul(flat, weight), bias);
}

}  // namespace cvec
