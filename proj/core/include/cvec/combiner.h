// core/include/cvec/combiner.h
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

#ifndef CVEC_COMBINER_H_
#define CVEC_COMBINER_H_

#include <span>
#include <string>
#include <vector>

#include "cvec/attention.h"
#include "cvec/tensor.h"

namespace cvec {

/// How per-system outputs are merged into one c-vector.
enum class Topology {
  kSimultaneous,  // one attention over all k*T frame rows
  kConsec1,       // per-system attention, then one head over flattened E_i
  kConsec2,       // per-system attention, then attention over all head rows
  kConsecFc,      // per-system attention, then concat + affine + ReLU
};

std::string topology_name(Topology t);
/// Accepts "simultaneous", "consec1", "consec2", "consec_fc".
Topology parse_topology(const std::string& name);

struct CombinerConfig {
  Topology topology = Topology::kConsec2;
  std::size_t num_systems = 2;
  std::vector<std::size_t> heads_per_system;  // stage-1 heads per system
  std::size_t stage2_heads = 5;               // ignored by simultaneous/consec_fc
  bool fc_transform = true;                   // per-system ReLU(E W) before stage 2
  std::size_t fc_dim = 0;                     // fc_transform / consec_fc width
  std::size_t bottleneck_dim = 128;

  /// Defaults: consec1 uses one stage-2 head and no transform; consec2 uses
  /// 5 heads with the transform on.
  static CombinerConfig defaults(Topology topology, std::size_t num_systems,
                                 std::size_t heads, std::size_t dim);
  void validate() const;
  /// Width of the combined representation fed to the bottleneck.
  std::size_t combined_dim(std::size_t dim) const;
};

/// Stacks the k frame sequences system-major into a kT x n matrix and runs a
/// single self-attentive layer over all rows.
SelfAttentionOutput combine_simultaneous(std::span<const Tensor> sequences,
                                         const AttentionParams& params,
                                         const PenaltyConfig& penalty);

/// Flattens each h x n system output to one row and attends over the k rows.
SelfAttentionOutput combine_consec1(std::span<const Tensor> system_outputs,
                                    const AttentionParams& params,
                                    const PenaltyConfig& penalty);

/// Stacks all head rows of all systems (head counts may differ) and attends
/// over them.
SelfAttentionOutput combine_consec2(std::span<const Tensor> system_outputs,
                                    const AttentionParams& params,
                                    const PenaltyConfig& penalty);

/// Row-wise transform ReLU(E W) of one system's h x n output.
Tensor fc_transform(const Tensor& system_output, const Tensor& weight);

/// ReLU([flat(E_1) ... flat(E_k)] W + b); 1 x fc width.
Tensor combine_consec_fc(std::span<const Tensor> system_outputs,
                         const Tensor& weight, const Tensor& bias);

/// Affine map of the flattened combined representation; 1 x bottleneck_dim.
Tensor bottleneck(const Tensor& combined, const Tensor& weight,
                  const Tensor& bias);

}  // namespace cvec

#endif  // CVEC_COMBINER_H_
