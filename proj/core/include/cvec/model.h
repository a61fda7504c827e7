// core/include/cvec/model.h
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

#ifndef CVEC_MODEL_H_
#define CVEC_MODEL_H_

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cvec/attention.h"
#include "cvec/combiner.h"
#include "cvec/encoders.h"
#include "cvec/params.h"

namespace cvec {

enum class SystemKind { kTdnn, kHornn, kCVector };

/// "tdnn", "hornn" or "cvector:<topology>".
struct SystemSpec {
  SystemKind kind = SystemKind::kTdnn;
  Topology topology = Topology::kConsec2;  // only for kCVector

  static SystemSpec parse(const std::string& name);
  std::string name() const;
  bool operator==(const SystemSpec&) const = default;
};

struct ModelConfig {
  SystemSpec system;
  std::size_t feature_dim = 40;
  std::size_t attention_dim = 128;   // n: encoder output width
  std::size_t attention_hidden = 64; // d_a
  std::size_t heads = 5;
  TdnnConfig tdnn;
  HornnConfig hornn;
  PenaltyConfig stage1;
  CombinerConfig combiner;  // used for cvector systems
  PenaltyConfig stage2;     // used by consec1/consec2
  std::size_t bottleneck_dim = 128;
  std::size_t num_classes = 2;
  std::uint64_t seed = 0;

  /// Sizing knobs; the defaults are the full-scale configuration.
  struct Sizes {
    std::size_t attention_dim = 128;
    std::size_t attention_hidden = 0;  // 0 -> attention_dim / 2
    std::size_t heads = 5;
    std::size_t tdnn_hidden = 512;
    std::size_t hornn_state = 256;
    std::size_t hornn_layers = 2;
    std::vector<int> hornn_offsets = {1, 4};
    std::size_t bottleneck_dim = 128;
    double mu = 0.1;
    double smooth_lambda = 0.2;
  };
  static ModelConfig make(SystemSpec system, std::size_t feature_dim,
                          const Sizes& sizes, std::size_t num_classes,
                          std::uint64_t seed);

  void validate() const;
  nlohmann::json to_json() const;
  static ModelConfig from_json(const nlohmann::json& j);
};

struct ModelOutput {
  Tensor embedding;                  // 1 x bottleneck_dim
  std::vector<Tensor> penalties;     // one scalar per attentive layer
  std::vector<Tensor> annotations;   // stage-1 per system, then stage-2
};

/// Window -> c-vector (or d-vector) extractor with an Asoftmax (m = 1)
/// speaker classifier on top.
class EmbeddingModel {
 public:
  explicit EmbeddingModel(ModelConfig cfg);

  ModelOutput forward(const Tensor& window) const;
  Tensor logits(const Tensor& embedding) const;

  const ModelConfig& config() const { return cfg_; }
  ParameterSet& params() { return params_; }
  const ParameterSet& params() const { return params_; }
  std::vector<Encoder*> encoders();
  /// Trainable scalars used for embedding extraction (classifier excluded).
  std::size_t embedding_param_count() const;

 private:
  std::vector<Tensor> stage_one(const Tensor& window,
                                std::vector<Tensor>& penalties,
                                std::vector<Tensor>& annotations) const;

  ModelConfig cfg_;
  std::vector<std::unique_ptr<Encoder>> encoders_;
  ParameterSet params_;
};

/// Checkpoint layout: "CVCK" | u32 version | u32 header length | JSON header
/// {config, tensors, extra} | one FMAT block per tensor in header order.
void save_checkpoint(const std::filesystem::path& path,
                     const EmbeddingModel& model,
                     const nlohmann::json& extra = nlohmann::json::object());
std::unique_ptr<EmbeddingModel> load_checkpoint(
    const std::filesystem::path& path, nlohmann::json* extra = nullptr);

}  // namespace cvec

#endif  // CVEC_MODEL_H_
