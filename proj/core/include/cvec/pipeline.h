// core/include/cvec/pipeline.h
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

#ifndef CVEC_PIPELINE_H_
#define CVEC_PIPELINE_H_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "cvec/clustering.h"
#include "cvec/model.h"
#include "cvec/scoring.h"
#include "cvec/synthdata.h"
#include "cvec/trainer.h"

namespace cvec {

/// Thrown for malformed or inconsistent configuration documents.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct ThresholdGrid {
  double start = 0.05;
  double stop = 0.95;
  double step = 0.05;

  std::vector<double> values() const;
};

struct ExperimentConfig {
  SynthConfig synth;
  ModelConfig::Sizes model;
  TrainConfig train;
  std::vector<std::string> systems = {"tdnn", "hornn", "cvector:consec2"};
  ThresholdGrid threshold_grid;
  int k_max = 10;
  int kmeans_restarts = 10;
  double collar = 0.25;
  std::uint64_t seed = 0;

  void validate() const;
  nlohmann::json to_json() const;
  /// Rejects unknown keys at every level.
  static ExperimentConfig from_json(const nlohmann::json& j);
  static ExperimentConfig load(const std::filesystem::path& path);
  ClusterOptions cluster_options() const;
};

nlohmann::json sizes_to_json(const ModelConfig::Sizes& s);
ModelConfig::Sizes sizes_from_json(const nlohmann::json& j);

struct Embeddings {
  std::string recording_id;
  Eigen::MatrixXd vectors;          // one row per window
  std::vector<WindowTime> windows;
  double duration_s = 0.0;
};

Embeddings extract_embeddings(const EmbeddingModel& model, const FeatureSequence& seq,
                              std::size_t window_frames, std::size_t window_shift);
/// Per-recording extraction over `jobs` threads; output order follows input.
std::vector<Embeddings> extract_all(const EmbeddingModel& model,
                                    std::span<const FeatureSequence> recordings,
                                    std::size_t window_frames,
                                    std::size_t window_shift, int jobs = 1);

/// <dir>/<recording>.fmat plus <dir>/<recording>.times.json.
void write_embeddings(const std::filesystem::path& dir,
                      std::span<const Embeddings> embeddings);
std::vector<Embeddings> read_embeddings(const std::filesystem::path& dir);

/// Clusters one recording's windows and converts them to a timeline that
/// runs to the end of the recording.
SegmentList diarise(const Embeddings& emb, const ClusterOptions& options);
SegmentList diarise_all(std::span<const Embeddings> embeddings,
                        const ClusterOptions& options);

struct TuneResult {
  double best_threshold = 0.5;
  double best_ser = 0.0;
  std::vector<std::pair<double, double>> curve;  // (p, SER%)

  nlohmann::json to_json() const;
};

/// Grid search over p by SER on `reference`; ties go to the smaller p.
TuneResult tune_threshold(std::span<const Embeddings> embeddings,
                          const SegmentList& reference,
                          std::span<const double> grid,
                          const ClusterOptions& base, double collar);

using Logger = std::function<void(const std::string&)>;

/// Builds a model for `system`, runs frame-level pretraining of each encoder
/// and then joint training.
std::unique_ptr<EmbeddingModel> train_system(const Corpus& corpus, const SystemSpec& system,
                                             const ExperimentConfig& cfg,
                                             std::vector<EpochStats>* trace = nullptr,
                                             const Logger& log = {});

struct SystemResult {
  std::string system;
  std::size_t param_count = 0;
  double threshold = 0.0;
  std::optional<double> dev_ser;
  std::optional<double> eval_ser;

  nlohmann::json to_json() const;
  static SystemResult from_json(const nlohmann::json& j);
};

/// Tunes p on dev (when the corpus has dev recordings) and scores eval.
SystemResult evaluate_system(const EmbeddingModel& model, const std::string& name,
                             const Corpus& corpus, const ExperimentConfig& cfg,
                             int jobs = 1);

/// Table with one column per system and rows for #params, p, dev and eval SER.
std::string format_report(std::span<const SystemResult> results);
nlohmann::json report_json(std::span<const SystemResult> results);

/// Directory-safe name, e.g. "cvector:consec2" -> "cvector_consec2".
std::string system_dir_name(const std::string& system);

}  // namespace cvec

#endif  // CVEC_PIPELINE_H_
