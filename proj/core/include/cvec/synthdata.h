// core/include/cvec/synthdata.h
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

#ifndef CVEC_SYNTHDATA_H_
#define CVEC_SYNTHDATA_H_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cvec/scoring.h"
#include "cvec/tensor.h"

namespace cvec {

struct SynthConfig {
  std::size_t num_train_speakers = 20;
  std::size_t num_dev_speakers = 4;   // unseen in train
  std::size_t dev_seen_speakers = 1;  // train speakers that also appear in dev
  std::size_t num_eval_speakers = 4;  // never seen in train
  std::size_t feature_dim = 20;
  std::size_t min_turn_frames = 800;
  std::size_t max_turn_frames = 2000;
  std::size_t turns_per_recording = 8;
  std::size_t speakers_per_recording = 3;
  std::size_t train_recordings = 24;
  std::size_t dev_recordings = 4;
  std::size_t eval_recordings = 4;
  double noise_sigma = 0.1;
  double smoothing_rho = 0.9;
  double min_angle_deg = 60.0;
  std::uint64_t seed = 1;

  void validate() const;
  nlohmann::json to_json() const;
  static SynthConfig from_json(const nlohmann::json& j);
};

struct FeatureSequence {
  std::string recording_id;
  Tensor features;          // T x feature_dim
  std::vector<int> labels;  // per frame, index into Corpus::speaker_names
  double frame_period_s = 0.01;

  std::size_t frames() const { return labels.size(); }
};

struct CorpusSplit {
  std::vector<FeatureSequence> recordings;
  SegmentList reference;
};

struct Corpus {
  SynthConfig config;
  std::vector<std::string> speaker_names;
  std::vector<std::vector<double>> speaker_means;  // unit vectors
  std::vector<std::size_t> train_speakers;
  std::vector<std::size_t> dev_speakers;
  std::vector<std::size_t> eval_speakers;
  CorpusSplit train;
  CorpusSplit dev;
  CorpusSplit eval;

  const CorpusSplit& split(const std::string& name) const;
};

/// Deterministic multi-speaker corpus. Speaker means are unit vectors with a
/// minimum pairwise angle; frames are normalize(mean + eps(t)) with AR(1)
/// noise eps(t) = rho eps(t-1) + sqrt(1 - rho^2) eta, eta ~ N(0, sigma^2 I).
/// Feature values are rounded to f32 so the in-memory corpus matches what
/// FMAT files hold.
Corpus generate_corpus(const SynthConfig& cfg);

/// Reference segments implied by per-frame labels (runs of equal labels).
SegmentList labels_to_segments(const FeatureSequence& seq,
                               const std::vector<std::string>& speaker_names);

/// Layout: manifest.json, <split>/<recording>.fmat,
/// <split>/<recording>.labels.csv and <split>/ref.rttm.
void write_corpus(const Corpus& corpus, const std::filesystem::path& dir);
Corpus read_corpus(const std::filesystem::path& dir);

}  // namespace cvec

#endif  // CVEC_SYNTHDATA_H_
