// core/include/cvec/trainer.h
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

#ifndef CVEC_TRAINER_H_
#define CVEC_TRAINER_H_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "cvec/model.h"
#include "cvec/params.h"
#include "cvec/synthdata.h"
#include "cvec/tensor.h"

namespace cvec {

struct TrainConfig {
  std::size_t window_frames = 200;
  std::size_t window_shift = 100;
  double learning_rate = 1e-3;
  std::size_t batch_size = 32;
  std::size_t epochs = 10;
  std::size_t pretrain_epochs = 2;
  double pretrain_learning_rate = 1e-3;
  double validation_fraction = 0.1;
  std::uint64_t seed = 0;

  void validate() const;
  nlohmann::json to_json() const;
  static TrainConfig from_json(const nlohmann::json& j);
};

struct LabeledWindow {
  Tensor features;       // window_frames x f
  int speaker = -1;      // class index; -1 in extraction mode
  std::size_t start_frame = 0;
};

enum class WindowMode { kTraining, kExtraction };

/// Windows at stride `shift`. In training mode, windows spanning a speaker
/// change are dropped and `speaker` is the frame label; in extraction mode
/// every window is kept unlabeled. Sequences shorter than one window give an
/// empty list.
std::vector<LabeledWindow> make_windows(const FeatureSequence& seq,
                                        std::size_t frames, std::size_t shift,
                                        WindowMode mode);

/// logit_j = c . w_j / |w_j|: Asoftmax with m = 1 and no bias.
Tensor asoftmax_logits(const Tensor& embedding, const Tensor& class_weights);

/// Cross-entropy of `logits` (1 x C) against `label`, plus all penalties.
Tensor total_loss(const Tensor& logits, int label, std::span<const Tensor> penalties);

class Adam {
 public:
  explicit Adam(double learning_rate, double beta1 = 0.9, double beta2 = 0.999,
                double epsilon = 1e-8);
  /// Applies one update from the accumulated gradients, in parameter order.
  void step(ParameterSet& params);

 private:
  double lr_, beta1_, beta2_, eps_;
  std::size_t t_ = 0;
  std::vector<std::vector<double>> m_, v_;
};

struct TrainingData {
  std::vector<LabeledWindow> train;
  std::vector<LabeledWindow> validation;
  std::vector<std::string> classes;  // class index -> speaker name
};

/// Windows from `recordings` with labels remapped to dense class indices.
/// Whole recordings go to validation (the last `validation_fraction` of a
/// seeded shuffle, at least one when there are two or more recordings).
TrainingData prepare_training_data(const std::vector<FeatureSequence>& recordings,
                                   const std::vector<std::string>& speaker_names,
                                   const TrainConfig& cfg);

struct PretrainReport {
  std::vector<double> epoch_loss;
  double frame_accuracy = 0.0;
};

/// Trains `encoder` with a temporary normalized per-frame classifier that is
/// discarded afterwards.
PretrainReport pretrain_frame_level(Encoder& encoder,
                                    std::span<const LabeledWindow> windows,
                                    std::size_t num_classes, const TrainConfig& cfg);

struct EpochStats {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double val_acc = 0.0;  // NaN without validation windows
};

using EpochCallback = std::function<void(const EpochStats&)>;

std::vector<EpochStats> train(EmbeddingModel& model, const TrainingData& data,
                              const TrainConfig& cfg, const EpochCallback& on_epoch = {});

/// Fraction of windows whose argmax logit matches the label.
double window_accuracy(const EmbeddingModel& model,
                       std::span<const LabeledWindow> windows);

void write_loss_csv(const std::filesystem::path& path,
                    std::span<const EpochStats> trace);

}  // namespace cvec

#endif  // CVEC_TRAINER_H_
