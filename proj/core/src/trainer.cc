// core/src/trainer.cc
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

#include "cvec/trainer.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <set>
#include <stdexcept>

#include "cvec/ops.h"

namespace cvec {

using nlohmann::json;

void TrainConfig::validate() const {
  if (window_frames == 0 || window_shift == 0 || window_shift > window_frames) {
    throw std::invalid_argument("train: need 0 < window_shift <= window_frames");
  }
  if (batch_size == 0) throw std::invalid_argument("train: batch_size must be positive");
  if (!(learning_rate >= 0.0) || !(pretrain_learning_rate >= 0.0)) {
    throw std::invalid_argument("train: learning rates must be >= 0");
  }
  if (!(validation_fraction >= 0.0 && validation_fraction < 1.0)) {
    throw std::invalid_argument("train: validation_fraction must lie in [0, 1)");
  }
}

json TrainConfig::to_json() const {
  return {{"window_frames", window_frames},
          {"window_shift", window_shift},
          {"learning_rate", learning_rate},
          {"batch_size", batch_size},
          {"epochs", epochs},
          {"pretrain_epochs", pretrain_epochs},
          {"pretrain_learning_rate", pretrain_learning_rate},
          {"validation_fraction", validation_fraction},
          {"seed", seed}};
}

TrainConfig TrainConfig::from_json(const json& j) {
  TrainConfig c;
  const json defaults = c.to_json();
  for (const auto& [key, value] : j.items()) {
    if (!defaults.contains(key)) {
      throw std::invalid_argument("train: unknown key '" + key + "'");
    }
  }
  auto get = [&](const char* key, auto& field) {
    if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
  };
  get("window_frames", c.window_frames);
  get("window_shift", c.window_shift);
  get("learning_rate", c.learning_rate);
  get("batch_size", c.batch_size);
  get("epochs", c.epochs);
  get("pretrain_epochs", c.pretrain_epochs);
  get("pretrain_learning_rate", c.pretrain_learning_rate);
  get("validation_fraction", c.validation_fraction);
  get("seed", c.seed);
  c.validate();
  return c;
}

std::vector<LabeledWindow> make_windows(const FeatureSequence& seq,
                                        std::size_t frames, std::size_t shift,
                                        WindowMode mode) {
  if (frames == 0 || shift == 0) {
    throw std::invalid_argument("make_windows: frames and shift must be positive");
  }
  std::vector<LabeledWindow> out;
  const std::size_t total = seq.features.defined() ? seq.features.rows() : 0;
  if (total < frames) return out;
  const std::size_t dim = seq.features.cols();
  const auto data = seq.features.data();
  for (std::size_t start = 0; start + frames <= total; start += shift) {
    LabeledWindow w;
    w.start_frame = start;
    if (mode == WindowMode::kTraining) {
      const int label = seq.labels.at(start);
      const bool pure = std::all_of(
          seq.labels.begin() + static_cast<std::ptrdiff_t>(start),
          seq.labels.begin() + static_cast<std::ptrdiff_t>(start + frames),
          [&](int l) { return l == label; });
      if (!pure) continue;
      w.speaker = label;
    }
    w.features = Tensor({frames, dim},
                        std::vector<double>(data.begin() + static_cast<std::ptrdiff_t>(start * dim),
                                            data.begin() + static_cast<std::ptrdiff_t>((start + frames) * dim)));
    out.push_back(std::move(w));
  }
  return out;
}

Tensor asoftmax_logits(const Tensor& embedding, const Tensor& class_weights) {
  return matmul(embedding, normalize_columns(class_weights));
}

Tensor total_loss(const Tensor& logits, int label, std::span<const Tensor> penalties) {
  const int labels[] = {label};
  Tensor loss = cross_entropy(logits, labels);
  for (const Tensor& p : penalties) loss = add(loss, p);
  return loss;
}

Adam::Adam(double learning_rate, double beta1, double beta2, double epsilon)
    : lr_(learning_rate), beta1_(beta1), beta2_(beta2), eps_(epsilon) {}

void Adam::step(ParameterSet& params) {
  if (m_.empty()) {
    for (const auto& [name, t] : params.entries()) {
      m_.emplace_back(t.numel(), 0.0);
      v_.emplace_back(t.numel(), 0.0);
    }
  }
  if (m_.size() != params.size()) {
    throw std::logic_error("Adam: parameter set changed between steps");
  }
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  std::size_t i = 0;
  for (const auto& entry : params.entries()) {
    Tensor t = entry.second;
    if (t.has_grad()) {
      const std::vector<double> g = t.grad();
      auto w = t.mutable_data();
      auto& m = m_[i];
      auto& v = v_[i];
      for (std::size_t j = 0; j < w.size(); ++j) {
        m[j] = beta1_ * m[j] + (1.0 - beta1_) * g[j];
        v[j] = beta2_ * v[j] + (1.0 - beta2_) * g[j] * g[j];
        w[j] -= lr_ * (m[j] / c1) / (std::sqrt(v[j] / c2) + eps_);
      }
    }
    ++i;
  }
}

TrainingData prepare_training_data(const std::vector<FeatureSequence>& recordings,
                                   const std::vector<std::string>& speaker_names,
                                   const TrainConfig& cfg) {
  cfg.validate();
  std::set<int> seen;
  for (const FeatureSequence& seq : recordings) seen.insert(seq.labels.begin(), seq.labels.end());
  std::vector<int> to_class(speaker_names.size(), -1);
  TrainingData data;
  for (int spk : seen) {
    to_class.at(static_cast<std::size_t>(spk)) = static_cast<int>(data.classes.size());
    data.classes.push_back(speaker_names.at(static_cast<std::size_t>(spk)));
  }

  std::vector<std::size_t> order(recordings.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
  std::shuffle(order.begin(), order.end(), rng);
  std::size_t num_val = static_cast<std::size_t>(
      std::floor(cfg.validation_fraction * static_cast<double>(recordings.size()) + 0.5));
  if (cfg.validation_fraction > 0.0 && recordings.size() >= 2) num_val = std::max<std::size_t>(num_val, 1);
  num_val = std::min(num_val, recordings.size() > 0 ? recordings.size() - 1 : 0);

  for (std::size_t pos = 0; pos < order.size(); ++pos) {
    auto windows = make_windows(recordings[order[pos]], cfg.window_frames,
                                cfg.window_shift, WindowMode::kTraining);
    auto& dest = pos + num_val >= order.size() ? data.validation : data.train;
    for (LabeledWindow& w : windows) {
      w.speaker = to_class[static_cast<std::size_t>(w.speaker)];
      dest.push_back(std::move(w));
    }
  }
  return data;
}

namespace {

std::vector<std::vector<std::size_t>> make_batches(std::size_t count,
                                                   std::size_t batch, Rng& rng) {
  std::vector<std::size_t> order(count);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t i = 0; i < count; i += batch) {
    out.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(i),
                     order.begin() + static_cast<std::ptrdiff_t>(std::min(count, i + batch)));
  }
  return out;
}

std::size_t count_classes(std::span<const LabeledWindow> windows) {
  std::set<int> s;
  for (const auto& w : windows) s.insert(w.speaker);
  return s.size();
}

}  // namespace

PretrainReport pretrain_frame_level(Encoder& encoder,
                                    std::span<const LabeledWindow> windows,
                                    std::size_t num_classes, const TrainConfig& cfg) {
  cfg.validate();
  PretrainReport report;
  if (cfg.pretrain_epochs == 0 || windows.empty()) return report;
  if (num_classes < 2) throw std::invalid_argument("pretrain: need at least 2 classes");

  Rng rng(cfg.seed + 17);
  ParameterSet params;
  params.extend("", encoder.params());
  Tensor& head = params.add("head", glorot_uniform(encoder.output_dim(), num_classes, rng));
  Adam opt(cfg.pretrain_learning_rate);

  for (std::size_t epoch = 0; epoch < cfg.pretrain_epochs; ++epoch) {
    double total = 0.0;
    std::size_t correct = 0, frames = 0;
    for (const auto& batch : make_batches(windows.size(), cfg.batch_size, rng)) {
      params.zero_grad();
      const double inv = 1.0 / static_cast<double>(batch.size());
      for (std::size_t idx : batch) {
        const LabeledWindow& w = windows[idx];
        const Tensor logits = asoftmax_logits(encoder.forward(w.features), head);
        const std::vector<int> labels(logits.rows(), w.speaker);
        const Tensor loss = cross_entropy(logits, labels);
        total += loss.item();
        scale(loss, inv).backward();
        const auto d = logits.data();
        const std::size_t c = logits.cols();
        for (std::size_t r = 0; r < logits.rows(); ++r) {
          const auto row = d.subspan(r * c, c);
          const auto best = std::max_element(row.begin(), row.end()) - row.begin();
          correct += best == w.speaker ? 1 : 0;
        }
        frames += logits.rows();
      }
      opt.step(params);
    }
    report.epoch_loss.push_back(total / static_cast<double>(windows.size()));
    report.frame_accuracy = static_cast<double>(correct) / static_cast<double>(frames);
  }
  encoder.params().zero_grad();
  return report;
}

double window_accuracy(const EmbeddingModel& model,
                       std::span<const LabeledWindow> windows) {
  if (windows.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::size_t correct = 0;
  for (const LabeledWindow& w : windows) {
    const Tensor logits = model.logits(model.forward(w.features.detach()).embedding);
    const auto d = logits.data();
    const auto best = std::max_element(d.begin(), d.end()) - d.begin();
    correct += best == w.speaker ? 1 : 0;
  }
  return static_cast<double>(correct) / static_cast<double>(windows.size());
}

std::vector<EpochStats> train(EmbeddingModel& model, const TrainingData& data,
                              const TrainConfig& cfg, const EpochCallback& on_epoch) {
  cfg.validate();
  if (count_classes(data.train) < 2) {
    throw std::invalid_argument("train: corpus must contain at least 2 speakers");
  }
  if (data.classes.size() != model.config().num_classes) {
    throw std::invalid_argument("train: model has " +
                                std::to_string(model.config().num_classes) +
                                " classes but data has " +
                                std::to_string(data.classes.size()));
  }
  Rng rng(cfg.seed);
  Adam opt(cfg.learning_rate);
  ParameterSet& params = model.params();
  std::vector<EpochStats> trace;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    double total = 0.0;
    for (const auto& batch : make_batches(data.train.size(), cfg.batch_size, rng)) {
      params.zero_grad();
      const double inv = 1.0 / static_cast<double>(batch.size());
      for (std::size_t idx : batch) {
        const LabeledWindow& w = data.train[idx];
        const ModelOutput out = model.forward(w.features);
        const Tensor loss = total_loss(model.logits(out.embedding), w.speaker, out.penalties);
        total += loss.item();
        scale(loss, inv).backward();
      }
      opt.step(params);
    }
    params.zero_grad();
    EpochStats stats;
    stats.epoch = epoch + 1;
    stats.train_loss = total / static_cast<double>(data.train.size());
    stats.val_acc = window_accuracy(model, data.validation);
    if (!std::isfinite(stats.train_loss)) {
      throw NumericError("train: non-finite loss in epoch " + std::to_string(epoch + 1));
    }
    trace.push_back(stats);
    if (on_epoch) on_epoch(stats);
  }
  return trace;
}

void write_loss_csv(const std::filesystem::path& path,
                    std::span<const EpochStats> trace) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os << "epoch,train_loss,val_acc\n";
  os.precision(10);
  for (const EpochStats& s : trace) {
    os << s.epoch << ',' << s.train_loss << ',';
    if (std::isnan(s.val_acc)) {
      os << "nan";
    } else {
      os << s.val_acc;
    }
    os << '\n';
  }
}

}  // namespace cvec
