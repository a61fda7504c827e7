// tests/acceptance/acceptance.cc
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

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <numbers>
#include <numeric>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cvec/attention.h"
#include "cvec/clustering.h"
#include "cvec/combiner.h"
#include "cvec/encoders.h"
#include "cvec/gradcheck.h"
#include "cvec/model.h"
#include "cvec/ops.h"
#include "cvec/pipeline.h"
#include "cvec/scoring.h"
#include "cvec/synthdata.h"
#include "cvec/trainer.h"

namespace cvec {
namespace {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

constexpr double kGradTolerance = 1e-4;
constexpr int kGradSeeds = 10;

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

Tensor random_tensor(Shape shape, Rng& rng, double lo = -1.0, double hi = 1.0,
                     bool requires_grad = false) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> d(shape_numel(shape));
  for (double& v : d) v = u(rng);
  return Tensor(std::move(shape), std::move(d), requires_grad);
}

// Zero-init biases can leave a ReLU input exactly at its kink, where the
// finite difference is meaningless.
void lift_biases(std::vector<Tensor> params, Rng& rng) {
  std::uniform_real_distribution<double> u(0.1, 0.4);
  for (Tensor& t : params) {
    if (t.shape().size() == 2 && t.rows() == 1) {
      for (double& v : t.mutable_data()) v = u(rng);
    }
  }
}

Tensor scalarize(const Tensor& y, const Tensor& target) { return frobenius_sq(sub(y, target)); }

std::string fixed(double v, int digits) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(digits);
  os << v;
  return os.str();
}

std::string sci(double v) {
  std::ostringstream os;
  os.setf(std::ios::scientific);
  os.precision(2);
  os << v;
  return os.str();
}

class GradSuite {
 public:
  void record(const std::string& name, double err) {
    auto& worst = worst_[name];
    worst = std::max(worst, err);
  }
  void check_input(const std::string& name, const std::function<Tensor(const Tensor&)>& f,
                   const Tensor& at) {
    record(name, grad_check(f, at));
  }
  void check_params(const std::string& name, const std::function<Tensor()>& loss,
                    std::vector<Tensor> params) {
    record(name, grad_check(loss, params));
  }
  const std::map<std::string, double>& worst() const { return worst_; }

 private:
  std::map<std::string, double> worst_;
};

AttentionParams grad_params(std::size_t n, std::size_t da, std::size_t h, Rng& rng) {
  return {random_tensor({n, da}, rng, -1, 1, true), random_tensor({da, h}, rng, -1, 1, true)};
}

void primitive_gradients(GradSuite& suite, Rng& rng) {
  const Tensor x = random_tensor({4, 3}, rng);
  const Tensor b = random_tensor({3, 5}, rng);
  const Tensor row = random_tensor({1, 3}, rng);
  const Tensor t43 = random_tensor({4, 3}, rng);
  const Tensor t45 = random_tensor({4, 5}, rng);
  const Tensor t34 = random_tensor({3, 4}, rng);
  const Tensor t112 = random_tensor({1, 12}, rng);
  const Tensor t49 = random_tensor({4, 9}, rng);
  suite.check_input("matmul", [&](const Tensor& v) { return scalarize(matmul(v, b), t45); }, x);
  suite.check_input("transpose", [&](const Tensor& v) { return scalarize(transpose(v), t34); }, x);
  suite.check_input("add", [&](const Tensor& v) { return scalarize(add(x, v), t43); }, row);
  suite.check_input("sub", [&](const Tensor& v) { return scalarize(sub(t43, v), x); }, x);
  suite.check_input("scale", [&](const Tensor& v) { return scalarize(scale(v, -1.7), t43); }, x);
  suite.check_input("tanh", [&](const Tensor& v) { return scalarize(tanh(v), t43); }, x);
  Tensor away = x.clone();
  for (double& v : away.mutable_data()) v += v >= 0 ? 0.1 : -0.1;
  suite.check_input("relu", [&](const Tensor& v) { return scalarize(relu(v), t43); }, away);
  suite.check_input("softmax_columns",
                    [&](const Tensor& v) { return scalarize(softmax_columns(v), t43); }, x);
  suite.check_input("frobenius_sq", [&](const Tensor& v) { return frobenius_sq(v); }, x);
  suite.check_input("flatten_row",
                    [&](const Tensor& v) { return scalarize(flatten_row(v), t112); }, x);
  suite.check_input("normalize_columns",
                    [&](const Tensor& v) { return scalarize(normalize_columns(v), t43); }, x);
  const int labels[] = {0, 2, 1, 2};
  suite.check_input("cross_entropy", [&](const Tensor& v) { return cross_entropy(v, labels); }, x);
  const int offsets[] = {-2, 0, 1};
  suite.check_input("splice_frames",
                    [&](const Tensor& v) { return scalarize(splice_frames(v, offsets), t49); }, x);
  const Tensor u1 = random_tensor({3, 3}, rng, -0.5, 0.5);
  const Tensor u2 = random_tensor({3, 3}, rng, -0.5, 0.5);
  const int lags[] = {1, 4};
  const Tensor drive = random_tensor({6, 3}, rng, 0.2, 1.0);
  const Tensor t63 = random_tensor({6, 3}, rng);
  suite.check_input("recurrent_relu", [&](const Tensor& v) {
    const Tensor rec[] = {v, u2};
    return scalarize(recurrent_relu(drive, rec, lags), t63);
  }, u1);
}

void layer_gradients(GradSuite& suite, Rng& rng, std::uint64_t seed) {
  const std::size_t t = 6, n = 8, h = 2;
  const Tensor frames = random_tensor({t, n}, rng, -1, 1, true);
  const AttentionParams att = grad_params(n, 4, h, rng);
  const PenaltyConfig pen{0.1, {1.0, 0.2}};
  const Tensor target = random_tensor({h, n}, rng);
  suite.check_params("self_attention", [&] {
    const SelfAttentionOutput out = self_atten(frames, att, pen);
    return add(scalarize(out.embedding, target), out.penalty);
  }, {frames, att.w1, att.w2});

  Rng enc_rng(seed);
  TdnnEncoder tdnn(TdnnConfig::standard(3, 5, 4), enc_rng);
  HornnConfig hc;
  hc.input_dim = 3;
  hc.num_layers = 2;
  hc.state_dim = 4;
  hc.projection_dim = 4;
  HornnEncoder hornn(hc, enc_rng);
  const Tensor feats = random_tensor({t, 3}, rng, -1, 1, true);
  const Tensor enc_target = random_tensor({t, 4}, rng);
  for (Encoder* enc : std::initializer_list<Encoder*>{&tdnn, &hornn}) {
    std::vector<Tensor> params = enc->params().tensors();
    lift_biases(params, rng);
    params.push_back(feats);
    suite.check_params(enc->kind() + "_encoder",
                       [&] { return scalarize(enc->forward(feats), enc_target); }, params);
  }

  const std::size_t k = 2;
  std::vector<Tensor> seqs, outs;
  for (std::size_t i = 0; i < k; ++i) {
    seqs.push_back(random_tensor({t, n}, rng, -1, 1, true));
    outs.push_back(random_tensor({h, n}, rng, -1, 1, true));
  }
  const AttentionParams sim = grad_params(n, 4, h, rng);
  suite.check_params("combine_simultaneous", [&] {
    const auto out = combine_simultaneous(seqs, sim, pen);
    return add(scalarize(out.embedding, target), out.penalty);
  }, {seqs[0], seqs[1], sim.w1, sim.w2});
  const AttentionParams c1 = grad_params(h * n, 4, 1, rng);
  const Tensor t1 = random_tensor({1, h * n}, rng);
  suite.check_params("combine_consec1", [&] {
    const auto out = combine_consec1(outs, c1, PenaltyConfig{0.1, {0.5}});
    return add(scalarize(out.embedding, t1), out.penalty);
  }, {outs[0], outs[1], c1.w1, c1.w2});
  const AttentionParams c2 = grad_params(n, 4, h, rng);
  suite.check_params("combine_consec2", [&] {
    const auto out = combine_consec2(outs, c2, pen);
    return add(scalarize(out.embedding, target), out.penalty);
  }, {outs[0], outs[1], c2.w1, c2.w2});
  const Tensor fc_w = random_tensor({n, 5}, rng, -1, 1, true);
  const Tensor fc_target = random_tensor({h, 5}, rng);
  suite.check_params("fc_transform",
                     [&] { return scalarize(fc_transform(outs[0], fc_w), fc_target); },
                     {outs[0], fc_w});
  const Tensor cf_w = random_tensor({k * h * n, 5}, rng, -1, 1, true);
  const Tensor cf_b = random_tensor({1, 5}, rng, -1, 1, true);
  const Tensor cf_target = random_tensor({1, 5}, rng);
  suite.check_params("combine_consec_fc",
                     [&] { return scalarize(combine_consec_fc(outs, cf_w, cf_b), cf_target); },
                     {outs[0], outs[1], cf_w, cf_b});
  const Tensor bn_w = random_tensor({h * n, 4}, rng, -1, 1, true);
  const Tensor bn_b = random_tensor({1, 4}, rng, -1, 1, true);
  const Tensor bn_target = random_tensor({1, 4}, rng);
  suite.check_params("bottleneck",
                     [&] { return scalarize(bottleneck(outs[0], bn_w, bn_b), bn_target); },
                     {outs[0], bn_w, bn_b});
  const Tensor emb = random_tensor({1, 4}, rng, -1, 1, true);
  const Tensor cls = random_tensor({4, 3}, rng, -1, 1, true);
  suite.check_params("asoftmax_loss", [&] {
    const Tensor pens[] = {scale(frobenius_sq(emb), 0.1)};
    return total_loss(asoftmax_logits(emb, cls), 2, pens);
  }, {emb, cls});
}

void full_model_gradients(GradSuite& suite, Rng& rng, std::uint64_t seed) {
  ModelConfig::Sizes s;
  s.attention_dim = 8;
  s.heads = 2;
  s.tdnn_hidden = 6;
  s.hornn_state = 5;
  s.hornn_layers = 1;
  s.bottleneck_dim = 4;
  EmbeddingModel model(ModelConfig::make(SystemSpec::parse("cvector:consec2"), 3, s, 3, seed));
  const Tensor window = random_tensor({6, 3}, rng);
  lift_biases(model.params().tensors(), rng);
  suite.check_params("full_consec2_model", [&] {
    const ModelOutput out = model.forward(window);
    return total_loss(model.logits(out.embedding), 1, out.penalties);
  }, model.params().tensors());
}

Outcome criterion_gradients() {
  const auto start = Clock::now();
  GradSuite suite;
  for (int seed = 1; seed <= kGradSeeds; ++seed) {
    Rng rng(static_cast<std::uint64_t>(seed));
    primitive_gradients(suite, rng);
    layer_gradients(suite, rng, static_cast<std::uint64_t>(seed));
    full_model_gradients(suite, rng, static_cast<std::uint64_t>(seed));
  }
  const double elapsed = seconds_since(start);
  double worst = 0.0;
  std::string worst_name;
  std::vector<std::string> failing;
  for (const auto& [name, err] : suite.worst()) {
    if (err > worst) {
      worst = err;
      worst_name = name;
    }
    if (err > kGradTolerance) failing.push_back(name + "=" + sci(err));
  }
  std::string detail = std::to_string(suite.worst().size()) + " checks x " +
                       std::to_string(kGradSeeds) + " seeds, worst " + sci(worst) + " (" +
                       worst_name + "), full consec2 " + sci(suite.worst().at("full_consec2_model")) +
                       ", " + fixed(elapsed, 1) + " s";
  for (const std::string& f : failing) detail += "; over tolerance: " + f;
  return {failing.empty() && elapsed < 60.0, detail};
}

Tensor column_stochastic(std::size_t t, std::size_t h, Rng& rng) {
  return softmax_columns(random_tensor({t, h}, rng, -3, 3));
}

Outcome criterion_penalty_identities() {
  Rng rng(2);
  bool identity_exact = true;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t t = 2 + static_cast<std::size_t>(trial % 9);
    const std::size_t h = 1 + static_cast<std::size_t>(trial % 5);
    const Tensor a = column_stochastic(t, h, rng);
    const double mu = 0.05 + 0.01 * trial;
    const std::vector<double> ones(h, 1.0);
    identity_exact = identity_exact &&
                     penalty_modified(a, mu, ones).item() == penalty_original(a, mu).item();
  }

  const double mu = 0.7;
  const Tensor uniform = Tensor::full({4, 2}, 0.25);
  const double uniform_value = penalty_original(uniform, mu).item();
  const double uniform_err = std::abs(uniform_value - 1.25 * mu);

  // Golden-section search of lambda -> P over [1/T, 1] for a single head.
  double argmin_err = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t t = 3 + static_cast<std::size_t>(trial);
    const Tensor a = column_stochastic(t, 1, rng);
    double ata = 0.0;
    for (double v : a.data()) ata += v * v;
    auto p = [&](double lambda) {
      const double lam[] = {lambda};
      return penalty_modified(a, 0.1, lam).item();
    };
    double lo = 1.0 / static_cast<double>(t), hi = 1.0;
    const double g = (std::sqrt(5.0) - 1.0) / 2.0;
    double x1 = hi - g * (hi - lo), x2 = lo + g * (hi - lo);
    double f1 = p(x1), f2 = p(x2);
    while (hi - lo > 1e-10) {
      if (f1 < f2) {
        hi = x2;
        x2 = x1;
        f2 = f1;
        x1 = hi - g * (hi - lo);
        f1 = p(x1);
      } else {
        lo = x1;
        x1 = x2;
        f1 = f2;
        x2 = lo + g * (hi - lo);
        f2 = p(x2);
      }
    }
    argmin_err = std::max(argmin_err, std::abs((lo + hi) / 2.0 - ata));
  }
  const bool pass = identity_exact && uniform_err <= 1e-12 && argmin_err <= 1e-6;
  return {pass, std::string("lambda=1 identity ") + (identity_exact ? "exact" : "NOT exact") +
                    " on 100 draws, uniform case error " + sci(uniform_err) +
                    ", argmin error " + sci(argmin_err)};
}

Outcome criterion_penalty_behaviour() {
  const auto start = Clock::now();
  SynthConfig sc;
  sc.num_train_speakers = 6;
  sc.num_dev_speakers = 0;
  sc.dev_seen_speakers = 0;
  sc.num_eval_speakers = 3;
  sc.dev_recordings = 0;
  sc.train_recordings = 8;
  sc.eval_recordings = 4;
  sc.feature_dim = 8;
  sc.min_turn_frames = 150;
  sc.max_turn_frames = 300;
  sc.turns_per_recording = 6;
  sc.noise_sigma = 0.5;
  sc.seed = 5;
  const Corpus corpus = generate_corpus(sc);

  TrainConfig tc;
  tc.window_frames = 50;
  tc.window_shift = 25;
  tc.epochs = 10;
  tc.seed = 5;
  const TrainingData data = prepare_training_data(corpus.train.recordings, corpus.speaker_names, tc);

  ModelConfig::Sizes sizes;
  sizes.attention_dim = 16;
  sizes.heads = 4;
  sizes.tdnn_hidden = 24;
  sizes.bottleneck_dim = 16;
  sizes.mu = 1.0;
  const double t = static_cast<double>(tc.window_frames);

  struct Profile {
    double entropy = 0.0;
    double max_weight = 0.0;
    std::size_t windows = 0;
  };
  auto run = [&](double lambda) {
    ModelConfig cfg = ModelConfig::make(SystemSpec::parse("tdnn"), sc.feature_dim, sizes,
                                        data.classes.size(), 7);
    cfg.stage1.lambdas.assign(sizes.heads, lambda);
    EmbeddingModel model(cfg);
    train(model, data, tc);
    Profile prof;
    std::size_t heads = 0;
    for (const FeatureSequence& rec : corpus.eval.recordings) {
      for (const LabeledWindow& w :
           make_windows(rec, tc.window_frames, tc.window_shift, WindowMode::kExtraction)) {
        for (const HeadStats& s : annotation_stats(model.forward(w.features).annotations[0])) {
          prof.entropy += s.entropy;
          prof.max_weight += s.max_weight;
          ++heads;
        }
        ++prof.windows;
      }
    }
    prof.entropy /= static_cast<double>(heads);
    prof.max_weight /= static_cast<double>(heads);
    return prof;
  };
  const Profile spiky = run(1.0);
  const Profile smooth = run(1.0 / t);
  const double elapsed = seconds_since(start);
  const bool pass = spiky.windows >= 100 && spiky.entropy < smooth.entropy &&
                    spiky.max_weight > smooth.max_weight && elapsed < 300.0;
  return {pass, std::to_string(spiky.windows) + " eval windows, entropy " +
                    fixed(spiky.entropy, 4) + " (lambda=1) vs " + fixed(smooth.entropy, 4) +
                    " (lambda=1/T), max weight " + fixed(spiky.max_weight, 4) + " vs " +
                    fixed(smooth.max_weight, 4) + ", " + fixed(elapsed, 1) + " s"};
}

bool same_bits(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) return false;
  const auto x = a.data();
  const auto y = b.data();
  return std::equal(x.begin(), x.end(), y.begin(), y.end());
}

Outcome criterion_combiner_degeneracy() {
  Rng rng(4);
  bool consec1_ok = true, simultaneous_ok = true, shapes_ok = true;
  for (int trial = 0; trial < 20; ++trial) {
    const Tensor e = random_tensor({3, 5}, rng);
    const Tensor single[] = {e};
    const auto c1 = combine_consec1(single, grad_params(15, 4, 1, rng), PenaltyConfig{0.1, {1.0}});
    consec1_ok = consec1_ok && same_bits(c1.embedding, flatten_row(e));

    const Tensor frames = random_tensor({7, 5}, rng);
    const Tensor seq[] = {frames};
    const AttentionParams p = grad_params(5, 3, 2, rng);
    const PenaltyConfig pen{0.1, {1.0, 0.2}};
    const auto sim = combine_simultaneous(seq, p, pen);
    const auto plain = self_atten(frames, p, pen);
    simultaneous_ok = simultaneous_ok && same_bits(sim.embedding, plain.embedding) &&
                      same_bits(sim.penalty, plain.penalty) &&
                      same_bits(sim.annotations, plain.annotations);
  }

  std::uniform_int_distribution<std::size_t> k_d(1, 4), h_d(1, 5), n_d(1, 9), t_d(1, 12);
  for (int draw = 0; draw < 50; ++draw) {
    const std::size_t k = k_d(rng), h = h_d(rng), n = n_d(rng), t = t_d(rng), h2 = h_d(rng);
    std::vector<Tensor> frames, outs;
    for (std::size_t i = 0; i < k; ++i) frames.push_back(random_tensor({t, n}, rng));
    const auto sim = combine_simultaneous(frames, grad_params(n, 2, h, rng),
                                          PenaltyConfig::uniform(h, 1.0));
    shapes_ok = shapes_ok && sim.annotations.shape() == Shape{k * t, h} &&
                sim.embedding.shape() == Shape{h, n};
    for (std::size_t i = 0; i < k; ++i) {
      const auto e = self_atten(frames[i], grad_params(n, 2, h, rng), PenaltyConfig::uniform(h, 1.0));
      shapes_ok = shapes_ok && e.annotations.shape() == Shape{t, h};
      outs.push_back(e.embedding);
    }
    const auto c1 = combine_consec1(outs, grad_params(h * n, 2, 1, rng),
                                    PenaltyConfig::uniform(1, 1.0 / static_cast<double>(k)));
    shapes_ok = shapes_ok && c1.annotations.shape() == Shape{k, 1} &&
                c1.embedding.shape() == Shape{1, h * n};
    const auto c2 = combine_consec2(outs, grad_params(n, 2, h2, rng), PenaltyConfig::uniform(h2, 1.0));
    shapes_ok = shapes_ok && c2.annotations.shape() == Shape{k * h, h2} &&
                c2.embedding.shape() == Shape{h2, n};
    const Tensor cf = combine_consec_fc(outs, random_tensor({k * h * n, 5}, rng),
                                        random_tensor({1, 5}, rng));
    shapes_ok = shapes_ok && cf.shape() == Shape{1, 5};
    const Tensor bn = bottleneck(c2.embedding, random_tensor({h2 * n, 4}, rng),
                                 random_tensor({1, 4}, rng));
    shapes_ok = shapes_ok && bn.shape() == Shape{1, 4};
  }
  return {consec1_ok && simultaneous_ok && shapes_ok,
          std::string("consec1 k=1 ") + (consec1_ok ? "bit-identical" : "DIFFERS") +
              ", simultaneous k=1 " + (simultaneous_ok ? "bit-identical" : "DIFFERS") +
              ", shape contracts " + (shapes_ok ? "hold" : "VIOLATED") + " over 50 draws"};
}

double label_accuracy(const std::vector<int>& truth, const std::vector<int>& labels) {
  const int rows = *std::max_element(labels.begin(), labels.end()) + 1;
  const int cols = *std::max_element(truth.begin(), truth.end()) + 1;
  std::vector<std::vector<double>> gain(static_cast<std::size_t>(rows),
                                        std::vector<double>(static_cast<std::size_t>(cols), 0.0));
  for (std::size_t i = 0; i < truth.size(); ++i) {
    gain[static_cast<std::size_t>(labels[i])][static_cast<std::size_t>(truth[i])] += 1.0;
  }
  const std::vector<int> assign = solve_assignment(gain);
  double correct = 0.0;
  for (int r = 0; r < rows; ++r) {
    if (assign[static_cast<std::size_t>(r)] >= 0) {
      correct += gain[static_cast<std::size_t>(r)][static_cast<std::size_t>(assign[static_cast<std::size_t>(r)])];
    }
  }
  return correct / static_cast<double>(truth.size());
}

std::vector<Eigen::VectorXd> separated_means(std::size_t count, std::size_t dim,
                                             double min_angle_deg, Rng& rng) {
  std::normal_distribution<double> n;
  const double max_cos = std::cos(min_angle_deg * std::numbers::pi / 180.0);
  std::vector<Eigen::VectorXd> means;
  while (means.size() < count) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(dim));
    for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = n(rng);
    v.normalize();
    bool ok = true;
    for (const auto& m : means) ok = ok && m.dot(v) <= max_cos;
    if (ok) means.push_back(v);
  }
  return means;
}

double max_residual(const Eigen::MatrixXd& l) {
  const Spectrum s = symmetric_eigen(l);
  double worst = 0.0;
  for (Eigen::Index i = 0; i < s.values.size(); ++i) {
    worst = std::max(worst, (l * s.vectors.col(i) - s.values(i) * s.vectors.col(i)).norm());
  }
  return worst;
}

Outcome criterion_clustering() {
  // Exact two-block affinity, both through estimate_k and through embeddings
  // whose cosine affinity is that block matrix.
  Eigen::MatrixXd block = Eigen::MatrixXd::Zero(10, 10);
  block.topLeftCorner(4, 4).setOnes();
  block.bottomRightCorner(6, 6).setOnes();
  const int block_k = estimate_k(block, 10);
  Eigen::MatrixXd antipodal = Eigen::MatrixXd::Zero(10, 3);
  std::vector<int> block_truth;
  for (int i = 0; i < 10; ++i) {
    antipodal(i, 0) = i < 4 ? 1.0 : -1.0;
    block_truth.push_back(i < 4 ? 0 : 1);
  }
  const ClusterResult block_result = cluster(antipodal, {});
  const bool block_ok = block_k == 2 && block_result.k == 2 &&
                        label_accuracy(block_truth, block_result.labels) == 1.0;

  constexpr int kSeeds = 100;
  constexpr std::size_t kSpeakers = 4, kPerSpeaker = 30, kDim = 16;
  int k_hits = 0;
  double accuracy_sum = 0.0, worst_residual = max_residual(normalized_laplacian(block));
  for (int seed = 1; seed <= kSeeds; ++seed) {
    Rng rng(static_cast<std::uint64_t>(seed));
    const auto means = separated_means(kSpeakers, kDim, 60.0, rng);
    std::normal_distribution<double> noise(0.0, 0.05);
    Eigen::MatrixXd x(static_cast<Eigen::Index>(kSpeakers * kPerSpeaker), static_cast<Eigen::Index>(kDim));
    std::vector<int> truth;
    for (std::size_t s = 0; s < kSpeakers; ++s) {
      for (std::size_t j = 0; j < kPerSpeaker; ++j) {
        const auto row = static_cast<Eigen::Index>(truth.size());
        for (Eigen::Index d = 0; d < x.cols(); ++d) x(row, d) = means[s](d) + noise(rng);
        truth.push_back(static_cast<int>(s));
      }
    }
    ClusterOptions opts;
    opts.seed = static_cast<std::uint64_t>(seed);
    // Each speaker owns a quarter of every row, so the other three quarters
    // are the entries the threshold should suppress.
    opts.threshold_p = 0.75;
    const ClusterResult r = cluster(x, opts);
    k_hits += r.k == static_cast<int>(kSpeakers);
    accuracy_sum += label_accuracy(truth, r.labels);
    worst_residual = std::max(
        worst_residual,
        max_residual(normalized_laplacian(refine_affinity(cosine_affinity(x), opts.threshold_p))));
  }
  const double accuracy = accuracy_sum / kSeeds;
  const bool pass = block_ok && k_hits >= 95 && accuracy >= 0.98 && worst_residual <= 1e-8;
  return {pass, std::string("two-block k=") + std::to_string(block_result.k) +
                    (block_ok ? " with perfect labels" : " FAILED") + ", 4 speakers: k=4 in " +
                    std::to_string(k_hits) + "/100 seeds, mean accuracy " +
                    fixed(100.0 * accuracy, 2) + "%, max eigen residual " + sci(worst_residual)};
}

SegmentList random_timeline(Rng& rng, int speakers, const std::string& prefix, int length_cs) {
  std::uniform_int_distribution<int> dur(10, 300), who(0, speakers - 1);
  SegmentList out;
  int t = 0;
  while (t < length_cs) {
    const int end = std::min(length_cs, t + dur(rng));
    out.push_back({"r", t / 100.0, end / 100.0, prefix + std::to_string(who(rng))});
    t = end;
  }
  return out;
}

// Independent oracle on a 10 ms grid: every hyp->ref injection is tried.
double brute_force_ser(const SegmentList& ref, const SegmentList& hyp, double collar) {
  std::vector<std::string> rv, hv;
  for (const auto& s : ref) {
    if (std::find(rv.begin(), rv.end(), s.speaker) == rv.end()) rv.push_back(s.speaker);
  }
  for (const auto& s : hyp) {
    if (std::find(hv.begin(), hv.end(), s.speaker) == hv.end()) hv.push_back(s.speaker);
  }
  double end = 0.0;
  for (const auto& s : ref) end = std::max(end, s.end);
  const int steps = static_cast<int>(std::lround(end * 100));
  auto label_at = [](const SegmentList& l, const std::vector<std::string>& names, double t) {
    for (const auto& s : l) {
      if (t >= s.start && t < s.end) {
        return static_cast<int>(std::find(names.begin(), names.end(), s.speaker) - names.begin());
      }
    }
    return -1;
  };
  std::vector<int> rlab, hlab;
  for (int i = 0; i < steps; ++i) {
    const double t = (i + 0.5) / 100.0;
    bool near = false;
    for (const auto& s : ref) near = near || std::abs(t - s.start) < collar || std::abs(t - s.end) < collar;
    const int r = label_at(ref, rv, t);
    if (r < 0 || near) continue;
    rlab.push_back(r);
    hlab.push_back(label_at(hyp, hv, t));
  }
  // Count (hyp, ref) co-occurrences once, then search injections.
  std::vector<std::vector<long>> overlap(hv.size(), std::vector<long>(rv.size(), 0));
  for (std::size_t i = 0; i < rlab.size(); ++i) {
    if (hlab[i] >= 0) ++overlap[static_cast<std::size_t>(hlab[i])][static_cast<std::size_t>(rlab[i])];
  }
  std::vector<int> perm(std::max(rv.size(), hv.size()));
  std::iota(perm.begin(), perm.end(), 0);
  long best = 0;
  do {
    long correct = 0;
    for (std::size_t h = 0; h < hv.size(); ++h) {
      if (static_cast<std::size_t>(perm[h]) < rv.size()) correct += overlap[h][static_cast<std::size_t>(perm[h])];
    }
    best = std::max(best, correct);
  } while (std::next_permutation(perm.begin(), perm.end()));
  const auto total = static_cast<double>(rlab.size());
  return total > 0 ? 100.0 * (total - static_cast<double>(best)) / total : 0.0;
}

Outcome criterion_scoring() {
  Rng rng(6);
  bool self_zero = true;
  double worst_mapping_gap = 0.0;
  std::uniform_int_distribution<int> spk(1, 6);
  for (int trial = 0; trial < 200; ++trial) {
    const SegmentList ref = random_timeline(rng, spk(rng), "R", 3000);
    const SegmentList hyp = random_timeline(rng, spk(rng), "H", 3000);
    self_zero = self_zero && ser(ref, ref).ser_percent == 0.0;
    worst_mapping_gap =
        std::max(worst_mapping_gap, std::abs(ser(ref, hyp).ser_percent - brute_force_ser(ref, hyp, 0.25)));
  }
  const SerReport hand =
      ser({{"r", 0, 10, "A"}}, {{"r", 0, 6, "X"}, {"r", 6, 10, "Y"}}, 0.25);
  const double hand_err = std::abs(hand.ser_percent - 39.47);

  bool round_trip = true;
  std::uniform_int_distribution<int> ms(0, 3600000), len(1, 30000), who(0, 9);
  for (int trial = 0; trial < 100; ++trial) {
    SegmentList s;
    for (int i = 0; i < 25; ++i) {
      const int a = ms(rng);
      s.push_back({"rec" + std::to_string(i % 4), a / 1000.0, (a + len(rng)) / 1000.0,
                   "spk" + std::to_string(who(rng))});
    }
    std::stringstream first;
    write_rttm(first, s);
    const SegmentList back = read_rttm(first);
    std::stringstream second;
    write_rttm(second, back);
    round_trip = round_trip && first.str() == second.str() && back.size() == s.size();
    for (std::size_t i = 0; round_trip && i < s.size(); ++i) {
      round_trip = back[i].recording == s[i].recording && back[i].speaker == s[i].speaker &&
                   std::lround(back[i].start * 1000) == std::lround(s[i].start * 1000) &&
                   std::lround(back[i].end * 1000) == std::lround(s[i].end * 1000);
    }
  }
  const bool pass = self_zero && worst_mapping_gap <= 1e-9 && hand_err <= 0.01 && round_trip;
  return {pass, std::string("ser(ref,ref)=0 ") + (self_zero ? "holds" : "FAILS") +
                    ", Hungarian vs brute force max gap " + sci(worst_mapping_gap) +
                    " on 200 cases, hand case " + fixed(hand.ser_percent, 4) +
                    "%, RTTM round-trip " + (round_trip ? "exact" : "INEXACT")};
}

struct EndToEnd {
  std::vector<SystemResult> results;
  std::string report;
  std::size_t train_speakers = 0;
  std::size_t unseen_eval_speakers = 0;
  std::set<std::string> systems;
  double seconds = 0.0;
};

EndToEnd run_end_to_end(const ExperimentConfig& cfg, const fs::path& out, int jobs) {
  const auto start = Clock::now();
  EndToEnd e2e;
  const Corpus corpus = generate_corpus(cfg.synth);
  e2e.train_speakers = corpus.train_speakers.size();
  for (std::size_t s : corpus.eval_speakers) {
    const bool seen = std::find(corpus.train_speakers.begin(), corpus.train_speakers.end(), s) !=
                      corpus.train_speakers.end();
    e2e.unseen_eval_speakers += seen ? 0 : 1;
  }
  e2e.systems.insert(cfg.systems.begin(), cfg.systems.end());
  auto log = [](const std::string& line) { std::cerr << "  [e2e] " << line << '\n'; };
  for (const std::string& name : cfg.systems) {
    const SystemSpec spec = SystemSpec::parse(name);
    std::vector<EpochStats> trace;
    auto model = train_system(corpus, spec, cfg, &trace, log);
    const SystemResult r = evaluate_system(*model, name, corpus, cfg, jobs);
    log(name + ": dev " + fixed(r.dev_ser.value_or(NAN), 2) + "%, eval " +
        fixed(r.eval_ser.value_or(NAN), 2) + "%, p=" + fixed(r.threshold, 2));
    if (!out.empty()) {
      const fs::path dir = out / system_dir_name(name);
      fs::create_directories(dir);
      write_loss_csv(dir / "loss.csv", trace);
      std::ofstream(dir / "result.json") << r.to_json().dump(2) << '\n';
    }
    e2e.results.push_back(r);
  }
  e2e.report = format_report(e2e.results);
  if (!out.empty()) {
    std::ofstream(out / "report.txt") << e2e.report;
    std::ofstream(out / "report.json") << report_json(e2e.results).dump(2) << '\n';
  }
  e2e.seconds = seconds_since(start);
  return e2e;
}

Outcome judge_end_to_end(const EndToEnd& e2e) {
  std::optional<double> cvec_ser;
  double worst_dvec = 0.0, worst = 0.0;
  bool all_scored = true;
  for (const SystemResult& r : e2e.results) {
    if (!r.eval_ser) {
      all_scored = false;
      continue;
    }
    worst = std::max(worst, *r.eval_ser);
    if (r.system.rfind("cvector:", 0) == 0) {
      cvec_ser = *r.eval_ser;
    } else {
      worst_dvec = std::max(worst_dvec, *r.eval_ser);
    }
  }
  const bool setup_ok = e2e.train_speakers == 20 && e2e.unseen_eval_speakers == 4 &&
                        e2e.systems == std::set<std::string>{"tdnn", "hornn", "cvector:consec2"};
  const bool pass = setup_ok && all_scored && cvec_ser && worst <= 10.0 &&
                    *cvec_ser <= worst_dvec + 1.0 && e2e.seconds < 1800.0;
  std::string detail = std::to_string(e2e.train_speakers) + " train / " +
                       std::to_string(e2e.unseen_eval_speakers) + " unseen eval speakers; ";
  for (const SystemResult& r : e2e.results) {
    detail += r.system + " " + (r.eval_ser ? fixed(*r.eval_ser, 2) + "%" : "-") + ", ";
  }
  detail += "c-vector bound " + fixed(worst_dvec + 1.0, 2) + "%, " + fixed(e2e.seconds, 1) + " s";
  return {pass, detail};
}

Outcome judge_determinism(const EndToEnd& first, const EndToEnd& second) {
  bool same = first.results.size() == second.results.size() && first.report == second.report;
  for (std::size_t i = 0; same && i < first.results.size(); ++i) {
    same = first.results[i].eval_ser == second.results[i].eval_ser &&
           first.results[i].dev_ser == second.results[i].dev_ser &&
           first.results[i].threshold == second.results[i].threshold;
  }
  return {same, same ? "repeat run reproduced every SER bit-for-bit"
                     : "repeat run DIFFERS from the first run"};
}

struct Criterion {
  int id;
  const char* name;
};

constexpr Criterion kCriteria[] = {
    {1, "gradient suite"},       {2, "penalty identities"},      {3, "penalty behaviour"},
    {4, "combination degeneracy"}, {5, "clustering suite"},      {6, "scoring suite"},
    {7, "end-to-end synthetic run"}, {8, "determinism"},
};

void print(const Criterion& c, const Outcome& o) {
  std::printf("criterion %d %-26s %s  %s\n", c.id, c.name, o.pass ? "PASS" : "FAIL",
              o.detail.c_str());
  std::fflush(stdout);
}

int run(int argc, char** argv) {
  CLI::App app{"cvec acceptance suite"};
  std::vector<int> only;
  std::string config_path, out_dir;
  int jobs = 1;
  app.add_option("--only", only, "criteria to run (default: all)")->delimiter(',');
  app.add_option("--config", config_path, "experiment config for the end-to-end run");
  app.add_option("--out", out_dir, "directory for end-to-end artifacts");
  app.add_option("--jobs", jobs, "parallel recordings during extraction");
  CLI11_PARSE(app, argc, argv);

  auto wanted = [&](int id) {
    return only.empty() || std::find(only.begin(), only.end(), id) != only.end();
  };
  const ExperimentConfig e2e_cfg =
      config_path.empty() ? ExperimentConfig{} : ExperimentConfig::load(config_path);
  const fs::path out = out_dir;
  if (!out.empty()) fs::create_directories(out);

  const std::function<Outcome()> simple[] = {
      criterion_gradients,           criterion_penalty_identities, criterion_penalty_behaviour,
      criterion_combiner_degeneracy, criterion_clustering,          criterion_scoring,
  };
  int failures = 0;
  for (int id = 1; id <= 6; ++id) {
    if (!wanted(id)) continue;
    Outcome o;
    try {
      o = simple[id - 1]();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    print(kCriteria[id - 1], o);
    failures += o.pass ? 0 : 1;
  }

  if (wanted(7) || wanted(8)) {
    std::optional<EndToEnd> first;
    try {
      first = run_end_to_end(e2e_cfg, out, jobs);
      std::printf("\n%s\n", first->report.c_str());
      if (wanted(7)) {
        const Outcome o = judge_end_to_end(*first);
        print(kCriteria[6], o);
        failures += o.pass ? 0 : 1;
      }
    } catch (const std::exception& e) {
      print(kCriteria[6], {false, std::string("exception: ") + e.what()});
      ++failures;
    }
    if (wanted(8)) {
      Outcome o;
      try {
        o = first ? judge_determinism(*first, run_end_to_end(e2e_cfg, {}, jobs))
                  : Outcome{false, "end-to-end run did not complete"};
      } catch (const std::exception& e) {
        o = {false, std::string("exception: ") + e.what()};
      }
      print(kCriteria[7], o);
      failures += o.pass ? 0 : 1;
    }
  }
  return failures == 0 ? 0 : 1;
}

}  // namespace
}  // namespace cvec

int main(int argc, char** argv) { return cvec::run(argc, argv); }
