// tests/test_encoders.cc
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
#include <cmath>

#include <gtest/gtest.h>

#include "cvec/encoders.h"
#include "cvec/gradcheck.h"
#include "test_util.h"

namespace cvec {
namespace {

using testing::lift_biases;
using testing::random_tensor;
using testing::scalarize;

void fill(Tensor t, double value) {
  for (double& v : t.mutable_data()) v = value;
}

void copy_into(Tensor dst, const Tensor& src) {
  std::copy(src.data().begin(), src.data().end(), dst.mutable_data().begin());
}

TdnnConfig single_layer(std::size_t in, std::vector<int> offsets, std::size_t out) {
  TdnnConfig cfg;
  cfg.input_dim = in;
  cfg.layers = {{std::move(offsets), out}};
  return cfg;
}

TEST(Tdnn, StandardStack) {
  const TdnnConfig cfg = TdnnConfig::standard(40);
  ASSERT_EQ(cfg.layers.size(), 5u);
  EXPECT_EQ(cfg.layers[0].offsets, (std::vector<int>{-2, -1, 0, 1, 2}));
  EXPECT_EQ(cfg.layers[1].offsets, (std::vector<int>{-2, 0, 2}));
  EXPECT_EQ(cfg.layers[2].offsets, (std::vector<int>{-3, 0, 3}));
  EXPECT_EQ(cfg.layers[3].offsets, (std::vector<int>{0}));
  EXPECT_EQ(cfg.projection_dim(), 128u);
  EXPECT_EQ(cfg.receptive_field(), (std::pair<int, int>{-7, 7}));
}

TEST(Tdnn, ZeroContextIsPerFrameAffineRelu) {
  Rng rng(1);
  TdnnEncoder enc(single_layer(3, {0}, 4), rng);
  const Tensor x = random_tensor({5, 3}, rng);
  const Tensor w = enc.params().get("layer1.weight");
  const Tensor b = random_tensor({1, 4}, rng);
  copy_into(enc.params().get("layer1.bias"), b);
  const Tensor y = enc.forward(x);
  for (std::size_t t = 0; t < 5; ++t) {
    for (std::size_t j = 0; j < 4; ++j) {
      double z = b.at(0, j);
      for (std::size_t i = 0; i < 3; ++i) z += x.at(t, i) * w.at(i, j);
      EXPECT_NEAR(y.at(t, j), std::max(0.0, z), 1e-14);
    }
  }
}

TEST(Tdnn, ConstantInputGivesConstantOutput) {
  Rng rng(2);
  TdnnEncoder enc(TdnnConfig::standard(4, 8, 6), rng);
  const Tensor row = random_tensor({1, 4}, rng);
  std::vector<double> d;
  for (int t = 0; t < 20; ++t) d.insert(d.end(), row.data().begin(), row.data().end());
  const Tensor y = enc.forward(Tensor({20, 4}, d));
  for (std::size_t t = 1; t < 20; ++t) EXPECT_EQ(y.row_values(t), y.row_values(0));
}

TEST(Tdnn, SpliceMatchesHandLoop) {
  Rng rng(3);
  TdnnEncoder enc(single_layer(2, {-1, 0, 1}, 3), rng);
  const Tensor x = random_tensor({3, 2}, rng);
  const Tensor w = enc.params().get("layer1.weight");
  const Tensor y = enc.forward(x);
  for (int t = 0; t < 3; ++t) {
    for (std::size_t j = 0; j < 3; ++j) {
      double z = 0.0;
      for (int k = 0; k < 3; ++k) {
        const int src = std::clamp(t + k - 1, 0, 2);
        for (std::size_t i = 0; i < 2; ++i) {
          z += x.at(static_cast<std::size_t>(src), i) * w.at(static_cast<std::size_t>(k) * 2 + i, j);
        }
      }
      EXPECT_NEAR(y.at(static_cast<std::size_t>(t), j), std::max(0.0, z), 1e-14);
    }
  }
}

TEST(Tdnn, LocalityWithinReceptiveField) {
  Rng rng(4);
  TdnnEncoder enc(TdnnConfig::standard(3, 8, 5), rng);
  for (Tensor& b : enc.params().tensors()) {
    if (b.rows() == 1) fill(b, 0.5);  // keep units active
  }
  const Tensor x = random_tensor({40, 3}, rng);
  const Tensor y0 = enc.forward(x);
  Tensor x2 = x.clone();
  x2.mutable_data()[20 * 3] += 1.0;
  const Tensor y1 = enc.forward(x2);
  for (std::size_t t = 0; t < 40; ++t) {
    const bool changed = y0.row_values(t) != y1.row_values(t);
    if (t < 13 || t > 27) {
      EXPECT_FALSE(changed) << t;
    }
  }
  EXPECT_NE(y0.row_values(20), y1.row_values(20));
}

TEST(Tdnn, RejectsEmptyInputAndBadOffsets) {
  Rng rng(5);
  TdnnEncoder enc(single_layer(2, {0}, 2), rng);
  EXPECT_THROW(enc.forward(Tensor()), std::invalid_argument);
  EXPECT_THROW(single_layer(2, {1, 0}, 2).validate(), std::invalid_argument);
  EXPECT_THROW(single_layer(2, {1, 2}, 2).validate(), std::invalid_argument);
  EXPECT_NO_THROW(single_layer(2, {-2, 2}, 2).validate());
}

HornnConfig small_hornn(std::size_t layers = 1) {
  HornnConfig cfg;
  cfg.input_dim = 3;
  cfg.num_layers = layers;
  cfg.state_dim = 4;
  cfg.projection_dim = 2;
  return cfg;
}

TEST(Hornn, NoRecurrenceIsFeedForward) {
  Rng rng(6);
  HornnEncoder enc(small_hornn(), rng);
  fill(enc.params().get("layer1.rec1"), 0.0);
  fill(enc.params().get("layer1.rec4"), 0.0);
  const Tensor x = random_tensor({6, 3}, rng);
  const Tensor y = enc.forward(x);
  const Tensor wx = enc.params().get("layer1.input");
  const Tensor wp = enc.params().get("layer1.proj");
  for (std::size_t t = 0; t < 6; ++t) {
    for (std::size_t o = 0; o < 2; ++o) {
      double out = 0.0;
      for (std::size_t s = 0; s < 4; ++s) {
        double z = 0.0;
        for (std::size_t i = 0; i < 3; ++i) z += x.at(t, i) * wx.at(i, s);
        out += std::max(0.0, z) * wp.at(s, o);
      }
      EXPECT_NEAR(y.at(t, o), out, 1e-14);
    }
  }
}

// Independent plain ReLU RNN: s(t) = relu(x(t) Wx + b + s(t-1) U).
std::vector<std::vector<double>> plain_rnn(const Tensor& x, const Tensor& wx, const Tensor& b,
                                           const Tensor& u) {
  const std::size_t n = wx.cols();
  std::vector<std::vector<double>> s(x.rows(), std::vector<double>(n, 0.0));
  for (std::size_t t = 0; t < x.rows(); ++t) {
    for (std::size_t j = 0; j < n; ++j) {
      double z = b.at(0, j);
      for (std::size_t i = 0; i < x.cols(); ++i) z += x.at(t, i) * wx.at(i, j);
      if (t > 0) {
        for (std::size_t k = 0; k < n; ++k) z += s[t - 1][k] * u.at(k, j);
      }
      s[t][j] = std::max(0.0, z);
    }
  }
  return s;
}

TEST(Hornn, NoLongLagMatchesPlainRnn) {
  Rng rng(7);
  HornnEncoder enc(small_hornn(), rng);
  fill(enc.params().get("layer1.rec4"), 0.0);
  copy_into(enc.params().get("layer1.bias"), random_tensor({1, 4}, rng, 0, 0.5));
  const Tensor x = random_tensor({10, 3}, rng);
  const auto& p = enc.params();
  const auto s = plain_rnn(x, p.get("layer1.input"), p.get("layer1.bias"), p.get("layer1.rec1"));
  const Tensor y = enc.forward(x);
  const Tensor wp = p.get("layer1.proj");
  const Tensor bp = p.get("layer1.proj_bias");
  for (std::size_t t = 0; t < 10; ++t) {
    for (std::size_t o = 0; o < 2; ++o) {
      double out = bp.at(0, o);
      for (std::size_t k = 0; k < 4; ++k) out += s[t][k] * wp.at(k, o);
      EXPECT_NEAR(y.at(t, o), out, 1e-13);
    }
  }
}

TEST(Hornn, ShortSequenceRuns) {
  Rng rng(8);
  HornnEncoder enc(small_hornn(2), rng);
  const Tensor y = enc.forward(random_tensor({3, 3}, rng));
  EXPECT_EQ(y.shape(), (Shape{3, 2}));
}

TEST(Hornn, Causal) {
  Rng rng(9);
  HornnEncoder enc(small_hornn(2), rng);
  const Tensor x = random_tensor({12, 3}, rng);
  const Tensor y0 = enc.forward(x);
  Tensor x2 = x.clone();
  x2.mutable_data()[7 * 3 + 1] += 2.0;
  const Tensor y1 = enc.forward(x2);
  for (std::size_t t = 0; t < 7; ++t) EXPECT_EQ(y0.row_values(t), y1.row_values(t));
}

TEST(Hornn, EmptyInputAndBadOffsets) {
  Rng rng(10);
  HornnEncoder enc(small_hornn(), rng);
  EXPECT_THROW(enc.forward(Tensor()), std::invalid_argument);
  HornnConfig bad = small_hornn();
  bad.recurrence_offsets = {0, 4};
  EXPECT_THROW(bad.validate(), std::invalid_argument);
}

TEST(ParamCount, AffineAndHornn) {
  EXPECT_EQ(param_count(single_layer(7, {0}, 5)), 7u * 5 + 5);
  const std::size_t f = 40;
  EXPECT_EQ(hornn_recurrent_param_count(f, 256, 2), f * 256 + 2 * 256 * 256 + 256);
  HornnConfig full;
  const std::size_t total = param_count(full);
  EXPECT_GT(total, 100000u);
  EXPECT_LT(total, 1000000u);
  Rng rng(11);
  HornnEncoder enc(small_hornn(2), rng);
  EXPECT_EQ(enc.params().scalar_count(), param_count(small_hornn(2)));
  TdnnEncoder tdnn(TdnnConfig::standard(4, 6, 3), rng);
  EXPECT_EQ(tdnn.params().scalar_count(), param_count(TdnnConfig::standard(4, 6, 3)));
}

TEST(Init, GlorotBoundsAndRecurrentGain) {
  Rng rng(12);
  HornnConfig cfg = small_hornn();
  cfg.state_dim = 32;
  HornnEncoder enc(cfg, rng);
  const double in_bound = std::sqrt(6.0 / (3 + 32));
  const double rec_bound = 0.5 * std::sqrt(6.0 / 64);
  for (double v : enc.params().get("layer1.input").data()) EXPECT_LE(std::abs(v), in_bound);
  double max_rec = 0.0;
  for (double v : enc.params().get("layer1.rec1").data()) max_rec = std::max(max_rec, std::abs(v));
  EXPECT_LE(max_rec, rec_bound);
  EXPECT_GT(max_rec, 0.5 * rec_bound);
}

class EncoderGradients : public ::testing::TestWithParam<int> {};

TEST_P(EncoderGradients, TdnnAndHornnWithinTolerance) {
  Rng rng(static_cast<std::uint64_t>(GetParam()));
  TdnnEncoder tdnn(TdnnConfig::standard(3, 5, 4), rng);
  HornnEncoder hornn(small_hornn(2), rng);
  for (Encoder* enc : std::initializer_list<Encoder*>{&tdnn, &hornn}) {
    lift_biases(enc->params().tensors(), rng);
    const Tensor x = random_tensor({8, 3}, rng);
    const Tensor target = random_tensor({8, enc->output_dim()}, rng);
    std::vector<Tensor> params = enc->params().tensors();
    const double err = grad_check([&] { return scalarize(enc->forward(x), target); }, params);
    EXPECT_LE(err, 1e-4) << enc->kind();
    const double err_x = grad_check(
        [&](const Tensor& v) { return scalarize(enc->forward(v), target); }, x);
    EXPECT_LE(err_x, 1e-4) << enc->kind();
  }
}

INSTANTIATE_TEST_SUITE_P(Seeds, EncoderGradients, ::testing::Range(1, 11));

}  // namespace
}  // namespace cvec
