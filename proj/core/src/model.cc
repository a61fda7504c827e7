// core/src/model.cc
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

#include "cvec/model.h"

#include <array>
#include <cstdint>
#include <fstream>
#include <stdexcept>

#include "cvec/fmat.h"
#include "cvec/ops.h"

namespace cvec {

using nlohmann::json;

SystemSpec SystemSpec::parse(const std::string& name) {
  if (name == "tdnn") return {SystemKind::kTdnn, Topology::kConsec2};
  if (name == "hornn") return {SystemKind::kHornn, Topology::kConsec2};
  const std::string prefix = "cvector:";
  if (name.rfind(prefix, 0) == 0) {
    return {SystemKind::kCVector, parse_topology(name.substr(prefix.size()))};
  }
  throw std::invalid_argument("unknown system '" + name +
                              "' (expected tdnn, hornn or cvector:<topology>)");
}

std::string SystemSpec::name() const {
  switch (kind) {
    case SystemKind::kTdnn:
      return "tdnn";
    case SystemKind::kHornn:
      return "hornn";
    case SystemKind::kCVector:
      return "cvector:" + topology_name(topology);
  }
  return "unknown";
}

ModelConfig ModelConfig::make(SystemSpec system, std::size_t feature_dim,
                              const Sizes& sizes, std::size_t num_classes,
                              std::uint64_t seed) {
  ModelConfig cfg;
  cfg.system = system;
  cfg.feature_dim = feature_dim;
  cfg.attention_dim = sizes.attention_dim;
  cfg.attention_hidden = sizes.attention_hidden
                             ? sizes.attention_hidden
                             : std::max<std::size_t>(1, sizes.attention_dim / 2);
  cfg.heads = sizes.heads;
  cfg.tdnn = TdnnConfig::standard(feature_dim, sizes.tdnn_hidden,
                                  sizes.attention_dim);
  cfg.hornn.input_dim = feature_dim;
  cfg.hornn.num_layers = sizes.hornn_layers;
  cfg.hornn.state_dim = sizes.hornn_state;
  cfg.hornn.projection_dim = sizes.attention_dim;
  cfg.hornn.recurrence_offsets = sizes.hornn_offsets;
  cfg.stage1 = PenaltyConfig::default_pattern(sizes.heads, sizes.mu,
                                              sizes.smooth_lambda);
  cfg.combiner = CombinerConfig::defaults(system.topology, 2, sizes.heads,
                                          sizes.attention_dim);
  cfg.combiner.bottleneck_dim = sizes.bottleneck_dim;
  if (system.kind == SystemKind::kCVector) {
    if (system.topology == Topology::kConsec1) {
      cfg.stage2 = PenaltyConfig::uniform(
          cfg.combiner.stage2_heads,
          1.0 / static_cast<double>(cfg.combiner.num_systems), sizes.mu);
    } else if (system.topology == Topology::kConsec2) {
      cfg.stage2 = PenaltyConfig::default_pattern(
          cfg.combiner.stage2_heads, sizes.mu, sizes.smooth_lambda);
    }
  }
  cfg.bottleneck_dim = sizes.bottleneck_dim;
  cfg.num_classes = num_classes;
  cfg.seed = seed;
  return cfg;
}

void ModelConfig::validate() const {
  if (feature_dim == 0 || attention_dim == 0 || attention_hidden == 0 ||
      heads == 0 || bottleneck_dim == 0) {
    throw std::invalid_argument("model: dimensions must be positive");
  }
  if (num_classes < 2) {
    throw std::invalid_argument("model: need at least 2 speaker classes");
  }
  if (tdnn.input_dim != feature_dim || hornn.input_dim != feature_dim) {
    throw std::invalid_argument("model: encoder input dims must equal feature_dim");
  }
  if (tdnn.projection_dim() != attention_dim ||
      hornn.projection_dim != attention_dim) {
    throw std::invalid_argument(
        "model: both encoders must emit the attention dimension");
  }
  tdnn.validate();
  hornn.validate();
  if (system.kind == SystemKind::kCVector) {
    combiner.validate();
    if (combiner.num_systems != 2) {
      throw std::invalid_argument("model: c-vector systems combine tdnn + hornn");
    }
    if (combiner.topology == Topology::kSimultaneous) {
      stage1.validate(combiner.heads_per_system.front());
    } else {
      for (std::size_t h : combiner.heads_per_system) stage1.validate(h);
    }
    if (combiner.topology == Topology::kConsec1 ||
        combiner.topology == Topology::kConsec2) {
      stage2.validate(combiner.stage2_heads);
    }
    if (combiner.bottleneck_dim != bottleneck_dim) {
      throw std::invalid_argument("model: bottleneck_dim disagrees with combiner");
    }
  } else {
    stage1.validate(heads);
  }
}

namespace {

json penalty_json(const PenaltyConfig& p) {
  return {{"mu", p.mu}, {"lambdas", p.lambdas}};
}

PenaltyConfig penalty_from(const json& j) {
  PenaltyConfig p;
  p.mu = j.at("mu").get<double>();
  p.lambdas = j.at("lambdas").get<std::vector<double>>();
  return p;
}

}  // namespace

json ModelConfig::to_json() const {
  json layers = json::array();
  for (const auto& l : tdnn.layers) {
    layers.push_back({{"offsets", l.offsets}, {"out_dim", l.out_dim}});
  }
  return {
      {"system", system.name()},
      {"feature_dim", feature_dim},
      {"attention_dim", attention_dim},
      {"attention_hidden", attention_hidden},
      {"heads", heads},
      {"tdnn", {{"input_dim", tdnn.input_dim}, {"layers", layers}}},
      {"hornn",
       {{"input_dim", hornn.input_dim},
        {"num_layers", hornn.num_layers},
        {"state_dim", hornn.state_dim},
        {"projection_dim", hornn.projection_dim},
        {"recurrence_offsets", hornn.recurrence_offsets}}},
      {"stage1", penalty_json(stage1)},
      {"combiner",
       {{"topology", topology_name(combiner.topology)},
        {"num_systems", combiner.num_systems},
        {"heads_per_system", combiner.heads_per_system},
        {"stage2_heads", combiner.stage2_heads},
        {"fc_transform", combiner.fc_transform},
        {"fc_dim", combiner.fc_dim},
        {"bottleneck_dim", combiner.bottleneck_dim}}},
      {"stage2", penalty_json(stage2)},
      {"bottleneck_dim", bottleneck_dim},
      {"num_classes", num_classes},
      {"seed", seed},
  };
}

ModelConfig ModelConfig::from_json(const json& j) {
  ModelConfig cfg;
  cfg.system = SystemSpec::parse(j.at("system").get<std::string>());
  cfg.feature_dim = j.at("feature_dim").get<std::size_t>();
  cfg.attention_dim = j.at("attention_dim").get<std::size_t>();
  cfg.attention_hidden = j.at("attention_hidden").get<std::size_t>();
  cfg.heads = j.at("heads").get<std::size_t>();
  const json& t = j.at("tdnn");
  cfg.tdnn.input_dim = t.at("input_dim").get<std::size_t>();
  for (const json& l : t.at("layers")) {
    cfg.tdnn.layers.push_back({l.at("offsets").get<std::vector<int>>(),
                               l.at("out_dim").get<std::size_t>()});
  }
  const json& h = j.at("hornn");
  cfg.hornn.input_dim = h.at("input_dim").get<std::size_t>();
  cfg.hornn.num_layers = h.at("num_layers").get<std::size_t>();
  cfg.hornn.state_dim = h.at("state_dim").get<std::size_t>();
  cfg.hornn.projection_dim = h.at("projection_dim").get<std::size_t>();
  cfg.hornn.recurrence_offsets =
      h.at("recurrence_offsets").get<std::vector<int>>();
  cfg.stage1 = penalty_from(j.at("stage1"));
  const json& c = j.at("combiner");
  cfg.combiner.topology = parse_topology(c.at("topology").get<std::string>());
  cfg.combiner.num_systems = c.at("num_systems").get<std::size_t>();
  cfg.combiner.heads_per_system =
      c.at("heads_per_system").get<std::vector<std::size_t>>();
  cfg.combiner.stage2_heads = c.at("stage2_heads").get<std::size_t>();
  cfg.combiner.fc_transform = c.at("fc_transform").get<bool>();
  cfg.combiner.fc_dim = c.at("fc_dim").get<std::size_t>();
  cfg.combiner.bottleneck_dim = c.at("bottleneck_dim").get<std::size_t>();
  cfg.stage2 = penalty_from(j.at("stage2"));
  cfg.bottleneck_dim = j.at("bottleneck_dim").get<std::size_t>();
  cfg.num_classes = j.at("num_classes").get<std::size_t>();
  cfg.seed = j.at("seed").get<std::uint64_t>();
  return cfg;
}

EmbeddingModel::EmbeddingModel(ModelConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.validate();
  Rng rng(cfg_.seed);
  const std::size_t n = cfg_.attention_dim;
  const bool combined = cfg_.system.kind == SystemKind::kCVector;
  if (cfg_.system.kind != SystemKind::kHornn) {
    encoders_.push_back(std::make_unique<TdnnEncoder>(cfg_.tdnn, rng));
  }
  if (cfg_.system.kind != SystemKind::kTdnn) {
    encoders_.push_back(std::make_unique<HornnEncoder>(cfg_.hornn, rng));
  }
  for (const auto& enc : encoders_) params_.extend(enc->kind() + ".", enc->params());

  std::size_t combined_dim = cfg_.heads * n;
  if (!combined) {
    AttentionParams::init(n, cfg_.attention_hidden, cfg_.heads, rng)
        .register_in(params_, encoders_.front()->kind() + ".att.");
  } else {
    const CombinerConfig& cc = cfg_.combiner;
    if (cc.topology == Topology::kSimultaneous) {
      AttentionParams::init(n, cfg_.attention_hidden,
                            cc.heads_per_system.front(), rng)
          .register_in(params_, "att.");
    } else {
      for (std::size_t i = 0; i < encoders_.size(); ++i) {
        const std::string sys = encoders_[i]->kind();
        AttentionParams::init(n, cfg_.attention_hidden, cc.heads_per_system[i],
                              rng)
            .register_in(params_, sys + ".att.");
        if (cc.fc_transform) {
          params_.add("fc." + sys + ".weight", glorot_uniform(n, cc.fc_dim, rng));
        }
      }
      const std::size_t row = cc.fc_transform ? cc.fc_dim : n;
      if (cc.topology == Topology::kConsec1) {
        const std::size_t flat = cc.heads_per_system.front() * row;
        AttentionParams::init(flat, std::max<std::size_t>(1, flat / 2),
                              cc.stage2_heads, rng)
            .register_in(params_, "stage2.");
      } else if (cc.topology == Topology::kConsec2) {
        AttentionParams::init(row, std::max<std::size_t>(1, row / 2),
                              cc.stage2_heads, rng)
            .register_in(params_, "stage2.");
      } else {
        std::size_t width = 0;
        for (std::size_t h : cc.heads_per_system) width += h * row;
        params_.add("fusion.weight", glorot_uniform(width, cc.fc_dim, rng));
        params_.add("fusion.bias", Tensor::zeros({1, cc.fc_dim}));
      }
    }
    combined_dim = cc.combined_dim(n);
  }
  params_.add("bottleneck.weight",
              glorot_uniform(combined_dim, cfg_.bottleneck_dim, rng));
  params_.add("bottleneck.bias", Tensor::zeros({1, cfg_.bottleneck_dim}));
  params_.add("classifier.weight",
              glorot_uniform(cfg_.bottleneck_dim, cfg_.num_classes, rng));
}

std::vector<Encoder*> EmbeddingModel::encoders() {
  std::vector<Encoder*> out;
  for (auto& e : encoders_) out.push_back(e.get());
  return out;
}

std::size_t EmbeddingModel::embedding_param_count() const {
  return params_.scalar_count() - params_.get("classifier.weight").numel();
}

std::vector<Tensor> EmbeddingModel::stage_one(
    const Tensor& window, std::vector<Tensor>& penalties,
    std::vector<Tensor>& annotations) const {
  std::vector<Tensor> outputs;
  for (const auto& enc : encoders_) {
    const Tensor frames = enc->forward(window);
    auto att = AttentionParams::from(params_, enc->kind() + ".att.");
    SelfAttentionOutput sa = self_atten(frames, att, cfg_.stage1);
    penalties.push_back(sa.penalty);
    annotations.push_back(sa.annotations);
    outputs.push_back(sa.embedding);
  }
  return outputs;
}

ModelOutput EmbeddingModel::forward(const Tensor& window) const {
  ModelOutput out;
  Tensor combined;
  if (cfg_.system.kind != SystemKind::kCVector) {
    combined = stage_one(window, out.penalties, out.annotations).front();
  } else {
    const CombinerConfig& cc = cfg_.combiner;
    if (cc.topology == Topology::kSimultaneous) {
      std::vector<Tensor> frames;
      for (const auto& enc : encoders_) frames.push_back(enc->forward(window));
      SelfAttentionOutput sa = combine_simultaneous(
          frames, AttentionParams::from(params_, "att."), cfg_.stage1);
      out.penalties.push_back(sa.penalty);
      out.annotations.push_back(sa.annotations);
      combined = sa.embedding;
    } else {
      std::vector<Tensor> systems =
          stage_one(window, out.penalties, out.annotations);
      if (cc.fc_transform) {
        for (std::size_t i = 0; i < systems.size(); ++i) {
          systems[i] = fc_transform(
              systems[i],
              params_.get("fc." + encoders_[i]->kind() + ".weight"));
        }
      }
      if (cc.topology == Topology::kConsecFc) {
        combined = combine_consec_fc(systems, params_.get("fusion.weight"),
                                     params_.get("fusion.bias"));
      } else {
        const auto att = AttentionParams::from(params_, "stage2.");
        SelfAttentionOutput sa =
            cc.topology == Topology::kConsec1
                ? combine_consec1(systems, att, cfg_.stage2)
                : combine_consec2(systems, att, cfg_.stage2);
        out.penalties.push_back(sa.penalty);
        out.annotations.push_back(sa.annotations);
        combined = sa.embedding;
      }
    }
  }
  out.embedding = bottleneck(combined, params_.get("bottleneck.weight"),
                             params_.get("bottleneck.bias"));
  return out;
}

Tensor EmbeddingModel::logits(const Tensor& embedding) const {
  return matmul(embedding, normalize_columns(params_.get("classifier.weight")));
}

namespace {

constexpr std::array<char, 4> kCheckpointMagic = {'C', 'V', 'C', 'K'};
constexpr std::uint32_t kCheckpointVersion = 1;

void put_u32(std::ostream& os, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) os.put(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint32_t get_u32(std::istream& is) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) {
    const int c = is.get();
    if (c == std::char_traits<char>::eof()) {
      throw FormatError("checkpoint: truncated header");
    }
    v |= static_cast<std::uint32_t>(static_cast<unsigned char>(c)) << (8 * i);
  }
  return v;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path,
                     const EmbeddingModel& model, const json& extra) {
  json header;
  header["config"] = model.config().to_json();
  header["extra"] = extra;
  json names = json::array();
  for (const auto& [name, t] : model.params().entries()) names.push_back(name);
  header["tensors"] = names;
  const std::string text = header.dump();

  std::ofstream os(path, std::ios::binary);
  if (!os) throw FormatError("cannot open " + path.string() + " for writing");
  os.write(kCheckpointMagic.data(), kCheckpointMagic.size());
  put_u32(os, kCheckpointVersion);
  put_u32(os, static_cast<std::uint32_t>(text.size()));
  os.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (const auto& entry : model.params().entries()) write_fmat(os, entry.second);
  if (!os) throw FormatError("checkpoint: write failed for " + path.string());
}

std::unique_ptr<EmbeddingModel> load_checkpoint(
    const std::filesystem::path& path, json* extra) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("cannot open checkpoint " + path.string());
  std::array<char, 4> magic{};
  if (!is.read(magic.data(), magic.size()) || magic != kCheckpointMagic) {
    throw FormatError(path.string() + " is not a cvec checkpoint");
  }
  if (get_u32(is) != kCheckpointVersion) {
    throw FormatError("checkpoint: unsupported version");
  }
  std::string text(get_u32(is), '\0');
  if (!is.read(text.data(), static_cast<std::streamsize>(text.size()))) {
    throw FormatError("checkpoint: truncated header");
  }
  const json header = json::parse(text);
  auto model = std::make_unique<EmbeddingModel>(
      ModelConfig::from_json(header.at("config")));
  ParameterSet loaded;
  for (const auto& name : header.at("tensors")) {
    loaded.add(name.get<std::string>(), read_fmat(is));
  }
  if (loaded.size() != model->params().size()) {
    throw FormatError("checkpoint: tensor count does not match its config");
  }
  model->params().assign_from(loaded);
  if (extra) *extra = header.value("extra", json::object());
  return model;
}

}  // namespace cvec
