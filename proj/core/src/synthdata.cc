// core/src/synthdata.cc
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

#include "cvec/synthdata.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <numbers>
#include <random>
#include <sstream>
#include <stdexcept>

#include "cvec/fmat.h"
#include "cvec/params.h"

namespace cvec {

using nlohmann::json;

void SynthConfig::validate() const {
  if (num_train_speakers < 2) {
    throw std::invalid_argument("synth: need at least 2 training speakers");
  }
  if (num_eval_speakers < 1 || feature_dim < 2) {
    throw std::invalid_argument("synth: eval speakers and feature_dim >= 2 required");
  }
  if (dev_seen_speakers > num_train_speakers) {
    throw std::invalid_argument("synth: dev_seen_speakers exceeds train speakers");
  }
  if (min_turn_frames == 0 || max_turn_frames < min_turn_frames) {
    throw std::invalid_argument("synth: bad turn length range");
  }
  if (turns_per_recording == 0 || speakers_per_recording == 0) {
    throw std::invalid_argument("synth: recordings need turns and speakers");
  }
  if (!(noise_sigma >= 0.0)) throw std::invalid_argument("synth: sigma must be >= 0");
  if (!(smoothing_rho >= 0.0 && smoothing_rho < 1.0)) {
    throw std::invalid_argument("synth: rho must lie in [0, 1)");
  }
  if (!(min_angle_deg >= 0.0 && min_angle_deg < 180.0)) {
    throw std::invalid_argument("synth: min_angle_deg must lie in [0, 180)");
  }
}

json SynthConfig::to_json() const {
  return {{"num_train_speakers", num_train_speakers},
          {"num_dev_speakers", num_dev_speakers},
          {"dev_seen_speakers", dev_seen_speakers},
          {"num_eval_speakers", num_eval_speakers},
          {"feature_dim", feature_dim},
          {"min_turn_frames", min_turn_frames},
          {"max_turn_frames", max_turn_frames},
          {"turns_per_recording", turns_per_recording},
          {"speakers_per_recording", speakers_per_recording},
          {"train_recordings", train_recordings},
          {"dev_recordings", dev_recordings},
          {"eval_recordings", eval_recordings},
          {"noise_sigma", noise_sigma},
          {"smoothing_rho", smoothing_rho},
          {"min_angle_deg", min_angle_deg},
          {"seed", seed}};
}

SynthConfig SynthConfig::from_json(const json& j) {
  SynthConfig c;
  const json defaults = c.to_json();
  for (const auto& [key, value] : j.items()) {
    if (!defaults.contains(key)) {
      throw std::invalid_argument("synth: unknown key '" + key + "'");
    }
  }
  auto get = [&](const char* key, auto& field) {
    if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
  };
  get("num_train_speakers", c.num_train_speakers);
  get("num_dev_speakers", c.num_dev_speakers);
  get("dev_seen_speakers", c.dev_seen_speakers);
  get("num_eval_speakers", c.num_eval_speakers);
  get("feature_dim", c.feature_dim);
  get("min_turn_frames", c.min_turn_frames);
  get("max_turn_frames", c.max_turn_frames);
  get("turns_per_recording", c.turns_per_recording);
  get("speakers_per_recording", c.speakers_per_recording);
  get("train_recordings", c.train_recordings);
  get("dev_recordings", c.dev_recordings);
  get("eval_recordings", c.eval_recordings);
  get("noise_sigma", c.noise_sigma);
  get("smoothing_rho", c.smoothing_rho);
  get("min_angle_deg", c.min_angle_deg);
  get("seed", c.seed);
  return c;
}

const CorpusSplit& Corpus::split(const std::string& name) const {
  if (name == "train") return train;
  if (name == "dev") return dev;
  if (name == "eval") return eval;
  throw std::invalid_argument("unknown split '" + name + "'");
}

namespace {

constexpr int kMaxRejections = 100000;

std::vector<std::vector<double>> draw_means(std::size_t count, std::size_t dim,
                                            double min_angle_deg, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  const double max_cos = std::cos(min_angle_deg * std::numbers::pi / 180.0);
  std::vector<std::vector<double>> means;
  while (means.size() < count) {
    bool placed = false;
    for (int attempt = 0; attempt < kMaxRejections && !placed; ++attempt) {
      std::vector<double> v(dim);
      double norm = 0.0;
      for (double& x : v) {
        x = normal(rng);
        norm += x * x;
      }
      norm = std::sqrt(norm);
      for (double& x : v) x /= norm;
      placed = std::all_of(means.begin(), means.end(), [&](const auto& m) {
        double dot = 0.0;
        for (std::size_t i = 0; i < dim; ++i) dot += m[i] * v[i];
        return dot <= max_cos;
      });
      if (placed) means.push_back(std::move(v));
    }
    if (!placed) {
      throw std::runtime_error(
          "synth: cannot place " + std::to_string(count) + " speakers in " +
          std::to_string(dim) + " dimensions with min angle " +
          std::to_string(min_angle_deg) + " deg");
    }
  }
  return means;
}

std::string speaker_name(std::size_t i) {
  std::ostringstream os;
  os << "spk" << std::setw(3) << std::setfill('0') << i;
  return os.str();
}

std::string recording_name(const std::string& split, std::size_t i) {
  std::ostringstream os;
  os << split << '_' << std::setw(3) << std::setfill('0') << i;
  return os.str();
}

FeatureSequence make_recording(const std::string& id,
                               const std::vector<std::size_t>& speakers,
                               const Corpus& corpus, Rng& rng) {
  const SynthConfig& cfg = corpus.config;
  const std::size_t dim = cfg.feature_dim;
  std::uniform_int_distribution<std::size_t> turn_len(cfg.min_turn_frames,
                                                      cfg.max_turn_frames);
  std::uniform_int_distribution<std::size_t> pick(0, speakers.size() - 1);
  std::normal_distribution<double> eta(0.0, cfg.noise_sigma > 0.0 ? cfg.noise_sigma : 1.0);
  const double rho = cfg.smoothing_rho;
  const double innov = std::sqrt(1.0 - rho * rho);

  FeatureSequence seq;
  seq.recording_id = id;
  std::vector<double> data;
  std::size_t prev = speakers.size();
  for (std::size_t turn = 0; turn < cfg.turns_per_recording; ++turn) {
    std::size_t slot = pick(rng);
    if (speakers.size() > 1) {
      while (slot == prev) slot = pick(rng);
    }
    prev = slot;
    const std::size_t spk = speakers[slot];
    const auto& mean = corpus.speaker_means[spk];
    const std::size_t len = turn_len(rng);
    std::vector<double> eps(dim, 0.0);
    if (cfg.noise_sigma > 0.0) {
      for (double& e : eps) e = eta(rng);
    }
    for (std::size_t t = 0; t < len; ++t) {
      if (t > 0 && cfg.noise_sigma > 0.0) {
        for (double& e : eps) e = rho * e + innov * eta(rng);
      }
      std::vector<double> x(dim);
      double norm = 0.0;
      for (std::size_t i = 0; i < dim; ++i) {
        x[i] = mean[i] + eps[i];
        norm += x[i] * x[i];
      }
      norm = std::sqrt(norm);
      for (double& v : x) {
        v = norm > 0.0 ? v / norm : v;
        data.push_back(static_cast<double>(static_cast<float>(v)));
      }
      seq.labels.push_back(static_cast<int>(spk));
    }
  }
  seq.features = Tensor({seq.labels.size(), dim}, std::move(data));
  return seq;
}

void fill_split(CorpusSplit& split, const std::string& name,
                std::size_t recordings, std::vector<std::size_t> pool,
                const Corpus& corpus, Rng& rng) {
  const std::size_t per = std::min(corpus.config.speakers_per_recording, pool.size());
  std::shuffle(pool.begin(), pool.end(), rng);
  for (std::size_t r = 0; r < recordings; ++r) {
    // Walk the shuffled pool cyclically so every speaker gets used.
    std::vector<std::size_t> speakers;
    for (std::size_t j = 0; j < per; ++j) {
      speakers.push_back(pool[(r * per + j) % pool.size()]);
    }
    split.recordings.push_back(
        make_recording(recording_name(name, r), speakers, corpus, rng));
    for (Segment& s :
         labels_to_segments(split.recordings.back(), corpus.speaker_names)) {
      split.reference.push_back(std::move(s));
    }
  }
}

}  // namespace

SegmentList labels_to_segments(const FeatureSequence& seq,
                               const std::vector<std::string>& speaker_names) {
  SegmentList out;
  const std::size_t n = seq.labels.size();
  std::size_t begin = 0;
  for (std::size_t t = 1; t <= n; ++t) {
    if (t == n || seq.labels[t] != seq.labels[begin]) {
      out.push_back({seq.recording_id,
                     static_cast<double>(begin) * seq.frame_period_s,
                     static_cast<double>(t) * seq.frame_period_s,
                     speaker_names.at(static_cast<std::size_t>(seq.labels[begin]))});
      begin = t;
    }
  }
  return out;
}

Corpus generate_corpus(const SynthConfig& cfg) {
  cfg.validate();
  Rng rng(cfg.seed);
  Corpus corpus;
  corpus.config = cfg;
  const std::size_t total =
      cfg.num_train_speakers + cfg.num_dev_speakers + cfg.num_eval_speakers;
  corpus.speaker_means = draw_means(total, cfg.feature_dim, cfg.min_angle_deg, rng);
  for (std::size_t i = 0; i < total; ++i) corpus.speaker_names.push_back(speaker_name(i));

  std::size_t next = 0;
  for (std::size_t i = 0; i < cfg.num_train_speakers; ++i) corpus.train_speakers.push_back(next++);
  for (std::size_t i = 0; i < cfg.dev_seen_speakers; ++i) corpus.dev_speakers.push_back(i);
  for (std::size_t i = 0; i < cfg.num_dev_speakers; ++i) corpus.dev_speakers.push_back(next++);
  for (std::size_t i = 0; i < cfg.num_eval_speakers; ++i) corpus.eval_speakers.push_back(next++);

  fill_split(corpus.train, "train", cfg.train_recordings, corpus.train_speakers, corpus, rng);
  if (!corpus.dev_speakers.empty()) {
    fill_split(corpus.dev, "dev", cfg.dev_recordings, corpus.dev_speakers, corpus, rng);
  }
  fill_split(corpus.eval, "eval", cfg.eval_recordings, corpus.eval_speakers, corpus, rng);
  return corpus;
}

namespace {

constexpr const char* kSplits[] = {"train", "dev", "eval"};

CorpusSplit& mutable_split(Corpus& c, const std::string& name) {
  return const_cast<CorpusSplit&>(c.split(name));
}

}  // namespace

void write_corpus(const Corpus& corpus, const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  json partitions = json::object();
  for (const char* name : kSplits) {
    const CorpusSplit& split = corpus.split(name);
    fs::create_directories(dir / name);
    json entries = json::array();
    for (const FeatureSequence& seq : split.recordings) {
      const std::string feats = std::string(name) + "/" + seq.recording_id + ".fmat";
      const std::string labels =
          std::string(name) + "/" + seq.recording_id + ".labels.csv";
      save_fmat(dir / feats, seq.features);
      std::ofstream os(dir / labels);
      os << "frame,speaker\n";
      for (std::size_t t = 0; t < seq.labels.size(); ++t) {
        os << t << ',' << corpus.speaker_names[static_cast<std::size_t>(seq.labels[t])]
           << '\n';
      }
      entries.push_back({{"id", seq.recording_id},
                         {"features", feats},
                         {"labels", labels},
                         {"frames", seq.labels.size()}});
    }
    write_rttm(dir / name / "ref.rttm", split.reference);
    partitions[name] = {{"recordings", entries},
                        {"reference", std::string(name) + "/ref.rttm"}};
  }
  json speakers = json::array();
  for (std::size_t i = 0; i < corpus.speaker_names.size(); ++i) {
    speakers.push_back({{"name", corpus.speaker_names[i]}, {"mean", corpus.speaker_means[i]}});
  }
  const json manifest = {{"format", "cvec-corpus-1"},
                         {"frame_period_s", 0.01},
                         {"config", corpus.config.to_json()},
                         {"speakers", speakers},
                         {"train_speakers", corpus.train_speakers},
                         {"dev_speakers", corpus.dev_speakers},
                         {"eval_speakers", corpus.eval_speakers},
                         {"partitions", partitions}};
  std::ofstream(dir / "manifest.json") << manifest.dump(2) << '\n';
}

Corpus read_corpus(const std::filesystem::path& dir) {
  std::ifstream is(dir / "manifest.json");
  if (!is) throw std::runtime_error("no corpus manifest in " + dir.string());
  const json manifest = json::parse(is);
  Corpus corpus;
  corpus.config = SynthConfig::from_json(manifest.at("config"));
  std::map<std::string, int> index;
  for (const json& s : manifest.at("speakers")) {
    index[s.at("name").get<std::string>()] = static_cast<int>(corpus.speaker_names.size());
    corpus.speaker_names.push_back(s.at("name").get<std::string>());
    corpus.speaker_means.push_back(s.at("mean").get<std::vector<double>>());
  }
  corpus.train_speakers = manifest.at("train_speakers").get<std::vector<std::size_t>>();
  corpus.dev_speakers = manifest.at("dev_speakers").get<std::vector<std::size_t>>();
  corpus.eval_speakers = manifest.at("eval_speakers").get<std::vector<std::size_t>>();
  for (const char* name : kSplits) {
    const json& part = manifest.at("partitions").at(name);
    CorpusSplit& split = mutable_split(corpus, name);
    for (const json& entry : part.at("recordings")) {
      FeatureSequence seq;
      seq.recording_id = entry.at("id").get<std::string>();
      seq.features = load_fmat(dir / entry.at("features").get<std::string>());
      std::ifstream ls(dir / entry.at("labels").get<std::string>());
      std::string line;
      std::getline(ls, line);  // header
      while (std::getline(ls, line)) {
        const auto comma = line.find(',');
        if (comma == std::string::npos) {
          throw std::runtime_error("malformed label line in " + seq.recording_id);
        }
        seq.labels.push_back(index.at(line.substr(comma + 1)));
      }
      if (seq.labels.size() != seq.features.rows()) {
        throw std::runtime_error("label count does not match frames for " +
                                 seq.recording_id);
      }
      split.recordings.push_back(std::move(seq));
    }
    split.reference = read_rttm(dir / part.at("reference").get<std::string>());
  }
  return corpus;
}

}  // namespace cvec
