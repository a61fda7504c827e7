// core/src/pipeline.cc
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

#include "cvec/pipeline.h"

#include <atomic>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>
#include <thread>

#include "cvec/fmat.h"

namespace cvec {

using nlohmann::json;

namespace {

void reject_unknown(const json& j, std::initializer_list<const char*> known,
                    const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
  for (const auto& [key, value] : j.items()) {
    bool ok = false;
    for (const char* k : known) ok = ok || key == k;
    if (!ok) throw ConfigError(where + ": unknown key '" + key + "'");
  }
}

template <typename T>
void read_field(const json& j, const char* key, T& field, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    field = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(where + "." + key + ": " + e.what());
  }
}

}  // namespace

std::vector<double> ThresholdGrid::values() const {
  std::vector<double> out;
  if (!(step > 0.0) || stop < start) return out;
  const auto n = static_cast<std::size_t>(std::floor((stop - start) / step + 1e-9));
  for (std::size_t i = 0; i <= n; ++i) {
    out.push_back(std::round((start + static_cast<double>(i) * step) * 1e6) / 1e6);
  }
  return out;
}

json sizes_to_json(const ModelConfig::Sizes& s) {
  return {{"attention_dim", s.attention_dim},   {"attention_hidden", s.attention_hidden},
          {"heads", s.heads},                   {"tdnn_hidden", s.tdnn_hidden},
          {"hornn_state", s.hornn_state},       {"hornn_layers", s.hornn_layers},
          {"hornn_offsets", s.hornn_offsets},   {"bottleneck_dim", s.bottleneck_dim},
          {"mu", s.mu},                         {"smooth_lambda", s.smooth_lambda}};
}

ModelConfig::Sizes sizes_from_json(const json& j) {
  const std::string where = "model";
  reject_unknown(j,
                 {"attention_dim", "attention_hidden", "heads", "tdnn_hidden",
                  "hornn_state", "hornn_layers", "hornn_offsets", "bottleneck_dim",
                  "mu", "smooth_lambda"},
                 where);
  ModelConfig::Sizes s;
  read_field(j, "attention_dim", s.attention_dim, where);
  read_field(j, "attention_hidden", s.attention_hidden, where);
  read_field(j, "heads", s.heads, where);
  read_field(j, "tdnn_hidden", s.tdnn_hidden, where);
  read_field(j, "hornn_state", s.hornn_state, where);
  read_field(j, "hornn_layers", s.hornn_layers, where);
  read_field(j, "hornn_offsets", s.hornn_offsets, where);
  read_field(j, "bottleneck_dim", s.bottleneck_dim, where);
  read_field(j, "mu", s.mu, where);
  read_field(j, "smooth_lambda", s.smooth_lambda, where);
  return s;
}

void ExperimentConfig::validate() const {
  try {
    synth.validate();
    train.validate();
    for (const std::string& s : systems) {
      ModelConfig::make(SystemSpec::parse(s), synth.feature_dim, model, 2, seed).validate();
    }
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (systems.empty()) throw ConfigError("experiment: no systems listed");
  if (threshold_grid.values().empty()) throw ConfigError("experiment: empty threshold grid");
  for (double p : threshold_grid.values()) {
    if (!(p > 0.0 && p < 1.0)) throw ConfigError("experiment: thresholds must lie in (0, 1)");
  }
  if (k_max < 1 || kmeans_restarts < 1) {
    throw ConfigError("experiment: k_max and kmeans_restarts must be positive");
  }
  if (!(collar >= 0.0)) throw ConfigError("experiment: collar must be >= 0");
}

json ExperimentConfig::to_json() const {
  return {{"synth", synth.to_json()},
          {"model", sizes_to_json(model)},
          {"train", train.to_json()},
          {"systems", systems},
          {"threshold_grid",
           {{"start", threshold_grid.start},
            {"stop", threshold_grid.stop},
            {"step", threshold_grid.step}}},
          {"k_max", k_max},
          {"kmeans_restarts", kmeans_restarts},
          {"collar", collar},
          {"seed", seed}};
}

ExperimentConfig ExperimentConfig::from_json(const json& j) {
  const std::string where = "experiment";
  reject_unknown(j,
                 {"synth", "model", "train", "systems", "threshold_grid", "k_max",
                  "kmeans_restarts", "collar", "seed"},
                 where);
  ExperimentConfig c;
  try {
    if (j.contains("synth")) c.synth = SynthConfig::from_json(j.at("synth"));
    if (j.contains("train")) c.train = TrainConfig::from_json(j.at("train"));
  } catch (const json::exception& e) {
    throw ConfigError(e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (j.contains("model")) c.model = sizes_from_json(j.at("model"));
  if (j.contains("threshold_grid")) {
    const json& g = j.at("threshold_grid");
    reject_unknown(g, {"start", "stop", "step"}, "threshold_grid");
    read_field(g, "start", c.threshold_grid.start, "threshold_grid");
    read_field(g, "stop", c.threshold_grid.stop, "threshold_grid");
    read_field(g, "step", c.threshold_grid.step, "threshold_grid");
  }
  read_field(j, "systems", c.systems, where);
  read_field(j, "k_max", c.k_max, where);
  read_field(j, "kmeans_restarts", c.kmeans_restarts, where);
  read_field(j, "collar", c.collar, where);
  read_field(j, "seed", c.seed, where);
  c.validate();
  return c;
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config " + path.string());
  json j;
  try {
    j = json::parse(is);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return from_json(j);
}

ClusterOptions ExperimentConfig::cluster_options() const {
  ClusterOptions o;
  o.k_max = k_max;
  o.restarts = kmeans_restarts;
  o.seed = seed;
  return o;
}

Embeddings extract_embeddings(const EmbeddingModel& model, const FeatureSequence& seq,
                              std::size_t window_frames, std::size_t window_shift) {
  Embeddings out;
  out.recording_id = seq.recording_id;
  out.duration_s = static_cast<double>(seq.frames()) * seq.frame_period_s;
  const auto windows = make_windows(seq, window_frames, window_shift, WindowMode::kExtraction);
  const std::size_t dim = model.config().bottleneck_dim;
  out.vectors.resize(static_cast<Eigen::Index>(windows.size()), static_cast<Eigen::Index>(dim));
  for (std::size_t i = 0; i < windows.size(); ++i) {
    const Tensor e = model.forward(windows[i].features).embedding;
    const auto d = e.data();
    for (std::size_t c = 0; c < dim; ++c) {
      out.vectors(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = d[c];
    }
    const double start = static_cast<double>(windows[i].start_frame) * seq.frame_period_s;
    out.windows.push_back({start, start + static_cast<double>(window_frames) * seq.frame_period_s});
  }
  return out;
}

std::vector<Embeddings> extract_all(const EmbeddingModel& model,
                                    std::span<const FeatureSequence> recordings,
                                    std::size_t window_frames,
                                    std::size_t window_shift, int jobs) {
  std::vector<Embeddings> out(recordings.size());
  const std::size_t workers =
      std::min<std::size_t>(static_cast<std::size_t>(std::max(1, jobs)), recordings.size());
  if (workers <= 1) {
    for (std::size_t i = 0; i < recordings.size(); ++i) {
      out[i] = extract_embeddings(model, recordings[i], window_frames, window_shift);
    }
    return out;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(workers);
  {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (std::size_t i = next++; i < recordings.size(); i = next++) {
            out[i] = extract_embeddings(model, recordings[i], window_frames, window_shift);
          }
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

void write_embeddings(const std::filesystem::path& dir,
                      std::span<const Embeddings> embeddings) {
  std::filesystem::create_directories(dir);
  for (const Embeddings& e : embeddings) {
    const auto rows = static_cast<std::size_t>(e.vectors.rows());
    const auto cols = static_cast<std::size_t>(e.vectors.cols());
    if (rows > 0) {
      std::vector<double> data(rows * cols);
      for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
          data[r * cols + c] = e.vectors(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
        }
      }
      save_fmat(dir / (e.recording_id + ".fmat"), Tensor({rows, cols}, std::move(data)));
    }
    json windows = json::array();
    for (const WindowTime& w : e.windows) windows.push_back({w.start, w.end});
    const json times = {{"recording", e.recording_id},
                        {"duration_s", e.duration_s},
                        {"dim", cols},
                        {"windows", windows}};
    std::ofstream(dir / (e.recording_id + ".times.json")) << times.dump() << '\n';
  }
}

std::vector<Embeddings> read_embeddings(const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) throw std::runtime_error("no embedding directory " + dir.string());
  std::set<fs::path> times_files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const std::string name = entry.path().filename().string();
    if (name.size() > 11 && name.ends_with(".times.json")) times_files.insert(entry.path());
  }
  std::vector<Embeddings> out;
  for (const fs::path& p : times_files) {
    std::ifstream is(p);
    const json times = json::parse(is);
    Embeddings e;
    e.recording_id = times.at("recording").get<std::string>();
    e.duration_s = times.at("duration_s").get<double>();
    for (const json& w : times.at("windows")) {
      e.windows.push_back({w.at(0).get<double>(), w.at(1).get<double>()});
    }
    const auto dim = times.at("dim").get<Eigen::Index>();
    e.vectors.resize(static_cast<Eigen::Index>(e.windows.size()), dim);
    if (!e.windows.empty()) {
      const Tensor t = load_fmat(dir / (e.recording_id + ".fmat"));
      if (t.rows() != e.windows.size() || static_cast<Eigen::Index>(t.cols()) != dim) {
        throw std::runtime_error("embedding shape does not match times for " + e.recording_id);
      }
      for (Eigen::Index r = 0; r < e.vectors.rows(); ++r) {
        for (Eigen::Index c = 0; c < dim; ++c) {
          e.vectors(r, c) = t.at(static_cast<std::size_t>(r), static_cast<std::size_t>(c));
        }
      }
    }
    out.push_back(std::move(e));
  }
  return out;
}

SegmentList diarise(const Embeddings& emb, const ClusterOptions& options) {
  if (emb.windows.empty()) return {};
  const ClusterResult result = cluster(emb.vectors, options);
  std::vector<std::string> labels;
  for (int l : result.labels) labels.push_back("spk" + std::to_string(l));
  SegmentList segs = windows_to_segments(emb.recording_id, labels, emb.windows);
  if (!segs.empty() && segs.back().end < emb.duration_s) segs.back().end = emb.duration_s;
  return segs;
}

SegmentList diarise_all(std::span<const Embeddings> embeddings,
                        const ClusterOptions& options) {
  SegmentList out;
  for (const Embeddings& e : embeddings) {
    for (Segment& s : diarise(e, options)) out.push_back(std::move(s));
  }
  return out;
}

json TuneResult::to_json() const {
  json curve_json = json::array();
  for (const auto& [p, s] : curve) curve_json.push_back({{"threshold", p}, {"ser", s}});
  return {{"best_threshold", best_threshold}, {"best_ser", best_ser}, {"curve", curve_json}};
}

TuneResult tune_threshold(std::span<const Embeddings> embeddings,
                          const SegmentList& reference, std::span<const double> grid,
                          const ClusterOptions& base, double collar) {
  if (reference.empty()) throw std::invalid_argument("tuning needs a reference");
  if (grid.empty()) throw std::invalid_argument("tuning needs a threshold grid");
  TuneResult result;
  bool first = true;
  for (double p : grid) {
    ClusterOptions opts = base;
    opts.threshold_p = p;
    const double s = ser(reference, diarise_all(embeddings, opts), collar).ser_percent;
    result.curve.emplace_back(p, s);
    if (first || s < result.best_ser) {
      result.best_ser = s;
      result.best_threshold = p;
      first = false;
    }
  }
  return result;
}

std::unique_ptr<EmbeddingModel> train_system(const Corpus& corpus, const SystemSpec& system,
                                             const ExperimentConfig& cfg,
                                             std::vector<EpochStats>* trace,
                                             const Logger& log) {
  const TrainingData data =
      prepare_training_data(corpus.train.recordings, corpus.speaker_names, cfg.train);
  if (data.classes.size() < 2) {
    throw std::invalid_argument("train: corpus must contain at least 2 speakers");
  }
  auto model = std::make_unique<EmbeddingModel>(ModelConfig::make(
      system, corpus.config.feature_dim, cfg.model, data.classes.size(), cfg.seed));
  for (Encoder* enc : model->encoders()) {
    const PretrainReport rep =
        pretrain_frame_level(*enc, data.train, data.classes.size(), cfg.train);
    if (log && !rep.epoch_loss.empty()) {
      std::ostringstream os;
      os << system.name() << " pretrain " << enc->kind() << ": loss "
         << rep.epoch_loss.back() << ", frame acc " << rep.frame_accuracy;
      log(os.str());
    }
  }
  auto on_epoch = [&](const EpochStats& s) {
    if (!log) return;
    std::ostringstream os;
    os << system.name() << " epoch " << s.epoch << ": loss " << s.train_loss
       << ", val acc " << s.val_acc;
    log(os.str());
  };
  auto t = train(*model, data, cfg.train, on_epoch);
  if (trace) *trace = std::move(t);
  return model;
}

json SystemResult::to_json() const {
  json j = {{"system", system}, {"param_count", param_count}, {"threshold", threshold}};
  j["dev_ser"] = dev_ser ? json(*dev_ser) : json(nullptr);
  j["eval_ser"] = eval_ser ? json(*eval_ser) : json(nullptr);
  return j;
}

SystemResult SystemResult::from_json(const json& j) {
  SystemResult r;
  r.system = j.at("system").get<std::string>();
  r.param_count = j.value("param_count", std::size_t{0});
  r.threshold = j.value("threshold", 0.0);
  if (j.contains("dev_ser") && !j.at("dev_ser").is_null()) r.dev_ser = j.at("dev_ser").get<double>();
  if (j.contains("eval_ser") && !j.at("eval_ser").is_null()) {
    r.eval_ser = j.at("eval_ser").get<double>();
  }
  return r;
}

SystemResult evaluate_system(const EmbeddingModel& model, const std::string& name,
                             const Corpus& corpus, const ExperimentConfig& cfg, int jobs) {
  SystemResult r;
  r.system = name;
  r.param_count = model.embedding_param_count();
  const std::size_t wf = cfg.train.window_frames;
  const std::size_t ws = cfg.train.window_shift;
  ClusterOptions opts = cfg.cluster_options();
  if (!corpus.dev.recordings.empty()) {
    const auto dev = extract_all(model, corpus.dev.recordings, wf, ws, jobs);
    const auto grid = cfg.threshold_grid.values();
    const TuneResult tuned = tune_threshold(dev, corpus.dev.reference, grid, opts, cfg.collar);
    r.threshold = tuned.best_threshold;
    r.dev_ser = tuned.best_ser;
  } else {
    r.threshold = opts.threshold_p;
  }
  opts.threshold_p = r.threshold;
  if (!corpus.eval.recordings.empty()) {
    const auto eval = extract_all(model, corpus.eval.recordings, wf, ws, jobs);
    r.eval_ser = ser(corpus.eval.reference, diarise_all(eval, opts), cfg.collar).ser_percent;
  }
  return r;
}

namespace {

std::string fmt_ser(const std::optional<double>& v) {
  if (!v) return "-";
  std::ostringstream os;
  os << std::fixed << std::setprecision(2) << *v;
  return os.str();
}

}  // namespace

std::string format_report(std::span<const SystemResult> results) {
  std::vector<std::vector<std::string>> rows = {{"System"}, {"#Params."}, {"Threshold p"},
                                                {"Dev SER (%)"}, {"Eval SER (%)"}};
  for (const SystemResult& r : results) {
    rows[0].push_back(r.system);
    rows[1].push_back(std::to_string(r.param_count));
    std::ostringstream p;
    p << std::fixed << std::setprecision(2) << r.threshold;
    rows[2].push_back(p.str());
    rows[3].push_back(fmt_ser(r.dev_ser));
    rows[4].push_back(fmt_ser(r.eval_ser));
  }
  std::vector<std::size_t> width(rows[0].size(), 0);
  for (const auto& row : rows) {
    for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
  }
  std::ostringstream os;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < rows[r].size(); ++c) {
      os << (c ? "  " : "") << std::setw(static_cast<int>(width[c]))
         << (c ? std::right : std::left) << rows[r][c];
    }
    os << '\n';
    if (r == 0) {
      std::size_t total = 0;
      for (std::size_t w : width) total += w + 2;
      os << std::string(total - 2, '-') << '\n';
    }
  }
  return os.str();
}

json report_json(std::span<const SystemResult> results) {
  json systems = json::array();
  for (const SystemResult& r : results) systems.push_back(r.to_json());
  return {{"systems", systems}};
}

std::string system_dir_name(const std::string& system) {
  std::string out = system;
  for (char& c : out) {
    if (c == ':' || c == '/') c = '_';
  }
  return out;
}

}  // namespace cvec
