// tools/cli.cc
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

#include "cli.h"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "cvec/attention.h"
#include "cvec/fmat.h"
#include "cvec/model.h"
#include "cvec/ops.h"
#include "cvec/pipeline.h"
#include "cvec/scoring.h"
#include "cvec/synthdata.h"
#include "cvec/trainer.h"

namespace cvec::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

void log_line(const std::string& msg) { std::cerr << "[cvec] " << msg << std::endl; }

void write_json(const fs::path& path, const json& j) {
  std::ofstream os(path);
  if (!os) throw DataError("cannot write " + path.string());
  os << j.dump(2) << '\n';
}

json read_json(const fs::path& path) {
  std::ifstream is(path);
  if (!is) throw DataError("cannot read " + path.string());
  return json::parse(is);
}

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ConfigError("bad number '" + item + "' in list '" + text + "'");
    }
  }
  if (out.empty()) throw ConfigError("empty list");
  return out;
}

ExperimentConfig load_config(const std::string& path) {
  if (path.empty()) return ExperimentConfig{};
  return ExperimentConfig::load(path);
}

Corpus load_corpus(const fs::path& dir) {
  if (!fs::exists(dir / "manifest.json")) {
    throw DataError("missing corpus: no manifest.json in " + dir.string());
  }
  return read_corpus(dir);
}

void prepare_output_dir(const fs::path& dir, bool force) {
  if (fs::exists(dir) && !fs::is_empty(dir)) {
    if (!force) {
      throw ConfigError("output directory " + dir.string() +
                        " exists and is not empty (use --force)");
    }
    fs::remove_all(dir);
  }
  fs::create_directories(dir);
}

struct Overrides {
  std::string lambdas;
  double mu = -1.0;
};

// Applies --lambdas / --mu to every stage-1 attention layer.
ModelConfig apply_overrides(ModelConfig mc, const Overrides& o) {
  if (!o.lambdas.empty()) {
    mc.stage1.lambdas = parse_list(o.lambdas);
  }
  if (o.mu >= 0.0) {
    mc.stage1.mu = o.mu;
    mc.stage2.mu = o.mu;
  }
  try {
    mc.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return mc;
}

std::unique_ptr<EmbeddingModel> train_with_overrides(const Corpus& corpus,
                                                     const SystemSpec& system,
                                                     const ExperimentConfig& cfg,
                                                     const Overrides& o,
                                                     std::vector<EpochStats>& trace) {
  if (o.lambdas.empty() && o.mu < 0.0) {
    return train_system(corpus, system, cfg, &trace, log_line);
  }
  const TrainingData data =
      prepare_training_data(corpus.train.recordings, corpus.speaker_names, cfg.train);
  if (data.classes.size() < 2) throw ConfigError("corpus must contain at least 2 speakers");
  ModelConfig mc = apply_overrides(
      ModelConfig::make(system, corpus.config.feature_dim, cfg.model, data.classes.size(),
                        cfg.seed),
      o);
  auto model = std::make_unique<EmbeddingModel>(mc);
  for (Encoder* enc : model->encoders()) {
    pretrain_frame_level(*enc, data.train, data.classes.size(), cfg.train);
  }
  trace = train(*model, data, cfg.train, [&](const EpochStats& s) {
    log_line(system.name() + " epoch " + std::to_string(s.epoch) + ": loss " +
             std::to_string(s.train_loss));
  });
  return model;
}

json checkpoint_extra(const ExperimentConfig& cfg) {
  return {{"window_frames", cfg.train.window_frames},
          {"window_shift", cfg.train.window_shift}};
}

SystemSpec parse_system(const std::string& name) {
  try {
    return SystemSpec::parse(name);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

// ---- synth ----

struct SynthArgs {
  std::string config, out;
  bool force = false;
};

int cmd_synth(const SynthArgs& a) {
  const ExperimentConfig cfg = load_config(a.config);
  prepare_output_dir(a.out, a.force);
  const Corpus corpus = generate_corpus(cfg.synth);
  write_corpus(corpus, a.out);
  log_line("wrote corpus to " + a.out);
  return kOk;
}

// ---- train ----

struct TrainArgs {
  std::string config, corpus, system, out;
  Overrides overrides;
};

int cmd_train(const TrainArgs& a) {
  const ExperimentConfig cfg = load_config(a.config);
  const SystemSpec system = parse_system(a.system);
  const Corpus corpus = load_corpus(a.corpus);
  fs::create_directories(a.out);
  std::vector<EpochStats> trace;
  auto model = train_with_overrides(corpus, system, cfg, a.overrides, trace);
  save_checkpoint(fs::path(a.out) / "model.ckpt", *model, checkpoint_extra(cfg));
  write_loss_csv(fs::path(a.out) / "loss.csv", trace);
  log_line("wrote " + (fs::path(a.out) / "model.ckpt").string());
  return kOk;
}

// ---- extract ----

struct ExtractArgs {
  std::string checkpoint, corpus, split = "eval", out;
  int jobs = 1;
};

int cmd_extract(const ExtractArgs& a) {
  json extra;
  auto model = load_checkpoint(a.checkpoint, &extra);
  const Corpus corpus = load_corpus(a.corpus);
  if (corpus.config.feature_dim != model->config().feature_dim) {
    throw ConfigError("checkpoint expects " + std::to_string(model->config().feature_dim) +
                      "-d features but corpus has " +
                      std::to_string(corpus.config.feature_dim));
  }
  const auto frames = extra.value("window_frames", std::size_t{200});
  const auto shift = extra.value("window_shift", std::size_t{100});
  const CorpusSplit& split = corpus.split(a.split);
  const auto emb = extract_all(*model, split.recordings, frames, shift, a.jobs);
  write_embeddings(a.out, emb);
  log_line("extracted " + std::to_string(emb.size()) + " recordings to " + a.out);
  return kOk;
}

// ---- cluster ----

struct ClusterArgs {
  std::string embeddings, out, ref, config, tune_out;
  double threshold = -1.0;
  bool tune = false;
  int k_override = 0;
  int jobs = 1;
};

int cmd_cluster(const ClusterArgs& a) {
  const ExperimentConfig cfg = load_config(a.config);
  if (a.tune && a.ref.empty()) throw ConfigError("--tune needs a reference RTTM (--ref)");
  if (!a.tune && a.threshold < 0.0) throw ConfigError("give --threshold p or --tune");
  ClusterOptions opts = cfg.cluster_options();
  if (a.k_override > 0) opts.k_override = a.k_override;
  const auto emb = read_embeddings(a.embeddings);
  if (a.tune) {
    const auto grid = cfg.threshold_grid.values();
    const TuneResult tuned = tune_threshold(emb, read_rttm(fs::path(a.ref)), grid, opts, cfg.collar);
    opts.threshold_p = tuned.best_threshold;
    const fs::path tune_path = a.tune_out.empty() ? fs::path(a.out + ".tune.json") : fs::path(a.tune_out);
    write_json(tune_path, tuned.to_json());
    log_line("tuned threshold p = " + std::to_string(tuned.best_threshold));
  } else {
    opts.threshold_p = a.threshold;
  }
  if (!(opts.threshold_p > 0.0 && opts.threshold_p < 1.0)) {
    throw ConfigError("threshold must lie in (0, 1)");
  }
  write_rttm(fs::path(a.out), diarise_all(emb, opts));
  return kOk;
}

// ---- score ----

struct ScoreArgs {
  std::string ref, hyp, json_out;
  double collar = 0.25;
};

int cmd_score(const ScoreArgs& a) {
  const SerReport rep = ser(read_rttm(fs::path(a.ref)), read_rttm(fs::path(a.hyp)), a.collar);
  std::cout << std::fixed << std::setprecision(3) << "scored time  " << rep.scored_time
            << " s\nerror time   " << rep.error_time << " s\n"
            << std::setprecision(2) << "SER          " << rep.ser_percent << " %\n";
  for (const SpeakerMapping& m : rep.mapping) {
    std::cout << "  " << m.recording << ": " << m.hyp << " -> " << m.ref << '\n';
  }
  if (!a.json_out.empty()) write_json(a.json_out, rep.to_json());
  return kOk;
}

// ---- sweep-lambda ----

struct SweepArgs {
  std::string config, corpus, system = "tdnn", out, lambdas = "1.0,0.2";
  std::size_t max_windows = 20;
};

int cmd_sweep(const SweepArgs& a) {
  const ExperimentConfig cfg = load_config(a.config);
  const SystemSpec system = parse_system(a.system);
  const Corpus corpus = load_corpus(a.corpus);
  const std::vector<double> lambdas = parse_list(a.lambdas);
  fs::create_directories(a.out);

  std::ofstream summary(fs::path(a.out) / "sweep.csv");
  summary << "lambda,head,mean_entropy,mean_max_weight\n";
  std::ofstream curve(fs::path(a.out) / "penalty_curve.csv");
  curve << "model_lambda,lambda,penalty\n";

  for (double lambda : lambdas) {
    std::ostringstream tag;
    tag << "lambda_" << lambda;
    const fs::path dir = fs::path(a.out) / tag.str();
    fs::create_directories(dir);
    const fs::path ckpt = dir / "model.ckpt";
    std::unique_ptr<EmbeddingModel> model;
    if (fs::exists(ckpt)) {
      model = load_checkpoint(ckpt);
    } else {
      std::ostringstream lam;
      for (std::size_t h = 0; h < cfg.model.heads; ++h) lam << (h ? "," : "") << lambda;
      std::vector<EpochStats> trace;
      model = train_with_overrides(corpus, system, cfg, {lam.str(), -1.0}, trace);
      save_checkpoint(ckpt, *model, checkpoint_extra(cfg));
      write_loss_csv(dir / "loss.csv", trace);
    }

    std::vector<double> entropy(cfg.model.heads, 0.0), max_weight(cfg.model.heads, 0.0);
    std::size_t count = 0;
    std::ofstream dump(dir / "annotations.csv");
    write_annotation_csv_header(dump);
    Tensor first;
    for (const FeatureSequence& seq : corpus.eval.recordings) {
      for (const LabeledWindow& w :
           make_windows(seq, cfg.train.window_frames, cfg.train.window_shift,
                        WindowMode::kExtraction)) {
        const Tensor ann = model->forward(w.features).annotations.front().detach();
        if (!first.defined()) first = ann;
        const auto stats = annotation_stats(ann);
        for (std::size_t h = 0; h < stats.size() && h < entropy.size(); ++h) {
          entropy[h] += stats[h].entropy;
          max_weight[h] += stats[h].max_weight;
        }
        if (count < a.max_windows) write_annotation_csv(dump, count, ann);
        ++count;
      }
    }
    if (count == 0) throw DataError("eval split has no complete windows");
    for (std::size_t h = 0; h < entropy.size(); ++h) {
      summary << lambda << ',' << h << ',' << entropy[h] / static_cast<double>(count) << ','
              << max_weight[h] / static_cast<double>(count) << '\n';
    }
    // Penalty as a function of a shared diagonal target for one fixed A.
    const double t = static_cast<double>(first.rows());
    const std::size_t points = 50;
    for (std::size_t i = 0; i <= points; ++i) {
      const double l = 1.0 / t + (1.0 - 1.0 / t) * static_cast<double>(i) / points;
      const std::vector<double> diag(first.cols(), l);
      curve << lambda << ',' << l << ','
            << penalty_modified(first, model->config().stage1.mu, diag).item() << '\n';
    }
    log_line("swept lambda " + std::to_string(lambda));
  }
  return kOk;
}

// ---- report ----

struct ReportArgs {
  std::string run;
};

int cmd_report(const ReportArgs& a) {
  const fs::path run_dir(a.run);
  if (!fs::is_directory(run_dir)) throw DataError("no run directory " + a.run);
  std::vector<std::string> systems;
  if (fs::exists(run_dir / "config.json")) {
    systems = ExperimentConfig::from_json(read_json(run_dir / "config.json")).systems;
  } else {
    for (const auto& e : fs::directory_iterator(run_dir)) {
      if (fs::exists(e.path() / "result.json")) {
        systems.push_back(read_json(e.path() / "result.json").at("system"));
      }
    }
    std::sort(systems.begin(), systems.end());
  }
  std::vector<SystemResult> results;
  for (const std::string& s : systems) {
    const fs::path p = run_dir / system_dir_name(s) / "result.json";
    if (fs::exists(p)) {
      results.push_back(SystemResult::from_json(read_json(p)));
    } else {
      log_line("incomplete run: " + s);
      SystemResult r;
      r.system = s;
      results.push_back(r);
    }
  }
  const std::string table = format_report(results);
  std::cout << table;
  std::ofstream(run_dir / "report.txt") << table;
  write_json(run_dir / "report.json", report_json(results));
  return kOk;
}

// ---- run ----

struct RunArgs {
  std::string config, out, corpus;
  int jobs = 1;
  bool force = false;
};

int cmd_run(const RunArgs& a) {
  const ExperimentConfig cfg = load_config(a.config);
  prepare_output_dir(a.out, a.force);
  const fs::path out(a.out);
  write_json(out / "config.json", cfg.to_json());
  Corpus corpus;
  if (a.corpus.empty()) {
    corpus = generate_corpus(cfg.synth);
    write_corpus(corpus, out / "corpus");
  } else {
    corpus = load_corpus(a.corpus);
  }
  std::vector<SystemResult> results;
  for (const std::string& name : cfg.systems) {
    const SystemSpec system = parse_system(name);
    const fs::path dir = out / system_dir_name(name);
    fs::create_directories(dir);
    std::vector<EpochStats> trace;
    auto model = train_system(corpus, system, cfg, &trace, log_line);
    save_checkpoint(dir / "model.ckpt", *model, checkpoint_extra(cfg));
    write_loss_csv(dir / "loss.csv", trace);
    const SystemResult r = evaluate_system(*model, name, corpus, cfg, a.jobs);
    write_json(dir / "result.json", r.to_json());
    log_line(name + ": eval SER " + (r.eval_ser ? std::to_string(*r.eval_ser) : "-"));
    results.push_back(r);
  }
  const std::string table = format_report(results);
  std::cout << table;
  std::ofstream(out / "report.txt") << table;
  write_json(out / "report.json", report_json(results));
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args) {
  CLI::App app{"cvec: c-vector speaker diarisation toolkit"};
  app.require_subcommand(1);

  SynthArgs synth;
  auto* s = app.add_subcommand("synth", "generate a synthetic corpus");
  s->add_option("--config", synth.config, "experiment config JSON");
  s->add_option("--out", synth.out, "output corpus directory")->required();
  s->add_flag("--force", synth.force, "overwrite a non-empty output directory");

  TrainArgs tr;
  auto* t = app.add_subcommand("train", "pretrain and train one system");
  t->add_option("--config", tr.config, "experiment config JSON");
  t->add_option("--corpus", tr.corpus, "corpus directory")->required();
  t->add_option("--system", tr.system, "tdnn | hornn | cvector:<topology>")->required();
  t->add_option("--out", tr.out, "output directory")->required();
  t->add_option("--lambdas", tr.overrides.lambdas, "comma-separated stage-1 head targets");
  t->add_option("--mu", tr.overrides.mu, "penalty weight");

  ExtractArgs ex;
  auto* e = app.add_subcommand("extract", "extract window embeddings");
  e->add_option("--checkpoint", ex.checkpoint, "model checkpoint")->required();
  e->add_option("--corpus", ex.corpus, "corpus directory")->required();
  e->add_option("--split", ex.split, "train | dev | eval")
      ->check(CLI::IsMember({"train", "dev", "eval"}));
  e->add_option("--out", ex.out, "output directory")->required();
  e->add_option("--jobs", ex.jobs, "parallel recordings")->check(CLI::PositiveNumber);

  ClusterArgs cl;
  auto* c = app.add_subcommand("cluster", "spectral clustering to RTTM");
  c->add_option("--embeddings", cl.embeddings, "embedding directory")->required();
  c->add_option("--out", cl.out, "hypothesis RTTM")->required();
  c->add_option("--threshold", cl.threshold, "refinement quantile p");
  c->add_flag("--tune", cl.tune, "grid-search p against --ref");
  c->add_option("--ref", cl.ref, "reference RTTM for tuning");
  c->add_option("--config", cl.config, "experiment config JSON (grid, k_max)");
  c->add_option("--tune-out", cl.tune_out, "where to write the tuning record");
  c->add_option("--k-override", cl.k_override, "force the number of clusters");

  ScoreArgs sc;
  auto* o = app.add_subcommand("score", "speaker error rate");
  o->add_option("--ref", sc.ref, "reference RTTM")->required();
  o->add_option("--hyp", sc.hyp, "hypothesis RTTM")->required();
  o->add_option("--collar", sc.collar, "collar in seconds");
  o->add_option("--json", sc.json_out, "write the report as JSON");

  SweepArgs sw;
  auto* w = app.add_subcommand("sweep-lambda", "annotation statistics per lambda");
  w->add_option("--config", sw.config, "experiment config JSON");
  w->add_option("--corpus", sw.corpus, "corpus directory")->required();
  w->add_option("--system", sw.system, "system to train per lambda");
  w->add_option("--lambdas", sw.lambdas, "comma-separated lambda values");
  w->add_option("--out", sw.out, "output directory")->required();
  w->add_option("--max-windows", sw.max_windows, "windows dumped per model");

  ReportArgs rp;
  auto* r = app.add_subcommand("report", "comparison table for a run directory");
  r->add_option("--run", rp.run, "run directory")->required();

  RunArgs rn;
  auto* u = app.add_subcommand("run", "synth, train, extract, cluster and score every system");
  u->add_option("--config", rn.config, "experiment config JSON");
  u->add_option("--out", rn.out, "run directory")->required();
  u->add_option("--corpus", rn.corpus, "use an existing corpus");
  u->add_option("--jobs", rn.jobs, "parallel recordings")->check(CLI::PositiveNumber);
  u->add_flag("--force", rn.force, "overwrite a non-empty run directory");

  std::vector<std::string> rest(args.rbegin(), args.rend() - 1);
  try {
    app.parse(rest);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    if (*s) return cmd_synth(synth);
    if (*t) return cmd_train(tr);
    if (*e) return cmd_extract(ex);
    if (*c) return cmd_cluster(cl);
    if (*o) return cmd_score(sc);
    if (*w) return cmd_sweep(sw);
    if (*r) return cmd_report(rp);
    if (*u) return cmd_run(rn);
  } catch (const NumericError& err) {
    std::cerr << "numeric error: " << err.what() << '\n';
    return kNumericError;
  } catch (const std::invalid_argument& err) {
    std::cerr << "config error: " << err.what() << '\n';
    return kConfigError;
  } catch (const std::exception& err) {
    std::cerr << "data error: " << err.what() << '\n';
    return kDataError;
  }
  return kConfigError;
}

}  // namespace cvec::cli
