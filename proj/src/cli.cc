// Copyright 2026 The xcmine Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include "xcmine/cli.h"

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>

#include "xcmine/config.h"
#include "xcmine/infer.h"
#include "xcmine/metrics.h"
#include "xcmine/theory.h"

namespace xcm {
namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;

constexpr const char* kVersion = "0.1.0";

// Seed streams of the CLI pipeline.
enum : std::uint64_t {
  kEncoderInit = 1,
  kFusionValidation = 2,
};

struct Options {
  std::string config;
  std::string out = "xcmine_out";
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> threads;
  std::string strategies = "ngame,uniform,static_cluster,anns_refresh";
  std::optional<std::size_t> k;
  std::optional<double> radius;
};

class BoundFailure : public Error {
 public:
  using Error::Error;
};

Config resolve_config(const Options& o) {
  Config c = o.config.empty() ? Config() : Config::load(o.config);
  if (o.seed) c.set("seed", std::to_string(*o.seed));
  if (o.threads) c.set("threads", std::to_string(*o.threads));
  if (o.k) c.set("predict.k", std::to_string(*o.k));
  if (o.radius) {
    std::ostringstream r;
    r.precision(17);
    r << *o.radius;
    c.set("verify.radius", r.str());
  }
  set_num_threads(std::max<std::size_t>(1, c.get_size("threads")));
  return c;
}

// Falls back to the configured synthetic task when no data file is set.
Dataset training_data(const Config& c) {
  const auto& points = c.get("data.points");
  if (points.empty()) return generate(synth_spec(c)).dataset;
  const auto& labels = c.get("data.label_features");
  if (labels.empty()) throw ConfigError("data.label_features is not set");
  return load_dataset(points, labels);
}

Dataset test_data(const Config& c, const Dataset& train) {
  const auto& test = c.get("data.test_points");
  if (test.empty()) return train;
  return load_dataset(test, c.get("data.label_features"));
}

BagOfEmbeddings fresh_encoder(const Config& c, const Dataset& d) {
  return BagOfEmbeddings(init_params(
      d.num_features(), c.get_size("encoder.dim"),
      derive_seed(c.get_u64("seed"), kEncoderInit)));
}

std::string path_in(const Options& o, const std::string& name) {
  return (fs::path(o.out) / name).string();
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path);
  if (!f) throw FormatError("cannot write " + path);
  f << text;
}

void write_manifest(const Options& o, const std::string& command,
                    const Config& c, const std::vector<std::string>& outputs) {
  json m;
  m["command"] = command;
  m["version"] = kVersion;
  m["compiler"] = __VERSION__;
  m["seed"] = c.get_u64("seed");
  m["threads"] = c.get_size("threads");
  m["deterministic"] = c.get_size("threads") == 1;
  m["config"] = c.values();
  m["formats"] = {{"encoder", "XCMENC01"},
                  {"classifiers", "XCMCLS01"},
                  {"fusion", "XCMFUS01"},
                  {"index", "XCMIDX01"}};
  m["outputs"] = outputs;
  std::ofstream f(path_in(o, "manifest.json"));
  if (!f) throw FormatError("cannot write manifest in " + o.out);
  f << m.dump(2) << '\n';
}

std::vector<PointId> fusion_validation(const Dataset& d, std::size_t size,
                                       std::uint64_t seed) {
  std::vector<PointId> v = d.eligible_points();
  if (size < v.size()) {
    Rng rng(derive_seed(seed, kFusionValidation));
    shuffle(v, rng);
    v.resize(size);
    std::sort(v.begin(), v.end());
  }
  return v;
}

int cmd_stats(const Options& o, std::ostream& out) {
  const Config c = resolve_config(o);
  const Dataset d = training_data(c);
  const std::string text = format_stats(compute_stats(d));
  out << text;
  fs::create_directories(o.out);
  write_text(path_in(o, "stats.txt"), text);
  write_manifest(o, "stats", c, {"stats.txt"});
  return kExitOk;
}

int cmd_train(const Options& o, std::ostream& out) {
  const Config c = resolve_config(o);
  const TrainConfig tc = train_config(c);
  const Dataset d = training_data(c);
  fs::create_directories(o.out);

  BagOfEmbeddings encoder = fresh_encoder(c, d);
  const M1Result m1 = train_m1(d, encoder, tc);
  save_encoder(path_in(o, "encoder.bin"), encoder.params());
  write_train_log(path_in(o, "train_log.csv"), m1.log);

  const Matrix label_emb = encoder.embed_batch(d.label_features());
  const Matrix point_emb = encoder.embed_batch(d.point_features());
  M2Result m2 = train_m2(d, point_emb, label_emb, tc);
  save_classifiers(path_in(o, "classifiers.bin"), m2.bank);
  write_train_log(path_in(o, "m2_log.csv"), m2.log);
  std::vector<std::string> outputs = {"encoder.bin", "train_log.csv",
                                      "classifiers.bin", "m2_log.csv"};

  if (c.get_bool("fusion.enabled")) {
    Predictor predictor(encoder, label_emb, m2.bank, d.label_frequencies(),
                        index_options(c, d.num_labels()));
    const std::size_t k = c.get_size("predict.k");
    predictor.set_shortlist_size(c.get_size("predict.shortlist"));
    const auto val = fusion_validation(d, c.get_size("fusion.validation_size"),
                                       c.get_u64("seed"));
    const auto pairs = build_fusion_training_set(
        d, val, predictor, predictor.shortlist_size(k));
    const FusionModel tree = fit_tree(pairs, tree_options(c));
    save_fusion(path_in(o, "fusion.bin"), tree);
    outputs.push_back("fusion.bin");
    out << "fusion_pairs = " << pairs.size() << '\n'
        << "fusion_depth = " << tree.depth() << '\n';
  }
  if (!m1.log.empty()) {
    out << "m1_epochs = " << m1.log.size() << '\n'
        << "m1_final_p_at_1 = " << m1.log.back().p_at_1 << '\n';
  }
  write_manifest(o, "train", c, outputs);
  return kExitOk;
}

int cmd_predict(const Options& o, std::ostream& out) {
  const Config c = resolve_config(o);
  const Dataset train = training_data(c);
  const Dataset test = test_data(c, train);
  BagOfEmbeddings encoder(load_encoder(path_in(o, "encoder.bin")));
  ClassifierBank bank = load_classifiers(path_in(o, "classifiers.bin"));
  Predictor predictor(encoder, encoder.embed_batch(train.label_features()),
                      std::move(bank), train.label_frequencies(),
                      index_options(c, train.num_labels()));
  predictor.set_shortlist_size(c.get_size("predict.shortlist"));
  const std::string fusion_path = path_in(o, "fusion.bin");
  if (c.get_bool("fusion.enabled") && fs::exists(fusion_path)) {
    predictor.set_fusion(load_fusion(fusion_path));
  }
  const std::size_t k = c.get_size("predict.k");
  std::vector<std::vector<ScoredId>> preds(test.num_points());
  parallel_for(test.num_points(), [&](std::size_t i) {
    preds[i] = predictor.predict(test.point(static_cast<PointId>(i)), k);
  });
  write_predictions(path_in(o, "predictions.tsv"), preds);
  write_manifest(o, "predict", c, {"predictions.tsv"});
  out << "predicted_points = " << preds.size() << '\n';
  return kExitOk;
}

int cmd_evaluate(const Options& o, std::ostream& out) {
  const Config c = resolve_config(o);
  const Dataset train = training_data(c);
  const Dataset test = test_data(c, train);
  const auto ranked =
      read_predictions(path_in(o, "predictions.tsv"), test.num_points());
  const auto freq = train.label_frequencies();
  const PropensityModel pm =
      propensities(freq, train.num_points(), c.get_double("eval.propensity_a"),
                   c.get_double("eval.propensity_b"));
  const auto ks = c.get_size_list("eval.ks");
  const EvaluationReport r = evaluate(ranked, test.point_labels(), &pm, ks,
                                      /*keep_per_point=*/true);
  const std::string text = format_report(r);
  out << text;
  write_text(path_in(o, "report.txt"), text);
  write_per_point_csv(path_in(o, "per_point.csv"), r);
  write_manifest(o, "evaluate", c, {"report.txt", "per_point.csv"});
  return kExitOk;
}

int cmd_verify(const Options& o, std::ostream& out) {
  const Config c = resolve_config(o);
  const TrainConfig tc = train_config(c);
  const Dataset d = training_data(c);
  fs::create_directories(o.out);
  const std::string enc_path = path_in(o, "encoder.bin");
  const BagOfEmbeddings encoder = fs::exists(enc_path)
                                      ? BagOfEmbeddings(load_encoder(enc_path))
                                      : fresh_encoder(c, d);
  const GoodnessReport r = verify_bound(d, encoder, tc.miner,
                                        c.get_double("verify.radius"),
                                        c.get_u64("seed"));
  const std::string text = format_goodness(r);
  out << text;
  write_text(path_in(o, "goodness.txt"), text);
  write_manifest(o, "verify-bound", c, {"goodness.txt"});
  if (!r.holds) throw BoundFailure("bound violated");
  return kExitOk;
}

std::vector<MinerStrategy> parse_strategies(const std::string& list) {
  std::vector<MinerStrategy> out;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(parse_strategy(item));
  }
  if (out.empty()) throw ConfigError("--strategies is empty");
  return out;
}

int cmd_compare(const Options& o, std::ostream& out) {
  const Config c = resolve_config(o);
  const TrainConfig base = train_config(c);
  const auto strategies = parse_strategies(o.strategies);
  const Dataset d = training_data(c);
  fs::create_directories(o.out);

  struct Run {
    MinerStrategy strategy;
    M1Result result;
  };
  std::vector<Run> runs;
  for (MinerStrategy s : strategies) {
    TrainConfig tc = base;
    tc.miner.strategy = s;
    BagOfEmbeddings encoder = fresh_encoder(c, d);
    runs.push_back({s, train_m1(d, encoder, tc)});
  }

  std::ofstream csv(path_in(o, "compare_miners.csv"));
  if (!csv) throw FormatError("cannot write compare_miners.csv");
  csv.precision(10);
  csv << "epoch,strategy,p_at_1,seconds,overhead_seconds\n";
  for (const auto& r : runs) {
    for (const auto& e : r.result.log) {
      csv << e.epoch << ',' << to_string(r.strategy) << ',' << e.p_at_1 << ','
          << e.seconds << ',' << e.sampling_seconds << '\n';
    }
  }

  auto timings = [](const M1Result& m) {
    OverheadTimings t;
    for (const auto& e : m.log) {
      t.train_seconds += e.seconds;
      t.sampling_seconds += e.sampling_seconds;
    }
    t.epochs = m.log.size();
    return t;
  };
  double baseline = 0.0;
  for (const auto& r : runs) {
    if (r.strategy == MinerStrategy::kUniform && !r.result.log.empty()) {
      const auto t = timings(r.result);
      baseline = t.train_seconds / static_cast<double>(t.epochs);
    }
  }
  std::ostringstream summary;
  summary.precision(6);
  for (const auto& r : runs) {
    OverheadTimings t = timings(r.result);
    t.baseline_epoch_seconds = baseline;
    const OverheadReport rep = overhead_report(r.strategy, t);
    const std::string name = to_string(r.strategy);
    summary << name << ".epochs = " << t.epochs << '\n'
            << name << ".final_p_at_1 = "
            << (r.result.log.empty() ? 0.0 : r.result.log.back().p_at_1)
            << '\n'
            << name << ".epoch_seconds = " << rep.epoch_seconds << '\n'
            << name << ".sampling_seconds = " << rep.sampling_seconds << '\n'
            << name << ".fraction_increase = " << rep.fraction_increase
            << '\n';
  }
  out << summary.str();
  write_text(path_in(o, "overhead.txt"), summary.str());
  write_manifest(o, "compare-miners", c, {"compare_miners.csv", "overhead.txt"});
  return kExitOk;
}

int cmd_synth(const Options& o, std::ostream& out) {
  const Config c = resolve_config(o);
  const SynthData s = generate(synth_spec(c));
  fs::create_directories(o.out);
  write_sparse_file(path_in(o, "points.txt"), point_file(s.dataset));
  write_sparse_file(path_in(o, "label_features.txt"),
                    label_feature_file(s.dataset));
  {
    std::ofstream f(path_in(o, "planted_clusters.txt"));
    for (std::size_t i = 0; i < s.point_cluster.size(); ++i) {
      f << i << ' ' << s.point_cluster[i] << '\n';
    }
  }
  write_manifest(o, "synth", c,
                 {"points.txt", "label_features.txt", "planted_clusters.txt"});
  out << "points = " << s.dataset.num_points() << '\n'
      << "labels = " << s.dataset.num_labels() << '\n'
      << "features = " << s.dataset.num_features() << '\n';
  return kExitOk;
}

void add_common(CLI::App* cmd, Options& o) {
  cmd->add_option("--config", o.config, "flat key = value config file");
  cmd->add_option("--out", o.out, "output directory");
  cmd->add_option("--seed", o.seed, "master seed (overrides config)");
  cmd->add_option("--threads", o.threads, "worker threads (default 1)");
  cmd->add_option("--k", o.k, "number of predictions per point");
  cmd->add_option("--radius", o.radius, "hard-negative radius for verify-bound");
  cmd->add_option("--strategies", o.strategies,
                  "comma-separated miners for compare-miners");
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out,
        std::ostream& err) {
  Options o;
  CLI::App app{"xcmine: negative-mining-aware extreme classification"};
  app.require_subcommand(1);
  struct Sub {
    const char* name;
    const char* help;
    int (*fn)(const Options&, std::ostream&);
  };
  const Sub subs[] = {
      {"stats", "dataset statistics and bound constants", cmd_stats},
      {"train", "encoder (M1) and classifier (M2) training", cmd_train},
      {"predict", "top-k predictions as TSV", cmd_predict},
      {"evaluate", "P@k, N@k, R@k, PSP@k, PSN@k report", cmd_evaluate},
      {"verify-bound", "exact negative-mining guarantee check", cmd_verify},
      {"compare-miners", "per-epoch P@1 and overhead per miner", cmd_compare},
      {"synth", "write a planted-cluster dataset", cmd_synth},
  };
  std::vector<std::pair<CLI::App*, const Sub*>> commands;
  for (const auto& s : subs) {
    CLI::App* cmd = app.add_subcommand(s.name, s.help);
    add_common(cmd, o);
    commands.emplace_back(cmd, &s);
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kExitConfig;
  }
  try {
    for (const auto& [cmd, sub] : commands) {
      if (cmd->parsed()) return sub->fn(o, out);
    }
    return kExitConfig;
  } catch (const BoundFailure& e) {
    err << "error: " << e.what() << '\n';
    return kExitBound;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const Error& e) {
    err << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  }
}

}  // namespace xcm
