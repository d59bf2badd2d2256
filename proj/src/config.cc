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


#include "xcmine/config.h"

#include <charconv>
#include <fstream>
#include <sstream>

namespace xcm {
namespace {

const std::map<std::string, std::string>& defaults() {
  static const std::map<std::string, std::string> d = {
      {"seed", "0"},
      {"threads", "1"},
      {"data.points", ""},
      {"data.label_features", ""},
      {"data.test_points", ""},
      {"encoder.dim", "64"},
      {"train.gamma", "0.3"},
      {"train.loss", "hinge"},
      {"train.m1.epochs", "300"},
      {"train.m1.learning_rate", "0.0001"},
      {"train.m2.epochs", "50"},
      {"train.m2.learning_rate", "0.001"},
      {"train.adam.beta1", "0.9"},
      {"train.adam.beta2", "0.999"},
      {"train.adam.epsilon", "1e-8"},
      {"train.eval_sample", "1000"},
      {"train.stop_at_p1", "0"},
      {"miner.strategy", "ngame"},
      {"miner.batch_size", "64"},
      {"miner.cluster_size", "8"},
      {"miner.refresh_interval", "5"},
      {"miner.radius", "2.0"},
      {"miner.max_negatives", "5"},
      {"miner.curriculum.enabled", "false"},
      {"miner.curriculum.doubling_period", "25"},
      {"miner.curriculum.max_cluster_size", "64"},
      {"fusion.enabled", "true"},
      {"fusion.max_depth", "7"},
      {"fusion.min_leaf", "16"},
      {"fusion.validation_size", "10000"},
      {"predict.k", "5"},
      {"predict.shortlist", "0"},
      {"index.mode", "auto"},
      {"index.degree", "24"},
      {"index.breadth", "128"},
      {"eval.ks", "1,3,5"},
      {"eval.propensity_a", "0.55"},
      {"eval.propensity_b", "1.5"},
      {"verify.radius", "0.6"},
      {"synth.num_clusters", "8"},
      {"synth.points_per_cluster", "50"},
      {"synth.labels_per_cluster", "10"},
      {"synth.vocab_size", "0"},
      {"synth.overlap", "1.0"},
      {"synth.noise", "0.05"},
      {"synth.cluster_tokens", "8"},
      {"synth.label_tokens", "2"},
      {"synth.tokens_per_point", "6"},
      {"synth.positives_per_point", "1"},
  };
  return d;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& v) {
  T out{};
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) {
    throw ConfigError(key + ": cannot parse '" + v + "'");
  }
  return out;
}

}  // namespace

Config::Config() : values_(defaults()) {}

Config Config::parse(const std::string& text) {
  Config c;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(line_no) +
                        ": expected key = value");
    }
    c.set(trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
  }
  return c;
}

Config Config::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

void Config::set(const std::string& key, const std::string& value) {
  auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("unknown config key '" + key + "'");
  it->second = value;
}

const std::string& Config::get(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("unknown config key '" + key + "'");
  return it->second;
}

double Config::get_double(const std::string& key) const {
  return parse_number<double>(key, get(key));
}

std::size_t Config::get_size(const std::string& key) const {
  return parse_number<std::size_t>(key, get(key));
}

std::uint64_t Config::get_u64(const std::string& key) const {
  return parse_number<std::uint64_t>(key, get(key));
}

bool Config::get_bool(const std::string& key) const {
  const auto& v = get(key);
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError(key + ": expected true or false, got '" + v + "'");
}

std::vector<std::size_t> Config::get_size_list(const std::string& key) const {
  std::vector<std::size_t> out;
  std::stringstream ss(get(key));
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(parse_number<std::size_t>(key, item));
  }
  if (out.empty()) throw ConfigError(key + ": empty list");
  return out;
}

std::string Config::to_text() const {
  std::ostringstream os;
  for (const auto& [k, v] : values_) os << k << " = " << v << '\n';
  return os.str();
}

TrainConfig train_config(const Config& c) {
  TrainConfig t;
  t.seed = c.get_u64("seed");
  t.gamma = c.get_double("train.gamma");
  t.loss = parse_loss_kind(c.get("train.loss"));
  t.m1_epochs = c.get_size("train.m1.epochs");
  t.m1_learning_rate = c.get_double("train.m1.learning_rate");
  t.m2_epochs = c.get_size("train.m2.epochs");
  t.m2_learning_rate = c.get_double("train.m2.learning_rate");
  t.beta1 = c.get_double("train.adam.beta1");
  t.beta2 = c.get_double("train.adam.beta2");
  t.adam_epsilon = c.get_double("train.adam.epsilon");
  t.eval_sample = c.get_size("train.eval_sample");
  t.stop_at_p1 = c.get_double("train.stop_at_p1");
  auto& m = t.miner;
  m.strategy = parse_strategy(c.get("miner.strategy"));
  m.batch_size = c.get_size("miner.batch_size");
  m.cluster_size = c.get_size("miner.cluster_size");
  m.refresh_interval = c.get_size("miner.refresh_interval");
  m.radius = c.get_double("miner.radius");
  m.max_negatives = c.get_size("miner.max_negatives");
  m.curriculum.enabled = c.get_bool("miner.curriculum.enabled");
  m.curriculum.doubling_period = c.get_size("miner.curriculum.doubling_period");
  m.curriculum.max_cluster_size =
      c.get_size("miner.curriculum.max_cluster_size");
  t.validate();
  return t;
}

SynthSpec synth_spec(const Config& c) {
  SynthSpec s;
  s.seed = c.get_u64("seed");
  s.dim = c.get_size("encoder.dim");
  s.num_clusters = c.get_size("synth.num_clusters");
  s.points_per_cluster = c.get_size("synth.points_per_cluster");
  s.labels_per_cluster = c.get_size("synth.labels_per_cluster");
  s.vocab_size = c.get_size("synth.vocab_size");
  s.overlap = c.get_double("synth.overlap");
  s.noise = c.get_double("synth.noise");
  s.cluster_tokens = c.get_size("synth.cluster_tokens");
  s.label_tokens = c.get_size("synth.label_tokens");
  s.tokens_per_point = c.get_size("synth.tokens_per_point");
  s.positives_per_point = c.get_size("synth.positives_per_point");
  s.validate();
  return s;
}

TreeOptions tree_options(const Config& c) {
  TreeOptions t;
  t.max_depth = c.get_size("fusion.max_depth");
  t.min_leaf = c.get_size("fusion.min_leaf");
  if (t.max_depth > 7) throw ConfigError("fusion.max_depth must be <= 7");
  return t;
}

IndexOptions index_options(const Config& c, std::size_t num_vectors) {
  const auto& mode = c.get("index.mode");
  IndexOptions o;
  if (mode == "auto") {
    o = IndexOptions::Auto(num_vectors);
  } else if (mode == "exact") {
    o.mode = IndexMode::kExact;
  } else if (mode == "approximate") {
    o.mode = IndexMode::kApproximate;
  } else {
    throw ConfigError("index.mode must be auto, exact or approximate");
  }
  o.degree = c.get_size("index.degree");
  o.breadth = c.get_size("index.breadth");
  o.seed = derive_seed(c.get_u64("seed"), 0x1d7);
  return o;
}

}  // namespace xcm
