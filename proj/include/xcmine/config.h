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


#pragma once

#include <map>
#include <string>
#include <vector>

#include "xcmine/ann.h"
#include "xcmine/fusion.h"
#include "xcmine/synth.h"
#include "xcmine/trainer.h"

namespace xcm {

// Flat "key = value" document with dotted key paths. Lines starting with '#'
// are comments. Every recognised key has a default, so an empty file is a
// complete configuration; unknown keys are rejected.
class Config {
 public:
  Config();  // all defaults

  static Config parse(const std::string& text);
  static Config load(const std::string& path);

  // Throws ConfigError for an unknown key.
  void set(const std::string& key, const std::string& value);
  const std::string& get(const std::string& key) const;

  std::string get_string(const std::string& key) const { return get(key); }
  double get_double(const std::string& key) const;
  std::size_t get_size(const std::string& key) const;
  std::uint64_t get_u64(const std::string& key) const;
  bool get_bool(const std::string& key) const;
  std::vector<std::size_t> get_size_list(const std::string& key) const;

  const std::map<std::string, std::string>& values() const { return values_; }
  std::string to_text() const;

 private:
  std::map<std::string, std::string> values_;
};

TrainConfig train_config(const Config& c);
SynthSpec synth_spec(const Config& c);
TreeOptions tree_options(const Config& c);
// index.mode = auto | exact | approximate.
IndexOptions index_options(const Config& c, std::size_t num_vectors);

}  // namespace xcm
