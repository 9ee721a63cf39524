// Copyright 2026 The Distal Authors.
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

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "distal/engine.hpp"

namespace distal {

// Flat declarative config. Grammar, one entry per line:
//
//   key = value        # trailing comments allowed
//   sweep.key = v1, v2, ...
//
// Keys are dotted paths into RunConfig (see config_keys()). Blank lines and
// lines starting with '#' are ignored. A repeated key keeps the last value.
struct ConfigFile {
  std::vector<std::pair<std::string, std::string>> values;               // in file order
  std::vector<std::pair<std::string, std::vector<std::string>>> sweep;  // grid axes

  void set(const std::string& key, const std::string& value);
  const std::string* find(const std::string& key) const;
};

/// Every key accepted by apply_key, in echo order.
const std::vector<std::string>& config_keys();

ConfigFile parse_config(const std::string& text, const std::string& origin = "<config>");

/// Reads a config file. A `.json` file is taken to be a run.json and its
/// `config` echo is used.
ConfigFile load_config(const std::string& path);

/// Applies one `key=value` override; overrides win over file values.
void apply_override(ConfigFile& file, const std::string& assignment);

/// Sets one dotted key. Throws ConfigError naming the key on unknown keys or
/// unparsable values.
void apply_key(RunConfig& cfg, const std::string& key, const std::string& value);

/// Resolves the non-sweep entries onto defaults and validates the result.
/// Validation failures are reported as ConfigError.
RunConfig resolve_config(const ConfigFile& file);

/// Cartesian product of the sweep axes, first axis slowest. Each element is
/// the list of (key, value) assignments for one grid point.
std::vector<std::vector<std::pair<std::string, std::string>>> sweep_grid(const ConfigFile& file);

/// Canonical resolved config for one seed, as dotted key -> string value.
/// Feeding it back through resolve_config reproduces `cfg` for that seed.
nlohmann::ordered_json config_echo_json(const RunConfig& cfg, std::uint64_t seed);
std::string config_echo_text(const RunConfig& cfg, std::uint64_t seed);

}  // namespace distal
