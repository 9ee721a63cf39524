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

#include "distal/config.hpp"

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <functional>
#include <sstream>

#include "distal/errors.hpp"
#include "distal/io.hpp"

namespace distal {

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value, const std::string& expected) {
  throw ConfigError("config key '" + key + "': cannot parse '" + value + "' (expected " + expected + ")");
}

template <typename T>
T parse_number(const std::string& key, const std::string& value, const char* expected) {
  T out{};
  const char* end = value.data() + value.size();
  auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc() || ptr != end) bad_value(key, value, expected);
  return out;
}

double as_double(const std::string& k, const std::string& v) { return parse_number<double>(k, v, "a number"); }
int as_int(const std::string& k, const std::string& v) { return parse_number<int>(k, v, "an integer"); }
std::uint64_t as_u64(const std::string& k, const std::string& v) {
  return parse_number<std::uint64_t>(k, v, "a non-negative integer");
}

bool as_bool(const std::string& k, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  bad_value(k, v, "true or false");
}

std::string num(double v) { return format_double(v); }

struct KeySpec {
  std::string name;
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;  // null: not echoed
};

// Wraps enum parsers so their ArgumentError surfaces as a ConfigError.
template <typename F>
auto named(const std::string& key, const std::string& value, F parse) {
  try {
    return parse(value);
  } catch (const ArgumentError& e) {
    throw ConfigError("config key '" + key + "': " + e.what());
  }
}

const std::vector<KeySpec>& key_specs() {
  static const std::vector<KeySpec> specs = [] {
    std::vector<KeySpec> s;
    auto add = [&](std::string name, auto set, auto get) { s.push_back({std::move(name), set, get}); };
    add("dataset.name", [](RunConfig& c, const std::string& v) { c.dataset.name = v; },
        [](const RunConfig& c) { return c.dataset.name; });
    add("dataset.source", [](RunConfig& c, const std::string& v) { c.dataset.source = v; },
        [](const RunConfig& c) { return c.dataset.source; });
    add("dataset.dims", [](RunConfig& c, const std::string& v) { c.dataset.dims = as_int("dataset.dims", v); },
        [](const RunConfig& c) { return std::to_string(c.dataset.dims); });
    add("dataset.classes",
        [](RunConfig& c, const std::string& v) { c.dataset.classes = as_int("dataset.classes", v); },
        [](const RunConfig& c) { return std::to_string(c.dataset.classes); });
    add("dataset.n", [](RunConfig& c, const std::string& v) { c.dataset.synth.n = as_int("dataset.n", v); },
        [](const RunConfig& c) { return std::to_string(c.dataset.synth.n); });
    add("dataset.sep", [](RunConfig& c, const std::string& v) { c.dataset.synth.sep = as_double("dataset.sep", v); },
        [](const RunConfig& c) { return num(c.dataset.synth.sep); });
    add("dataset.seed", [](RunConfig& c, const std::string& v) { c.dataset.synth.seed = as_u64("dataset.seed", v); },
        [](const RunConfig& c) { return std::to_string(c.dataset.synth.seed); });
    add(
        "dataset.split",
        [](RunConfig& c, const std::string& v) {
          const auto parts = split_list(v);
          if (parts.size() != 3) bad_value("dataset.split", v, "three fractions train,dev,test");
          for (std::size_t i = 0; i < 3; ++i) c.dataset.split[i] = as_double("dataset.split", parts[i]);
        },
        [](const RunConfig& c) {
          return num(c.dataset.split[0]) + "," + num(c.dataset.split[1]) + "," + num(c.dataset.split[2]);
        });
    add("strategy",
        [](RunConfig& c, const std::string& v) { c.strategy = named("strategy", v, parse_strategy); },
        [](const RunConfig& c) { return to_string(c.strategy); });
    add("mode", [](RunConfig& c, const std::string& v) { c.mode = named("mode", v, parse_mode); },
        [](const RunConfig& c) { return to_string(c.mode); });
    add("initial_fraction",
        [](RunConfig& c, const std::string& v) { c.initial_fraction = as_double("initial_fraction", v); },
        [](const RunConfig& c) { return num(c.initial_fraction); });
    add("per_round_fraction",
        [](RunConfig& c, const std::string& v) { c.per_round_fraction = as_double("per_round_fraction", v); },
        [](const RunConfig& c) { return num(c.per_round_fraction); });
    add("rounds", [](RunConfig& c, const std::string& v) { c.rounds = as_int("rounds", v); },
        [](const RunConfig& c) { return std::to_string(c.rounds); });
    add("model.arch", [](RunConfig& c, const std::string& v) { c.arch = named("model.arch", v, parse_arch); },
        [](const RunConfig& c) { return to_string(c.arch); });
    add("model.hidden", [](RunConfig& c, const std::string& v) { c.hidden = as_int("model.hidden", v); },
        [](const RunConfig& c) { return std::to_string(c.hidden); });
    add("train.learning_rate",
        [](RunConfig& c, const std::string& v) { c.train.learning_rate = as_double("train.learning_rate", v); },
        [](const RunConfig& c) { return num(c.train.learning_rate); });
    add("train.epochs", [](RunConfig& c, const std::string& v) { c.train.epochs = as_int("train.epochs", v); },
        [](const RunConfig& c) { return std::to_string(c.train.epochs); });
    add("train.batch_size",
        [](RunConfig& c, const std::string& v) { c.train.batch_size = as_int("train.batch_size", v); },
        [](const RunConfig& c) { return std::to_string(c.train.batch_size); });
    add("train.alpha", [](RunConfig& c, const std::string& v) { c.train.alpha = as_double("train.alpha", v); },
        [](const RunConfig& c) { return num(c.train.alpha); });
    add("train.beta1", [](RunConfig& c, const std::string& v) { c.train.beta1 = as_double("train.beta1", v); },
        [](const RunConfig& c) { return num(c.train.beta1); });
    add("train.beta2", [](RunConfig& c, const std::string& v) { c.train.beta2 = as_double("train.beta2", v); },
        [](const RunConfig& c) { return num(c.train.beta2); });
    add("train.adam_eps",
        [](RunConfig& c, const std::string& v) { c.train.adam_eps = as_double("train.adam_eps", v); },
        [](const RunConfig& c) { return num(c.train.adam_eps); });
    add(
        "train.distill_scope",
        [](RunConfig& c, const std::string& v) {
          if (v == "labeled") c.distill_scope = DistillScope::labeled;
          else if (v == "queries") c.distill_scope = DistillScope::queries;
          else bad_value("train.distill_scope", v, "labeled or queries");
        },
        [](const RunConfig& c) { return std::string(c.distill_scope == DistillScope::labeled ? "labeled" : "queries"); });
    add("noise.ratio", [](RunConfig& c, const std::string& v) { c.noise.ratio = as_double("noise.ratio", v); },
        [](const RunConfig& c) { return num(c.noise.ratio); });
    add(
        "noise.start",
        [](RunConfig& c, const std::string& v) {
          if (v == "none") {
            c.noise.start = NoiseConfig::Start::none;
          } else if (v == "phase") {
            c.noise.start = NoiseConfig::Start::phase;
          } else {
            c.noise.start = NoiseConfig::Start::round;
            c.noise.start_round = parse_number<int>("noise.start", v, "none, phase or a round number");
          }
        },
        [](const RunConfig& c) {
          switch (c.noise.start) {
            case NoiseConfig::Start::none: return std::string("none");
            case NoiseConfig::Start::phase: return std::string("phase");
            case NoiseConfig::Start::round: return std::to_string(c.noise.start_round);
          }
          return std::string("none");
        });
    add("phase.boundary",
        [](RunConfig& c, const std::string& v) { c.phase_boundary = as_int("phase.boundary", v); },
        [](const RunConfig& c) { return std::to_string(c.phase_boundary); });
    add(
        "seeds",
        [](RunConfig& c, const std::string& v) {
          c.seeds.clear();
          for (const auto& part : split_list(v)) c.seeds.push_back(as_u64("seeds", part));
          if (c.seeds.empty()) bad_value("seeds", v, "a comma-separated list of seeds");
        },
        nullptr);
    // Execution-only keys: not part of the echo, so they never change the hash.
    add("workers", [](RunConfig& c, const std::string& v) { c.workers = as_int("workers", v); }, nullptr);
    add("output.snapshots",
        [](RunConfig& c, const std::string& v) { c.save_snapshots = as_bool("output.snapshots", v); }, nullptr);
    return s;
  }();
  return specs;
}

const KeySpec& spec_for(const std::string& key) {
  for (const auto& s : key_specs())
    if (s.name == key) return s;
  throw ConfigError("unknown config key '" + key + "'");
}

}  // namespace

void ConfigFile::set(const std::string& key, const std::string& value) {
  if (key.rfind("sweep.", 0) == 0) {
    const std::string target = key.substr(6);
    spec_for(target);
    auto values = split_list(value);
    auto it = std::find_if(sweep.begin(), sweep.end(), [&](const auto& a) { return a.first == target; });
    if (it == sweep.end()) {
      sweep.emplace_back(target, std::move(values));
    } else {
      it->second = std::move(values);
    }
    return;
  }
  spec_for(key);
  for (auto& [k, v] : values) {
    if (k == key) {
      v = value;
      return;
    }
  }
  values.emplace_back(key, value);
}

const std::string* ConfigFile::find(const std::string& key) const {
  for (const auto& [k, v] : values)
    if (k == key) return &v;
  return nullptr;
}

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> out;
    for (const auto& s : key_specs()) out.push_back(s.name);
    return out;
  }();
  return keys;
}

ConfigFile parse_config(const std::string& text, const std::string& origin) {
  ConfigFile file;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected 'key = value'");
    }
    const std::string key = trim(std::string_view(line).substr(0, eq));
    const std::string value = trim(std::string_view(line).substr(eq + 1));
    if (key.empty()) throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty key");
    file.set(key, value);
  }
  return file;
}

ConfigFile load_config(const std::string& path) {
  if (!std::filesystem::is_regular_file(path)) throw ConfigError("config file not found: " + path);
  const std::string text = read_file(path);
  if (std::filesystem::path(path).extension() != ".json") return parse_config(text, path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
  if (!j.contains("config") || !j.at("config").is_object()) throw ConfigError(path + ": no 'config' object");
  ConfigFile file;
  for (const auto& [k, v] : j.at("config").items()) {
    file.set(k, v.is_string() ? v.get<std::string>() : v.dump());
  }
  return file;
}

void apply_override(ConfigFile& file, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) throw ConfigError("override '" + assignment + "' is not key=value");
  file.set(trim(std::string_view(assignment).substr(0, eq)), trim(std::string_view(assignment).substr(eq + 1)));
}

void apply_key(RunConfig& cfg, const std::string& key, const std::string& value) {
  spec_for(key).set(cfg, value);
}

RunConfig resolve_config(const ConfigFile& file) {
  RunConfig cfg;
  for (const auto& [k, v] : file.values) apply_key(cfg, k, v);
  try {
    cfg.validate();
  } catch (const ArgumentError& e) {
    throw ConfigError(e.what());
  }
  return cfg;
}

std::vector<std::vector<std::pair<std::string, std::string>>> sweep_grid(const ConfigFile& file) {
  std::vector<std::vector<std::pair<std::string, std::string>>> grid{{}};
  for (const auto& [key, values] : file.sweep) {
    if (values.empty()) throw ConfigError("sweep axis 'sweep." + key + "' has no values");
    std::vector<std::vector<std::pair<std::string, std::string>>> next;
    for (const auto& point : grid) {
      for (const auto& v : values) {
        auto p = point;
        p.emplace_back(key, v);
        next.push_back(std::move(p));
      }
    }
    grid = std::move(next);
  }
  return grid;
}

nlohmann::ordered_json config_echo_json(const RunConfig& cfg, std::uint64_t seed) {
  nlohmann::ordered_json j;
  for (const auto& s : key_specs()) {
    if (s.name == "seeds") {
      j["seeds"] = std::to_string(seed);
    } else if (s.get) {
      j[s.name] = s.get(cfg);
    }
  }
  return j;
}

std::string config_echo_text(const RunConfig& cfg, std::uint64_t seed) {
  std::string out;
  const auto echo = config_echo_json(cfg, seed);
  for (const auto& [k, v] : echo.items()) out += k + " = " + v.get<std::string>() + "\n";
  return out;
}

}  // namespace distal
