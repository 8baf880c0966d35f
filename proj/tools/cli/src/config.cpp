// Copyright 2026 The pondsim Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "pondsim_cli/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace pondsim::cli {
namespace {

using Schema = std::map<std::string, KeySpec>;

constexpr auto kInt = ValueType::kInt;
constexpr auto kUInt = ValueType::kUInt;
constexpr auto kReal = ValueType::kReal;
constexpr auto kString = ValueType::kString;
constexpr auto kUIntList = ValueType::kUIntList;
constexpr auto kRealList = ValueType::kRealList;

Schema with_common(Schema s, const std::string& shard_size) {
  s.emplace("sigma", KeySpec{kInt, "2", true});
  s.emplace("seed", KeySpec{kUInt, "1"});
  s.emplace("threads", KeySpec{kString, "1"});
  s.emplace("out", KeySpec{kString, "."});
  s.emplace("experiment", KeySpec{kString, ""});
  s.emplace("shard_size", KeySpec{kUInt, shard_size, true});
  s.emplace("work_budget", KeySpec{kUInt, "68719476736", true});
  return s;
}

std::map<std::string, Schema> build_schemas() {
  std::map<std::string, Schema> m;
  m["chain"] = with_common({{"n", {kUInt, "5", true}},
                            {"replicates", {kUInt, "1", true}},
                            {"ks_n", {kUIntList, "1,2,5,10", true}},
                            {"ks_threshold", {kReal, "0.01", true}},
                            {"min_ks_replicates", {kUInt, "1000", true}},
                            {"max_rows", {kUInt, "1000"}}},
                           "10000");
  m["invasion"] = with_common({{"steps", {kUInt, "100000", true}},
                               {"replicates", {kUInt, "1", true}},
                               {"safety_fraction", {kReal, "0.5"}},
                               {"margin_factor", {kReal, "10"}},
                               {"dump_trace", {kUInt, "0"}},
                               {"memory_budget", {kUInt, "4294967296", true}},
                               {"window_start", {kUInt, "10000", true}},
                               {"critical_excess", {kReal, "0.05", true}},
                               {"fraction_threshold", {kReal, "0.001", true}}},
                              "10");
  m["cross-validate"] = with_common({{"replicates", {kUInt, "10000", true}},
                                     {"steps", {kUInt, "100000", true}},
                                     {"ponds", {kUInt, "1", true}},
                                     {"safety_fraction", {kReal, "0.5"}},
                                     {"margin_factor", {kReal, "10"}},
                                     {"reference_factor", {kUInt, "10", true}},
                                     {"volume_mean_cap", {kReal, "100", true}},
                                     {"ks_threshold", {kReal, "0.02", true}},
                                     {"mean_gap_threshold", {kReal, "0.05", true}},
                                     {"abort_fraction", {kReal, "0.1", true}},
                                     {"drift_steps", {kUInt, "1000000", true}},
                                     {"drift_replicates", {kUInt, "1000"}},
                                     {"drift_alpha", {kReal, "0.01", true}}},
                                    "100");
  m["defects"] = with_common({{"k_max", {kUInt, "1000000", true}},
                              {"n_max", {kUInt, "3"}},
                              {"p", {kString, "pc"}},
                              {"k_grid", {kUIntList, "100,1000,10000,100000,1000000", true}},
                              {"limit_k", {kUInt, "10000", true}},
                              {"limit_tolerance", {kReal, "0.025", true}},
                              {"ratio_bound", {kReal, "3", true}},
                              {"mc_reps", {kUInt, "0"}},
                              {"mc_k", {kUIntList, "4,6", true}},
                              {"mc_z", {kReal, "4", true}}},
                             "100000");
  m["tails"] = with_common({{"quantities", {kString, "L,V"}},
                            {"n", {kUIntList, "1,2", true}},
                            {"k_grid", {kUIntList, "1000,10000,100000", true}},
                            {"replicates", {kUInt, "200000", true}},
                            {"length_replicates", {kUInt, "10000000", true}},
                            {"ratio_bound", {kReal, "3", true}},
                            {"limit_tolerance", {kReal, "0.15", true}},
                            {"min_hits", {kUInt, "100", true}},
                            {"quadrature_k", {kUIntList, "100,10000", true}},
                            {"quadrature_limit_tolerance", {kReal, "0.05", true}},
                            {"mc_z", {kReal, "4", true}}},
                           "10000");
  m["lln-clt"] = with_common({{"n", {kUInt, "400", true}},
                              {"replicates", {kUInt, "10000", true}},
                              {"t_grid", {kRealList, "0.25,0.5,0.75,1", true}},
                              {"asymptotic_delta", {kReal, "0.001"}},
                              {"z_threshold", {kReal, "5", true}},
                              {"ks_threshold", {kReal, "0.03", true}},
                              {"increment_t1", {kReal, "0.25", true}},
                              {"increment_t2", {kReal, "0.75", true}},
                              {"increment_tolerance", {kReal, "0.1", true}},
                              {"hist_bins", {kUInt, "40", true}}},
                             "500");
  m["ldp"] = with_common({{"q_n", {kUIntList, "100,400", true}},
                          {"q_u", {kRealList, "0.5,2", true}},
                          {"q_tolerance", {kReal, "0.05", true}},
                          {"psi_u_step", {kReal, "0.1", true}},
                          {"psi_u_max", {kReal, "3", true}},
                          {"grid_step", {kReal, "0.0001", true}},
                          {"psi_tolerance", {kReal, "1e-06", true}},
                          {"l_n", {kUInt, "30", true}},
                          {"l_u", {kRealList, "0.4,0.5,0.7,1.3,1.6,2", true}},
                          {"l_replicates", {kUInt, "10000000", true}},
                          {"l_tolerance", {kReal, "0.15", true}}},
                         "1000000");
  m["report"] = with_common({{"inputs", {kString, ""}}}, "1");
  return m;
}

const std::map<std::string, Schema>& schemas() {
  static const auto s = build_schemas();
  return s;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, sep)) out.push_back(trim(item));
  return out;
}

template <class T>
bool parse_number(const std::string& s, T& out) {
  const char* b = s.data();
  const char* e = b + s.size();
  if (b != e && *b == '+') ++b;
  auto [ptr, ec] = std::from_chars(b, e, out);
  return ec == std::errc() && ptr == e;
}

// Integers may be written as 1e5; they must be exact.
template <class T>
bool parse_integer(const std::string& s, T& out) {
  if (parse_number(s, out)) return true;
  double d = 0.0;
  if (!parse_number(s, d) || !std::isfinite(d) || d != std::floor(d)) return false;
  if (d < static_cast<double>(std::numeric_limits<T>::lowest()) ||
      d >= static_cast<double>(std::numeric_limits<T>::max())) {
    return false;
  }
  out = static_cast<T>(d);
  return true;
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value,
                            const std::string& why) {
  throw UsageError("invalid value '" + value + "' for key '" + key + "': " + why);
}

std::string normalize(const std::string& key, const KeySpec& spec, const std::string& value) {
  switch (spec.type) {
    case ValueType::kInt: {
      std::int64_t v = 0;
      if (!parse_integer(value, v)) bad_value(key, value, "expected an integer");
      if (spec.positive && v <= 0) bad_value(key, value, "must be positive");
      return std::to_string(v);
    }
    case ValueType::kUInt: {
      std::uint64_t v = 0;
      if (!value.empty() && value[0] == '-') bad_value(key, value, "must be nonnegative");
      if (!parse_integer(value, v)) bad_value(key, value, "expected a nonnegative integer");
      if (spec.positive && v == 0) bad_value(key, value, "must be positive");
      return std::to_string(v);
    }
    case ValueType::kReal: {
      double v = 0.0;
      if (!parse_number(value, v) || !std::isfinite(v)) bad_value(key, value, "expected a number");
      if (spec.positive && !(v > 0.0)) bad_value(key, value, "must be positive");
      return format_real(v);
    }
    case ValueType::kString: return value;
    case ValueType::kUIntList:
    case ValueType::kRealList: {
      const auto items = split(value, ',');
      if (items.empty()) bad_value(key, value, "empty list");
      KeySpec item{spec.type == ValueType::kUIntList ? ValueType::kUInt : ValueType::kReal, "",
                   spec.positive};
      std::string out;
      for (std::size_t i = 0; i < items.size(); ++i) {
        if (i) out += ',';
        out += normalize(key, item, items[i]);
      }
      return out;
    }
  }
  return value;
}

}  // namespace

const std::vector<std::string>& experiment_names() {
  static const std::vector<std::string> names = {"chain",   "invasion", "cross-validate",
                                                 "defects", "tails",    "lln-clt",
                                                 "ldp",     "report"};
  return names;
}

const std::map<std::string, KeySpec>& schema(const std::string& experiment) {
  const auto it = schemas().find(experiment);
  if (it == schemas().end()) throw UsageError("unknown experiment '" + experiment + "'");
  return it->second;
}

Config::Config(std::string experiment) : experiment_(std::move(experiment)) {
  schema(experiment_);
}

Config Config::from_text(const std::string& experiment, const std::string& text) {
  Config c(experiment);
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw UsageError("config line " + std::to_string(lineno) + ": expected key=value");
    }
    c.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return c;
}

Config Config::from_file(const std::string& experiment, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot read config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return from_text(experiment, ss.str());
}

void Config::set(const std::string& key, const std::string& value) {
  const auto& s = schema(experiment_);
  if (!s.count(key)) {
    throw UsageError("unknown key '" + key + "' for experiment '" + experiment_ + "'");
  }
  if (key == "experiment" && !value.empty() && value != experiment_) {
    throw UsageError("config is for experiment '" + value + "', not '" + experiment_ + "'");
  }
  values_[key] = value;
}

void Config::finalize() {
  for (const auto& [key, spec] : schema(experiment_)) {
    auto it = values_.find(key);
    const std::string raw_value = it == values_.end() ? spec.default_value : it->second;
    values_[key] = normalize(key, spec, raw_value);
  }
  values_["experiment"] = experiment_;
  const std::string& threads = values_["threads"];
  if (threads != "auto") {
    std::int64_t t = 0;
    if (!parse_integer(threads, t) || t < 1) bad_value("threads", threads, "expected N >= 1 or auto");
  }
  if (get_int("sigma") < 2 || get_int("sigma") > 255) {
    bad_value("sigma", raw("sigma"), "must lie in [2, 255]");
  }
}

const std::string& Config::raw(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) throw UsageError("missing key '" + key + "'");
  return it->second;
}

std::int64_t Config::get_int(const std::string& key) const {
  std::int64_t v = 0;
  if (!parse_integer(raw(key), v)) bad_value(key, raw(key), "expected an integer");
  return v;
}

std::uint64_t Config::get_uint(const std::string& key) const {
  std::uint64_t v = 0;
  if (!parse_integer(raw(key), v)) bad_value(key, raw(key), "expected an integer");
  return v;
}

double Config::get_real(const std::string& key) const {
  double v = 0.0;
  if (!parse_number(raw(key), v)) bad_value(key, raw(key), "expected a number");
  return v;
}

std::string Config::get_string(const std::string& key) const { return raw(key); }

std::vector<std::uint64_t> Config::get_uint_list(const std::string& key) const {
  std::vector<std::uint64_t> out;
  for (const auto& item : split(raw(key), ',')) {
    std::uint64_t v = 0;
    if (!parse_integer(item, v)) bad_value(key, raw(key), "expected integers");
    out.push_back(v);
  }
  return out;
}

std::vector<double> Config::get_real_list(const std::string& key) const {
  std::vector<double> out;
  for (const auto& item : split(raw(key), ',')) {
    double v = 0.0;
    if (!parse_number(item, v)) bad_value(key, raw(key), "expected numbers");
    out.push_back(v);
  }
  return out;
}

std::map<std::string, std::string> Config::canonical_map() const {
  std::map<std::string, std::string> m = values_;
  m.erase("threads");
  m.erase("out");
  return m;
}

std::string Config::canonical() const {
  std::string out;
  for (const auto& [k, v] : canonical_map()) out += k + "=" + v + "\n";
  return out;
}

std::uint64_t Config::hash() const { return fnv1a64(canonical()); }

std::string Config::hash_hex() const {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hash()));
  return buf;
}

std::uint64_t fnv1a64(const std::string& data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string format_real(double x) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, ptr);
}

}  // namespace pondsim::cli
