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

#ifndef PONDSIM_CLI_CONFIG_HPP_
#define PONDSIM_CLI_CONFIG_HPP_

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace pondsim::cli {

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class ValueType { kInt, kUInt, kReal, kString, kUIntList, kRealList };

struct KeySpec {
  ValueType type;
  std::string default_value;
  bool positive = false;  // numeric values (or every list entry) must be > 0
};

// Experiment names accepted on the command line.
const std::vector<std::string>& experiment_names();

// Keys accepted for an experiment, including the common ones.
const std::map<std::string, KeySpec>& schema(const std::string& experiment);

// Flat key=value configuration. Lines are "key = value"; '#' starts a
// comment. Later assignments override earlier ones.
class Config {
 public:
  Config() = default;
  explicit Config(std::string experiment);

  static Config from_text(const std::string& experiment, const std::string& text);
  static Config from_file(const std::string& experiment, const std::string& path);

  const std::string& experiment() const { return experiment_; }

  // Raw assignment; rejects unknown keys.
  void set(const std::string& key, const std::string& value);

  // Validates every value and fills in defaults. Called by run_experiment.
  void finalize();

  std::int64_t get_int(const std::string& key) const;
  std::uint64_t get_uint(const std::string& key) const;
  double get_real(const std::string& key) const;
  std::string get_string(const std::string& key) const;
  std::vector<std::uint64_t> get_uint_list(const std::string& key) const;
  std::vector<double> get_real_list(const std::string& key) const;
  bool is_set(const std::string& key) const { return values_.count(key) > 0; }

  // Sorted key=value lines with normalized numbers; threads and out are
  // excluded because they cannot change any result.
  std::string canonical() const;
  std::map<std::string, std::string> canonical_map() const;
  std::uint64_t hash() const;
  std::string hash_hex() const;

 private:
  const std::string& raw(const std::string& key) const;

  std::string experiment_;
  std::map<std::string, std::string> values_;
};

std::uint64_t fnv1a64(const std::string& data);

// Locale-independent shortest round-trip formatting.
std::string format_real(double x);

}  // namespace pondsim::cli

#endif  // PONDSIM_CLI_CONFIG_HPP_
