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

#ifndef PONDSIM_CLI_RECORD_HPP_
#define PONDSIM_CLI_RECORD_HPP_

#include <cstdint>
#include <map>
#include <string>
#include <variant>
#include <vector>

namespace pondsim::cli {

struct Metric {
  std::string name;
  double value = 0.0;
  double stderr_ = 0.0;
  double threshold = 0.0;
  std::string comparison;  // "<", ">", "<=", "in", "==" or "" when informational
  bool gated = false;
  bool pass = true;
};

using Cell = std::variant<std::int64_t, std::uint64_t, double, std::string>;

// One CSV file: name.csv with a header row.
struct Table {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;
};

// One gnuplot data file: name.dat, '#' comment header then whitespace
// separated numeric columns.
struct PlotData {
  std::string name;
  std::vector<std::string> comments;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
};

struct ResultRecord {
  std::string experiment;
  std::string config_hash;
  std::map<std::string, std::string> config;
  std::uint64_t seed = 0;
  std::vector<Metric> metrics;
  std::vector<Table> tables;
  std::vector<PlotData> plots;
  std::vector<std::string> warnings;
  bool budget_exhausted = false;
  // Kept out of results.json so that reruns are byte-identical.
  double wall_seconds = 0.0;
  unsigned threads = 1;

  Metric& gate(std::string name, double value, double threshold, std::string comparison,
               bool pass, double stderr_ = 0.0);
  Metric& info(std::string name, double value, double stderr_ = 0.0);

  bool all_pass() const;
  // 0 pass, 1 gate failure, 3 budget exhausted.
  int exit_code() const;
};

std::string to_json(const ResultRecord& record);
ResultRecord record_from_json(const std::string& text);

std::string to_csv(const Table& table);
std::string to_dat(const PlotData& plot);
std::string summary_text(const ResultRecord& record);

// Writes results.json, summary.txt and one CSV per table into dir.
void write_record(const ResultRecord& record, const std::string& dir);

// Writes one .dat file per plot; returns the paths written. Records without
// metrics produce no files and a warning on stderr.
std::vector<std::string> emit_plot_data(const ResultRecord& record, const std::string& dir);

}  // namespace pondsim::cli

#endif  // PONDSIM_CLI_RECORD_HPP_
