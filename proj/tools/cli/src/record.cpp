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

#include "pondsim_cli/record.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "json.hpp"
#include "pondsim_cli/config.hpp"

namespace pondsim::cli {
namespace {

using nlohmann::json;

// JSON has no infinities; they are spelled out as strings.
json number(double x) {
  if (std::isfinite(x)) return x;
  if (std::isnan(x)) return "nan";
  return x > 0 ? "inf" : "-inf";
}

double from_number(const json& j) {
  if (j.is_number()) return j.get<double>();
  const std::string s = j.get<std::string>();
  if (s == "inf") return INFINITY;
  if (s == "-inf") return -INFINITY;
  return NAN;
}

std::string cell_text(const Cell& c) {
  return std::visit(
      [](const auto& v) -> std::string {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, std::string>) {
          return v;
        } else if constexpr (std::is_same_v<T, double>) {
          return format_real(v);
        } else {
          return std::to_string(v);
        }
      },
      c);
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << text;
}

}  // namespace

Metric& ResultRecord::gate(std::string name, double value, double threshold,
                           std::string comparison, bool pass, double stderr_) {
  metrics.push_back({std::move(name), value, stderr_, threshold, std::move(comparison), true, pass});
  return metrics.back();
}

Metric& ResultRecord::info(std::string name, double value, double stderr_) {
  metrics.push_back({std::move(name), value, stderr_, 0.0, "", false, true});
  return metrics.back();
}

bool ResultRecord::all_pass() const {
  return std::all_of(metrics.begin(), metrics.end(),
                     [](const Metric& m) { return !m.gated || m.pass; });
}

int ResultRecord::exit_code() const {
  if (budget_exhausted) return 3;
  return all_pass() ? 0 : 1;
}

std::string to_json(const ResultRecord& r) {
  json j;
  j["experiment"] = r.experiment;
  j["config_hash"] = r.config_hash;
  j["config"] = r.config;
  j["seed"] = r.seed;
  j["budget_exhausted"] = r.budget_exhausted;
  j["pass"] = r.all_pass();
  json metrics = json::array();
  for (const auto& m : r.metrics) {
    metrics.push_back({{"name", m.name},
                       {"value", number(m.value)},
                       {"stderr", number(m.stderr_)},
                       {"threshold", number(m.threshold)},
                       {"comparison", m.comparison},
                       {"gated", m.gated},
                       {"pass", m.pass}});
  }
  j["metrics"] = metrics;
  json tables = json::array();
  for (const auto& t : r.tables) {
    tables.push_back({{"name", t.name}, {"file", t.name + ".csv"}, {"columns", t.columns},
                      {"rows", t.rows.size()}});
  }
  j["tables"] = tables;
  j["warnings"] = r.warnings;
  return j.dump(2) + "\n";
}

ResultRecord record_from_json(const std::string& text) {
  const json j = json::parse(text);
  ResultRecord r;
  r.experiment = j.at("experiment").get<std::string>();
  r.config_hash = j.at("config_hash").get<std::string>();
  r.config = j.at("config").get<std::map<std::string, std::string>>();
  r.seed = j.at("seed").get<std::uint64_t>();
  r.budget_exhausted = j.at("budget_exhausted").get<bool>();
  for (const auto& m : j.at("metrics")) {
    r.metrics.push_back({m.at("name").get<std::string>(), from_number(m.at("value")),
                         from_number(m.at("stderr")), from_number(m.at("threshold")),
                         m.at("comparison").get<std::string>(), m.at("gated").get<bool>(),
                         m.at("pass").get<bool>()});
  }
  if (j.contains("warnings")) r.warnings = j.at("warnings").get<std::vector<std::string>>();
  return r;
}

std::string to_csv(const Table& t) {
  std::string out;
  for (std::size_t i = 0; i < t.columns.size(); ++i) out += (i ? "," : "") + t.columns[i];
  out += "\n";
  for (const auto& row : t.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out += (i ? "," : "") + cell_text(row[i]);
    out += "\n";
  }
  return out;
}

std::string to_dat(const PlotData& p) {
  std::string out;
  for (const auto& c : p.comments) out += "# " + c + "\n";
  out += "#";
  for (const auto& c : p.columns) out += " " + c;
  out += "\n";
  for (const auto& row : p.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out += (i ? " " : "") + format_real(row[i]);
    out += "\n";
  }
  return out;
}

std::string summary_text(const ResultRecord& r) {
  std::ostringstream s;
  s << "experiment: " << r.experiment << "\n"
    << "config hash: " << r.config_hash << "\n"
    << "seed: " << r.seed << "\n"
    << "threads: " << r.threads << "\n"
    << "wall clock: " << r.wall_seconds << " s\n\n";
  for (const auto& m : r.metrics) {
    s << (m.gated ? (m.pass ? "PASS " : "FAIL ") : "     ") << m.name << " = " << format_real(m.value);
    if (m.stderr_ > 0) s << " +- " << format_real(m.stderr_);
    if (m.gated) s << "  (" << m.comparison << " " << format_real(m.threshold) << ")";
    s << "\n";
  }
  for (const auto& w : r.warnings) s << "warning: " << w << "\n";
  if (r.budget_exhausted) s << "work budget exhausted: results are partial\n";
  s << "\noverall: " << (r.all_pass() ? "PASS" : "FAIL") << "\n";
  return s.str();
}

void write_record(const ResultRecord& r, const std::string& dir) {
  std::filesystem::create_directories(dir);
  const std::filesystem::path d(dir);
  write_file(d / "results.json", to_json(r));
  write_file(d / "summary.txt", summary_text(r));
  for (const auto& t : r.tables) write_file(d / (t.name + ".csv"), to_csv(t));
}

std::vector<std::string> emit_plot_data(const ResultRecord& r, const std::string& dir) {
  std::vector<std::string> written;
  if (r.metrics.empty()) {
    std::cerr << "warning: no metrics in record '" << r.experiment << "'; no plot data written\n";
    return written;
  }
  std::filesystem::create_directories(dir);
  for (const auto& p : r.plots) {
    const auto path = std::filesystem::path(dir) / (p.name + ".dat");
    write_file(path, to_dat(p));
    written.push_back(path.string());
  }
  return written;
}

}  // namespace pondsim::cli
