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

#include <algorithm>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "pondsim/invasion.hpp"
#include "pondsim_cli/config.hpp"
#include "pondsim_cli/experiments.hpp"

namespace {

std::string experiment_list() {
  std::string s;
  for (const auto& e : pondsim::cli::experiment_names()) s += (s.empty() ? "" : ", ") + e;
  return s;
}

}  // namespace

int main(int argc, char** argv) {
  using namespace pondsim::cli;
  CLI::App app{"pondsim: ponds of invasion percolation on regular trees"};
  app.allow_extras();
  std::string experiment;
  std::string config_file;
  std::string out;
  std::string seed;
  std::string threads;
  app.add_option("experiment", experiment, "one of: " + experiment_list())->required();
  app.add_option("--config", config_file, "key=value configuration file");
  app.add_option("--out", out, "output directory");
  app.add_option("--seed", seed, "master seed");
  app.add_option("--threads", threads, "worker threads (N or auto)");
  app.footer("Any other --key value pair overrides the configuration key of that name.");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitPass : kExitUsage;
  }
  try {
    Config config = config_file.empty() ? Config(experiment)
                                        : Config::from_file(experiment, config_file);
    const std::vector<std::string> extras = app.remaining();
    for (std::size_t i = 0; i < extras.size(); ++i) {
      std::string key = extras[i];
      if (key.rfind("--", 0) != 0) throw UsageError("unexpected argument '" + key + "'");
      key = key.substr(2);
      std::string value;
      const auto eq = key.find('=');
      if (eq != std::string::npos) {
        value = key.substr(eq + 1);
        key = key.substr(0, eq);
      } else {
        if (i + 1 >= extras.size()) throw UsageError("missing value for --" + key);
        value = extras[++i];
      }
      std::replace(key.begin(), key.end(), '-', '_');
      config.set(key, value);
    }
    if (!out.empty()) config.set("out", out);
    if (!seed.empty()) config.set("seed", seed);
    if (!threads.empty()) config.set("threads", threads);
    return run_and_write(std::move(config), std::cout);
  } catch (const UsageError& e) {
    std::cerr << "pondsim: " << e.what() << "\n";
    return kExitUsage;
  } catch (const pondsim::ConfigurationError& e) {
    std::cerr << "pondsim: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "pondsim: error: " << e.what() << "\n";
    return kExitGateFailure;
  }
}
