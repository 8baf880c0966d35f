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

#ifndef PONDSIM_CLI_EXPERIMENTS_HPP_
#define PONDSIM_CLI_EXPERIMENTS_HPP_

#include <iosfwd>

#include "pondsim_cli/config.hpp"
#include "pondsim_cli/record.hpp"

namespace pondsim::cli {

// Exit statuses of the pondsim binary.
inline constexpr int kExitPass = 0;
inline constexpr int kExitGateFailure = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitBudget = 3;

// Validates the config, runs the experiment and returns its record. Throws
// UsageError for invalid configurations.
ResultRecord run_experiment(Config config);

// run_experiment followed by write_record and emit_plot_data into the
// configured output directory. Returns the exit status.
int run_and_write(Config config, std::ostream& log);

}  // namespace pondsim::cli

#endif  // PONDSIM_CLI_EXPERIMENTS_HPP_
