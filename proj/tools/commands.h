// Copyright 2026 The syndistill Authors.
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

// Subcommands of the syndistill tool.

#ifndef SYNDISTILL_TOOLS_COMMANDS_H_
#define SYNDISTILL_TOOLS_COMMANDS_H_

#include <ostream>
#include <string>
#include <vector>

#include "run_config.h"

namespace syndistill::cli {

// gen-data, train-teacher, distill, eval, probe, induce, gradcheck.
const std::vector<std::string>& command_names();

// Runs one command with a resolved config, writing its report to `out`.
// Returns the exit code; errors are thrown.
int run_command(const std::string& command, const RunConfig& config, std::ostream& out);

// Full argument handling. Failures print one JSON line
// {"error": kind, "message": text} to `err` and return nonzero.
int main_entry(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace syndistill::cli

#endif  // SYNDISTILL_TOOLS_COMMANDS_H_
