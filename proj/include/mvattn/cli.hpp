//  Copyright (c) 2026 The mvattn Authors
//
//  Licensed under the Apache License, Version 2.0 (the "License");
//  you may not use this file except in compliance with the License.
//  You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
//  Unless required by applicable law or agreed to in writing, software
//  distributed under the License is distributed on an "AS IS" BASIS,
//  WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
//  See the License for the specific language governing permissions and
//  limitations under the License.

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace mvattn::cli {

/// Exit status contract shared by every subcommand.
enum ExitCode : int { kSuccess = 0, kCheckFailed = 1, kUsage = 2 };

/// Entry point for `mvattn <verify|bench|rig|equiv|regress-demo> [flags]`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace mvattn::cli
