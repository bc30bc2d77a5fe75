/* Copyright 2026 The PLVC Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#ifndef PLVC_TOOLS_CLI_HPP_
#define PLVC_TOOLS_CLI_HPP_

#include <ostream>
#include <string>
#include <vector>

namespace plvc::cli {

// Runs one `plvc` invocation. `args` excludes the program name. Results go
// to `out`; line-oriented JSON logs go to `log`. Returns the exit code:
// 0 success, 2 config, 3 I/O, 4 model, 5 bitstream, 1 anything else.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& log);

}  // namespace plvc::cli

#endif  // PLVC_TOOLS_CLI_HPP_
