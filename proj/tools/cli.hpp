// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace mind::cli {

enum Exit : int {
  kOk = 0,
  kSchema = 2,
  kClient = 3,
  kThreshold = 4,
  kUsage = 64,
  kData = 65,
  kNoInput = 66,
  kConfigError = 78,
};

/// Runs `mind <args...>` in-process; args exclude the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace mind::cli
