// Copyright (c) 2026 The xvmtl Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef XVMTL_LOG_H_
#define XVMTL_LOG_H_

#include <iostream>
#include <string_view>

namespace xvmtl {

enum class LogLevel { kInfo = 0, kWarning = 1, kSilent = 2 };

// Process-wide threshold; tests and the acceptance runner raise it to keep
// output readable.
LogLevel& LogThreshold();

inline void LogInfo(std::string_view message) {
  if (LogThreshold() <= LogLevel::kInfo) std::cerr << "LOG " << message << '\n';
}

inline void LogWarning(std::string_view message) {
  if (LogThreshold() <= LogLevel::kWarning) {
    std::cerr << "WARNING " << message << '\n';
  }
}

}  // namespace xvmtl

#endif  // XVMTL_LOG_H_
