/* Copyright 2026 The FilTag Authors. All Rights Reserved.

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

#ifndef FILTAG_LOGGING_H_
#define FILTAG_LOGGING_H_

#include <ostream>
#include <string>

namespace filtag {

enum class LogLevel { kDebug = 0, kInfo = 1, kWarning = 2, kError = 3, kOff = 4 };

// Threshold is read once from FILTAG_LOG (debug|info|warning|error|off);
// default warning. Messages go to stderr unless a sink is installed.
void Log(LogLevel level, const std::string& message);
void SetLogLevel(LogLevel level);
LogLevel GetLogLevel();
// nullptr restores stderr.
void SetLogSink(std::ostream* sink);

}  // namespace filtag

#endif  // FILTAG_LOGGING_H_
