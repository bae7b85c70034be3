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

#include "filtag/logging.h"

#include <atomic>
#include <cstdlib>
#include <iostream>
#include <mutex>

namespace filtag {
namespace {

LogLevel LevelFromEnv() {
  const char* env = std::getenv("FILTAG_LOG");
  if (env == nullptr) return LogLevel::kWarning;
  const std::string v(env);
  if (v == "debug") return LogLevel::kDebug;
  if (v == "info") return LogLevel::kInfo;
  if (v == "error") return LogLevel::kError;
  if (v == "off") return LogLevel::kOff;
  return LogLevel::kWarning;
}

std::atomic<int>& Threshold() {
  static std::atomic<int> level{static_cast<int>(LevelFromEnv())};
  return level;
}

std::mutex& SinkMutex() {
  static std::mutex mu;
  return mu;
}

std::ostream*& Sink() {
  static std::ostream* sink = nullptr;
  return sink;
}

const char* Prefix(LogLevel level) {
  switch (level) {
    case LogLevel::kDebug: return "debug";
    case LogLevel::kInfo: return "info";
    case LogLevel::kWarning: return "warning";
    case LogLevel::kError: return "error";
    case LogLevel::kOff: break;
  }
  return "";
}

}  // namespace

void Log(LogLevel level, const std::string& message) {
  if (static_cast<int>(level) < Threshold().load()) return;
  std::lock_guard<std::mutex> lock(SinkMutex());
  std::ostream& out = Sink() != nullptr ? *Sink() : std::cerr;
  out << "filtag: " << Prefix(level) << ": " << message << "\n";
}

void SetLogLevel(LogLevel level) { Threshold().store(static_cast<int>(level)); }

LogLevel GetLogLevel() { return static_cast<LogLevel>(Threshold().load()); }

void SetLogSink(std::ostream* sink) {
  std::lock_guard<std::mutex> lock(SinkMutex());
  Sink() = sink;
}

}  // namespace filtag
