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

#ifndef FILTAG_SRC_CLI_COMMANDS_H_
#define FILTAG_SRC_CLI_COMMANDS_H_

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "filtag/tagging.h"

namespace filtag::cli {

// Everything a subcommand can be configured with.
struct RunConfig {
  std::string subcommand;
  std::string model;
  std::string images;
  std::string dump;
  std::string store;
  std::string out_dir;
  std::vector<int64_t> k;
  std::vector<double> q;
  std::vector<uint32_t> n{1};
  std::optional<double> split_fraction;
  std::optional<uint64_t> seed;
  std::optional<uint32_t> image;
  int threads = 1;
  std::string format;

  // make-edge-world only.
  uint32_t per_class = 40;
  std::vector<std::string> stripe_classes{"vertical", "horizontal"};
  double label_noise = 0.0;
  float noise = 0.1f;

  // Exactly one of k / q, validated; throws kUsage otherwise.
  SelectionMethod SingleMethod() const;
  // nullopt when neither k nor q was given.
  std::optional<SelectionMethod> OptionalMethod() const;
  // Canonical JSON of the configuration, minus the output location.
  std::string CanonicalJson() const;
  // --out, or runs/<subcommand>-<crc32 of the canonical config>.
  std::string ResolveOutDir() const;
};

struct Streams {
  std::ostream& out;
  std::ostream& err;
};

int CmdMakeEdgeWorld(const RunConfig& cfg, Streams io);
int CmdDumpActivations(const RunConfig& cfg, Streams io);
int CmdTag(const RunConfig& cfg, Streams io);
int CmdExplain(const RunConfig& cfg, Streams io);
int CmdEvaluate(const RunConfig& cfg, Streams io);
int CmdSweep(const RunConfig& cfg, Streams io);
int CmdAnalyzeErrors(const RunConfig& cfg, Streams io);

}  // namespace filtag::cli

#endif  // FILTAG_SRC_CLI_COMMANDS_H_
