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

#include "filtag/errors.h"

namespace filtag {

const char* ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kIndex: return "index";
    case ErrorCode::kDomain: return "domain";
    case ErrorCode::kShape: return "shape";
    case ErrorCode::kParse: return "parse";
    case ErrorCode::kData: return "data";
    case ErrorCode::kIo: return "io";
    case ErrorCode::kDuplicateRecord: return "duplicate_record";
    case ErrorCode::kSchema: return "schema";
    case ErrorCode::kChecksum: return "checksum";
    case ErrorCode::kMissingShard: return "missing_shard";
    case ErrorCode::kNegativeActivation: return "negative_activation";
    case ErrorCode::kIncompleteDump: return "incomplete_dump";
    case ErrorCode::kSchemaMismatch: return "schema_mismatch";
    case ErrorCode::kContamination: return "contamination";
    case ErrorCode::kUsage: return "usage";
  }
  return "unknown";
}

}  // namespace filtag
