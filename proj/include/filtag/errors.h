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

#ifndef FILTAG_ERRORS_H_
#define FILTAG_ERRORS_H_

#include <stdexcept>
#include <string>

namespace filtag {

// Every failure raised by the library carries one of these codes so that
// callers (the CLI, the Python module) can map it to an exit status or a
// specific exception type without parsing messages.
enum class ErrorCode {
  kIndex,
  kDomain,
  kShape,
  kParse,
  kData,
  kIo,
  kDuplicateRecord,
  kSchema,
  kChecksum,
  kMissingShard,
  kNegativeActivation,
  kIncompleteDump,
  kSchemaMismatch,
  kContamination,
  kUsage,
};

const char* ErrorCodeName(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace filtag

#endif  // FILTAG_ERRORS_H_
