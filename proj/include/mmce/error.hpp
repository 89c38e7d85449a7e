/* Copyright 2026 The mmce Authors. All Rights Reserved.

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

#ifndef MMCE_ERROR_HPP_
#define MMCE_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace mmce {

enum class ErrorCode {
  Io,
  Parse,
  Duplicate,
  OutOfRange,
  InvalidArgument,
  DimensionMismatch,
  EmptyInput,
};

const char* to_string(ErrorCode code) noexcept;

/// Every failure raised by the core carries a code so the C layer can map it
/// onto a status value without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace mmce

#endif  // MMCE_ERROR_HPP_
