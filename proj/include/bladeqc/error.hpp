// Copyright 2026 The BladeQC Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef BLADEQC_ERROR_HPP_
#define BLADEQC_ERROR_HPP_

#include <stdexcept>
#include <string>
#include <string_view>

namespace bladeqc {

/// Stable error categories. The service maps each one to a fixed HTTP status
/// and the CLI maps them to exit codes.
enum class ErrorCode {
  validation,          // 400
  not_found,           // 404
  conflict,            // 409
  illegal_transition,  // 422
  io,                  // 500 / exit 2
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::validation: return "validation_error";
    case ErrorCode::not_found: return "not_found";
    case ErrorCode::conflict: return "conflict";
    case ErrorCode::illegal_transition: return "illegal_transition";
    case ErrorCode::io: return "io_error";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message, std::string detail = {})
      : std::runtime_error(message), code_(code), detail_(std::move(detail)) {}

  ErrorCode code() const noexcept { return code_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message,
                              std::string detail = {}) {
  throw Error(code, message, std::move(detail));
}

}  // namespace bladeqc

#endif  // BLADEQC_ERROR_HPP_
