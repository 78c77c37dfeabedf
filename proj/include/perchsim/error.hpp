// Copyright 2026 The perchsim Authors.
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

#ifndef PERCHSIM_ERROR_HPP_
#define PERCHSIM_ERROR_HPP_

#include <stdexcept>
#include <string>
#include <string_view>

namespace perchsim {

// Every failure the library reports carries one of these codes so callers
// (the CLI in particular) can branch on the kind without parsing messages.
enum class Errc {
  kInvalidArgument,
  kInvalidGeometry,
  kBelowRange,
  kAboveRange,
  kNoContactConfiguration,
  kNegativeNormalForce,
  kShapeMismatch,
  kNoTrunkDetected,
  kNoBranchDetected,
  kZeroLengthSegment,
  kTimeOutOfRange,
  kInsufficientData,
  kIllConditioned,
  kConfigSchema,
  kIo,
  kSelectionFailed,
  kCapacityExceeded,
  kTriggerMissed,
};

std::string_view to_string(Errc code);

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace perchsim

#endif  // PERCHSIM_ERROR_HPP_
