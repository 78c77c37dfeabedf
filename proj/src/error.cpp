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

#include "perchsim/error.hpp"

namespace perchsim {

std::string_view to_string(Errc code) {
  switch (code) {
    case Errc::kInvalidArgument: return "InvalidArgument";
    case Errc::kInvalidGeometry: return "InvalidGeometry";
    case Errc::kBelowRange: return "OutOfRangeBelow";
    case Errc::kAboveRange: return "OutOfRangeAbove";
    case Errc::kNoContactConfiguration: return "NoContactConfiguration";
    case Errc::kNegativeNormalForce: return "NegativeNormalForce";
    case Errc::kShapeMismatch: return "ShapeMismatch";
    case Errc::kNoTrunkDetected: return "NoTrunkDetected";
    case Errc::kNoBranchDetected: return "NoBranchDetected";
    case Errc::kZeroLengthSegment: return "ZeroLengthSegment";
    case Errc::kTimeOutOfRange: return "TimeOutOfRange";
    case Errc::kInsufficientData: return "InsufficientData";
    case Errc::kIllConditioned: return "IllConditioned";
    case Errc::kConfigSchema: return "ConfigSchema";
    case Errc::kIo: return "Io";
    case Errc::kSelectionFailed: return "SelectionFailed";
    case Errc::kCapacityExceeded: return "CapacityExceeded";
    case Errc::kTriggerMissed: return "TriggerMissed";
  }
  return "Unknown";
}

}  // namespace perchsim
