// Copyright 2026 The Distal Authors.
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

#pragma once

#include <stdexcept>
#include <string>

namespace distal {

// Base for every error raised by the library. Subclasses name the contract
// that was violated so callers (and the CLI exit-code mapping) can branch on
// the type.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define DISTAL_DEFINE_ERROR(Name)          \
  class Name : public Error {              \
   public:                                 \
    using Error::Error;                    \
  }

DISTAL_DEFINE_ERROR(ParseError);
DISTAL_DEFINE_ERROR(DimensionError);
DISTAL_DEFINE_ERROR(LabelError);
DISTAL_DEFINE_ERROR(ArgumentError);
DISTAL_DEFINE_ERROR(AcquisitionError);
DISTAL_DEFINE_ERROR(ShapeError);
DISTAL_DEFINE_ERROR(TrainingError);
DISTAL_DEFINE_ERROR(BudgetError);
DISTAL_DEFINE_ERROR(PreconditionError);
DISTAL_DEFINE_ERROR(IndexError);
DISTAL_DEFINE_ERROR(SelectionError);
DISTAL_DEFINE_ERROR(LookupError);
DISTAL_DEFINE_ERROR(AnalysisError);
DISTAL_DEFINE_ERROR(ComparisonError);
DISTAL_DEFINE_ERROR(ConfigError);
DISTAL_DEFINE_ERROR(IoError);

#undef DISTAL_DEFINE_ERROR

}  // namespace distal
