/*
 * Copyright 2026 The v2nc Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *    http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <stdexcept>
#include <string>

namespace v2nc {

/// Base of every error raised by the library. The CLI maps any Error to a
/// nonzero exit code and prints what().
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define V2NC_DEFINE_ERROR(Name)          \
  class Name : public Error {            \
   public:                               \
    using Error::Error;                  \
  }

// volume_io
V2NC_DEFINE_ERROR(MalformedHeader);
V2NC_DEFINE_ERROR(UnsupportedDatatype);
V2NC_DEFINE_ERROR(TruncatedData);
V2NC_DEFINE_ERROR(IoFailure);
V2NC_DEFINE_ERROR(ParseError);

// tensor / networks
V2NC_DEFINE_ERROR(ShapeMismatch);
V2NC_DEFINE_ERROR(NotScalar);
V2NC_DEFINE_ERROR(ConfigInvalid);
V2NC_DEFINE_ERROR(CheckpointVersionMismatch);

// pipeline
V2NC_DEFINE_ERROR(EmptyDataset);
V2NC_DEFINE_ERROR(MissingMask);
V2NC_DEFINE_ERROR(MissingLabel);
V2NC_DEFINE_ERROR(DivergedLoss);
V2NC_DEFINE_ERROR(SingleClassDataset);

// metrics
V2NC_DEFINE_ERROR(EmptyInput);
V2NC_DEFINE_ERROR(SingleClass);

#undef V2NC_DEFINE_ERROR

class DuplicateCaseId : public Error {
 public:
  explicit DuplicateCaseId(std::string case_id)
      : Error("duplicate case_id \"" + case_id + "\""), case_id_(std::move(case_id)) {}
  const std::string& case_id() const noexcept { return case_id_; }

 private:
  std::string case_id_;
};

}  // namespace v2nc
