// Copyright 2026 The assignkit Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <stdexcept>
#include <string>

namespace assignkit {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A precondition on an argument was violated (bad box, bad config, ...).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// Shapes of two inputs disagree (class counts, matrix extents).
class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

// The requested assignment cannot exist, e.g. fewer predictions than
// ground truths for a one-to-one matching.
class Infeasible : public Error {
 public:
  using Error::Error;
};

// A quantity is mathematically undefined for the given inputs.
class Undefined : public Error {
 public:
  using Error::Error;
};

// Malformed input file. `what()` carries the line/field context.
class ParseError : public Error {
 public:
  using Error::Error;
};

// Well-formed JSON that does not follow the expected schema.
class SchemaError : public Error {
 public:
  using Error::Error;
};

}  // namespace assignkit
