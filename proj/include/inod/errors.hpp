// Copyright 2026 The INoD Authors. All Rights Reserved.
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

namespace inod {

// Base of every error the library throws. The CLI maps subclasses onto exit
// codes: usage/config/format problems exit 2, runtime data problems exit 3.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Tensor or grid extents disagree.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// A scalar argument is out of its valid domain.
class ArgumentError : public Error {
 public:
  using Error::Error;
};

// Two configurations (or a config and a checkpoint) do not match, or a
// config file contains an invalid or unknown key.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Normalization statistics are unusable (e.g. zero standard deviation).
class StatisticsError : public Error {
 public:
  using Error::Error;
};

// A file could not be parsed in the expected format.
class FormatError : public Error {
 public:
  using Error::Error;
};

// Input data is missing or unreadable at run time.
class DataError : public Error {
 public:
  using Error::Error;
};

}  // namespace inod
