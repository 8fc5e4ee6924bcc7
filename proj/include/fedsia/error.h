//
// Copyright 2026 The fedsia Authors
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
//

#ifndef FEDSIA_ERROR_H_
#define FEDSIA_ERROR_H_

#include <stdexcept>
#include <string>

namespace fedsia {

// Base for every error raised by the library. The CLI maps ConfigError to
// exit code 2 and everything else to exit code 3.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Argument outside an operation's documented domain.
class ArgumentError : public Error {
 public:
  using Error::Error;
};

// Tensor or model dimensions that do not line up.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// NaN or infinity encountered in parameters, inputs or results.
class NumericError : public Error {
 public:
  using Error::Error;
};

// Malformed input file. The message names the offending row.
class FormatError : public Error {
 public:
  using Error::Error;
};

// An update that does not fit the active federated protocol.
class ProtocolError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// Raised by the accountant for noisy steps taken with zero noise.
class InfinitePrivacyBudget : public Error {
 public:
  using Error::Error;
};

}  // namespace fedsia

#endif  // FEDSIA_ERROR_H_
