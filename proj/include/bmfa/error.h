// Copyright (c) 2026 The BMFA Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef BMFA_ERROR_H_
#define BMFA_ERROR_H_

#include <stdexcept>
#include <string>

namespace bmfa {

// Rejected input: shape mismatches, bad configuration, out-of-range labels.
// The CLI maps this to exit code 1.
class InvalidInput : public std::invalid_argument {
 public:
  explicit InvalidInput(const std::string& what)
      : std::invalid_argument(what) {}
};

// Non-finite values, divergence, degenerate data. CLI exit code 2.
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

// Malformed, truncated, or future-versioned files, and missing files.
// CLI exit code 2.
class FormatError : public std::runtime_error {
 public:
  explicit FormatError(const std::string& what) : std::runtime_error(what) {}
};

#define BMFA_REQUIRE(cond, msg)                        \
  do {                                                 \
    if (!(cond)) throw ::bmfa::InvalidInput(msg);      \
  } while (0)

}  // namespace bmfa

#endif  // BMFA_ERROR_H_
