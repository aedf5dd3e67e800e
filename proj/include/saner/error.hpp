// Copyright 2026 The SANER Toolkit Authors.
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

#ifndef SANER_ERROR_HPP_
#define SANER_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace saner {

// Base class for all errors raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed or inconsistent input file (lexicon, VLEB, checkpoint, config).
class FormatError : public Error {
 public:
  using Error::Error;
};

// Arguments violate an operation's precondition (shape, range, unknown key).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// Numerical failure at run time, e.g. a non-finite training loss.
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace saner

#endif  // SANER_ERROR_HPP_
