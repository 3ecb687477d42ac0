// Copyright 2026 The fmsim Authors
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

namespace fmsim {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed scenario/trace document. `line` is 1-based, 0 when unknown.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line = 0, std::string field = {})
      : Error(what), line_(line), field_(std::move(field)) {}

  std::size_t line() const noexcept { return line_; }
  const std::string& field() const noexcept { return field_; }

 private:
  std::size_t line_;
  std::string field_;
};

/// A configuration invariant does not hold. `field()` names the offending entry.
class ValidationError : public Error {
 public:
  ValidationError(std::string field, const std::string& reason)
      : Error("invalid `" + field + "`: " + reason), field_(std::move(field)) {}

  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

class OutOfRange : public Error {
 public:
  using Error::Error;
};

class NonFiniteInput : public Error {
 public:
  using Error::Error;
};

class InvalidPerception : public Error {
 public:
  using Error::Error;
};

/// Programming error: a state machine was driven with an undefined combination.
class IllegalState : public Error {
 public:
  using Error::Error;
};

class EmptyTrace : public Error {
 public:
  using Error::Error;
};

}  // namespace fmsim
