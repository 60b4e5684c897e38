// Copyright (c) 2026 The xvmtl Authors
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

#ifndef XVMTL_ERRORS_H_
#define XVMTL_ERRORS_H_

#include <stdexcept>
#include <string>

namespace xvmtl {

// Base of every error the toolkit raises. The CLI maps these to exit code 1
// (validation or data problems); anything else escaping is exit code 2.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Inconsistent shapes, invalid hyperparameters, bad flags or config keys.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Malformed or insufficient data: empty utterances, bad labels, missing
// trial classes, unresolvable ids.
class DataError : public Error {
 public:
  using Error::Error;
};

// A sequence shorter than the receptive span of the operation.
class InputTooShortError : public DataError {
 public:
  InputTooShortError(const std::string& what, std::size_t required,
                     std::size_t actual)
      : DataError(what + ": need at least " + std::to_string(required) +
                  " frames, got " + std::to_string(actual)),
        required_(required),
        actual_(actual) {}
  std::size_t required() const { return required_; }
  std::size_t actual() const { return actual_; }

 private:
  std::size_t required_;
  std::size_t actual_;
};

class PoolingError : public DataError {
 public:
  using DataError::DataError;
};

class BatchTooSmallError : public DataError {
 public:
  using DataError::DataError;
};

// API misuse, e.g. backward on a non-scalar or on a consumed tape.
class UsageError : public Error {
 public:
  using Error::Error;
};

class TrainingDivergedError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// Binary/text parse failures. The subclasses let callers tell the causes
// apart without string matching.
class ParseError : public Error {
 public:
  using Error::Error;
};

class BadMagicError : public ParseError {
 public:
  using ParseError::ParseError;
};

class TruncatedError : public ParseError {
 public:
  using ParseError::ParseError;
};

class DimMismatchError : public ParseError {
 public:
  using ParseError::ParseError;
};

// Short class name for messages, most derived first.
inline const char* ErrorKind(const Error& e) {
  if (dynamic_cast<const InputTooShortError*>(&e)) return "InputTooShortError";
  if (dynamic_cast<const PoolingError*>(&e)) return "PoolingError";
  if (dynamic_cast<const BatchTooSmallError*>(&e)) return "BatchTooSmallError";
  if (dynamic_cast<const DataError*>(&e)) return "DataError";
  if (dynamic_cast<const ConfigError*>(&e)) return "ConfigError";
  if (dynamic_cast<const UsageError*>(&e)) return "UsageError";
  if (dynamic_cast<const TrainingDivergedError*>(&e)) return "TrainingDivergedError";
  if (dynamic_cast<const IoError*>(&e)) return "IoError";
  if (dynamic_cast<const BadMagicError*>(&e)) return "BadMagicError";
  if (dynamic_cast<const TruncatedError*>(&e)) return "TruncatedError";
  if (dynamic_cast<const DimMismatchError*>(&e)) return "DimMismatchError";
  if (dynamic_cast<const ParseError*>(&e)) return "ParseError";
  return "Error";
}

}  // namespace xvmtl

#endif  // XVMTL_ERRORS_H_
