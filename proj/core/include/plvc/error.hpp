/* Copyright 2026 The PLVC Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#ifndef PLVC_ERROR_HPP_
#define PLVC_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace plvc {

// Error categories map onto distinct process exit codes in the CLI.
enum class ErrorKind {
  kConfig = 2,     // invalid arguments, incompatible settings
  kIo = 3,         // filesystem / image / file format problems
  kModel = 4,      // shape mismatch, divergence, checkpoint incompatibility
  kBitstream = 5,  // malformed, truncated or mismatched bitstreams
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(ErrorKind::kConfig, what) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(ErrorKind::kIo, what) {}
};

class ModelError : public Error {
 public:
  explicit ModelError(const std::string& what) : Error(ErrorKind::kModel, what) {}
};

class BitstreamError : public Error {
 public:
  explicit BitstreamError(const std::string& what)
      : Error(ErrorKind::kBitstream, what) {}
};

}  // namespace plvc

#endif  // PLVC_ERROR_HPP_
