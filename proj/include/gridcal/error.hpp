/*
 * Copyright 2026 The GridCAL Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
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
#include <vector>

namespace gridcal {

// Broad failure classes; the CLI maps them onto exit codes.
enum class ErrorKind {
  kUsage,      // bad arguments or configuration
  kData,       // unreadable or malformed input
  kModel,      // input parses but violates a model invariant
  kNumerical,  // singular system, bridge outage, rank deficiency
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class UsageError : public Error {
 public:
  explicit UsageError(const std::string& what) : Error(ErrorKind::kUsage, what) {}
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, int line)
      : Error(ErrorKind::kData,
              line > 0 ? "line " + std::to_string(line) + ": " + what : what),
        line_(line) {}
  int line() const noexcept { return line_; }

 private:
  int line_;
};

class ModelError : public Error {
 public:
  explicit ModelError(const std::string& what) : Error(ErrorKind::kModel, what) {}
};

class NumericalError : public Error {
 public:
  explicit NumericalError(const std::string& what)
      : Error(ErrorKind::kNumerical, what) {}
};

/// Raised when a topology splits the energized buses into several islands.
/// `components()` lists the bus ids of each island, largest first.
class IslandingError : public ModelError {
 public:
  IslandingError(const std::string& what, std::vector<std::vector<int>> components)
      : ModelError(what), components_(std::move(components)) {}
  const std::vector<std::vector<int>>& components() const noexcept {
    return components_;
  }

 private:
  std::vector<std::vector<int>> components_;
};

/// Outage of a bridge branch: the LODF denominator 1 - PTDF_kk vanishes.
class BridgeError : public NumericalError {
 public:
  BridgeError(const std::string& what, int branch)
      : NumericalError(what), branch_(branch) {}
  int branch() const noexcept { return branch_; }

 private:
  int branch_;
};

}  // namespace gridcal
