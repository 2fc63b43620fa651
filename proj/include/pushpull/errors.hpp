/*
 * Copyright 2026 The PushPull Lab Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
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

namespace pushpull {

// Process exit codes used by the command-line driver.
enum class ExitCode : int {
  kOk = 0,
  kContract = 2,
  kData = 3,
  kNumeric = 4,
};

// Violated preconditions and invalid configuration. Maps to exit code 2.
class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Shape or channel mismatch between operands.
class DimensionError : public ContractError {
 public:
  using ContractError::ContractError;
};

// Index outside its admissible range (labels, severities, steps).
class RangeError : public ContractError {
 public:
  using ContractError::ContractError;
};

class ConfigError : public ContractError {
 public:
  using ContractError::ContractError;
};

// Malformed or inconsistent files on disk. Maps to exit code 3.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class FormatError : public DataError {
 public:
  using DataError::DataError;
};

// Checkpoint header and payload disagree.
class CorruptCheckpointError : public DataError {
 public:
  using DataError::DataError;
};

// A corrupted set was generated with a different severity table.
class StalenessError : public DataError {
 public:
  using DataError::DataError;
};

class IoError : public DataError {
 public:
  using DataError::DataError;
};

// NaN/Inf encountered where finite values are required. Maps to exit code 4.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace pushpull
