// Copyright (c) 2026 the spawnnet authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace spawnnet {

/// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Invalid or internally inconsistent configuration (bad layer index,
/// mismatched adapter targets, malformed config file, ...). CLI exit code 1.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Bad runtime input (shape mismatch, empty dataset, missing grid, ...).
class InputError : public Error {
 public:
  using Error::Error;
};

/// Tensor/image dimensions incompatible with an operation.
class DimensionError : public InputError {
 public:
  using InputError::InputError;
};

/// Cached artifact does not match the spec/config that is trying to use it.
class StaleCacheError : public Error {
 public:
  using Error::Error;
};

/// A keyed record (image id, trajectory, run record) was not found.
class LookupError : public Error {
 public:
  using Error::Error;
};

/// Operation not valid in the current state (e.g. step() after done).
class StateError : public Error {
 public:
  using Error::Error;
};

/// Instance generation could not satisfy its constraints.
class GenerationError : public Error {
 public:
  using Error::Error;
};

/// Requested operation is not supported for this method/checkpoint kind.
class UnsupportedMethodError : public Error {
 public:
  using Error::Error;
};

}  // namespace spawnnet
