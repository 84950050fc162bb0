// Copyright 2026 The slim Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace slim {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A width outside the stored weight block or the candidate list.
class WidthError : public Error {
 public:
  using Error::Error;
};

class LabelError : public Error {
 public:
  using Error::Error;
};

/// Non-finite value produced while strict mode is on.
class NumericError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class VerificationError : public Error {
 public:
  using Error::Error;
};

class CompatibilityError : public Error {
 public:
  using Error::Error;
};

// Checkpoint / pack loading.
class LoadError : public Error {
 public:
  using Error::Error;
};

class BadMagicError : public LoadError {
 public:
  using LoadError::LoadError;
};

class ChecksumError : public LoadError {
 public:
  using LoadError::LoadError;
};

class ManifestError : public LoadError {
 public:
  using LoadError::LoadError;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace slim
