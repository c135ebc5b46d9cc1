// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The biasbeam Authors

#pragma once

#include <stdexcept>
#include <string>

namespace biasbeam {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad invocation or configuration. CLI exit code 1.
class UsageError : public Error {
 public:
  using Error::Error;
};

/// Invalid input data or violated precondition on data. CLI exit code 2.
class DataError : public Error {
 public:
  using Error::Error;
};

/// Numeric failure. CLI exit code 3.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Per-word associations have zero spread, so the effect size is undefined.
class DegenerateVariance : public NumericError {
 public:
  using NumericError::NumericError;
};

/// Training produced a non-finite loss.
class Divergence : public NumericError {
 public:
  using NumericError::NumericError;
};

/// A stratum is too small to train a meaningful embedding.
class InsufficientStratum : public NumericError {
 public:
  using NumericError::NumericError;
};

}  // namespace biasbeam
