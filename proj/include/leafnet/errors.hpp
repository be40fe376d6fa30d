// Copyright 2026 The leafnet Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef LEAFNET_ERRORS_HPP_
#define LEAFNET_ERRORS_HPP_

#include <stdexcept>

namespace leafnet {

/// Root of every exception thrown by leafnet.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad flags or malformed configuration. CLI exit code 1.
class UsageError : public Error {
 public:
  using Error::Error;
};

/// Broken, missing or corrupt input data. CLI exit code 2.
class DataError : public Error {
 public:
  using Error::Error;
};

/// Numeric failures and violated numeric contracts. CLI exit code 3.
class NumericError : public Error {
 public:
  using Error::Error;
};

#define LEAFNET_DEFINE_ERROR(NAME, BASE) \
  class NAME : public BASE {             \
   public:                               \
    using BASE::BASE;                    \
  }

// tensor_autodiff
LEAFNET_DEFINE_ERROR(ShapeMismatch, NumericError);
LEAFNET_DEFINE_ERROR(InvalidStride, NumericError);
LEAFNET_DEFINE_ERROR(NotScalar, NumericError);
LEAFNET_DEFINE_ERROR(NonFinite, NumericError);

// nn_blocks
LEAFNET_DEFINE_ERROR(InvalidProbability, NumericError);
LEAFNET_DEFINE_ERROR(InvalidSpec, NumericError);

// scaling
LEAFNET_DEFINE_ERROR(InvalidCoefficient, NumericError);
LEAFNET_DEFINE_ERROR(InvalidBase, NumericError);
LEAFNET_DEFINE_ERROR(EmptyResult, NumericError);

// augment
LEAFNET_DEFINE_ERROR(InvalidTarget, NumericError);
LEAFNET_DEFINE_ERROR(InvalidScale, NumericError);
LEAFNET_DEFINE_ERROR(InvalidGrid, NumericError);
LEAFNET_DEFINE_ERROR(ZeroStd, NumericError);

// metrics_losses
LEAFNET_DEFINE_ERROR(DegenerateColumn, NumericError);
LEAFNET_DEFINE_ERROR(AllColumnsDegenerate, NumericError);

// optim / selftrain
LEAFNET_DEFINE_ERROR(EmptyDataset, DataError);
LEAFNET_DEFINE_ERROR(EmptyUnlabeledSet, DataError);
LEAFNET_DEFINE_ERROR(ColumnOrderMismatch, DataError);

// ensemble
LEAFNET_DEFINE_ERROR(EmptyEnsemble, NumericError);
LEAFNET_DEFINE_ERROR(ClassCountMismatch, NumericError);

// cli_io
LEAFNET_DEFINE_ERROR(MissingImage, DataError);
LEAFNET_DEFINE_ERROR(MalformedCsv, DataError);
LEAFNET_DEFINE_ERROR(UnsupportedImageFormat, DataError);
LEAFNET_DEFINE_ERROR(ChecksumMismatch, DataError);
LEAFNET_DEFINE_ERROR(VersionUnsupported, DataError);
LEAFNET_DEFINE_ERROR(Truncated, DataError);
LEAFNET_DEFINE_ERROR(IoError, DataError);
LEAFNET_DEFINE_ERROR(ConfigError, UsageError);

#undef LEAFNET_DEFINE_ERROR

}  // namespace leafnet

#endif  // LEAFNET_ERRORS_HPP_
