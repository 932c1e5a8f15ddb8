#pragma once

// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 Reinfer Contributors

#include <stdexcept>
#include <string>

namespace reinfer {

/// Every failure the library can raise, one code per contract violation.
enum class ErrorCode {
  InvalidArgument,
  DegenerateDistribution,
  InvalidOptionCount,
  InvalidLabel,
  InvalidProportion,
  UndefinedStatistic,
  EmptyGrid,
  IncompleteLog,
  ParseError,
  ValidationError,
  EmptyDataset,
  MissingLogprobs,
  PromptConstruction,
  TransportError,
  ProtocolError,
  BudgetExceeded,
  InvalidSimConfig,
  IOFailure,
  ManifestMismatch,
  CorruptManifest,
  SchemaVersionUnsupported,
  DatasetDigestMismatch,
  IntegrityFailure,
};

inline const char* error_code_name(ErrorCode c) {
  switch (c) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::DegenerateDistribution: return "DegenerateDistribution";
    case ErrorCode::InvalidOptionCount: return "InvalidOptionCount";
    case ErrorCode::InvalidLabel: return "InvalidLabel";
    case ErrorCode::InvalidProportion: return "InvalidProportion";
    case ErrorCode::UndefinedStatistic: return "UndefinedStatistic";
    case ErrorCode::EmptyGrid: return "EmptyGrid";
    case ErrorCode::IncompleteLog: return "IncompleteLog";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::ValidationError: return "ValidationError";
    case ErrorCode::EmptyDataset: return "EmptyDataset";
    case ErrorCode::MissingLogprobs: return "MissingLogprobs";
    case ErrorCode::PromptConstruction: return "PromptConstruction";
    case ErrorCode::TransportError: return "TransportError";
    case ErrorCode::ProtocolError: return "ProtocolError";
    case ErrorCode::BudgetExceeded: return "BudgetExceeded";
    case ErrorCode::InvalidSimConfig: return "InvalidSimConfig";
    case ErrorCode::IOFailure: return "IOFailure";
    case ErrorCode::ManifestMismatch: return "ManifestMismatch";
    case ErrorCode::CorruptManifest: return "CorruptManifest";
    case ErrorCode::SchemaVersionUnsupported: return "SchemaVersionUnsupported";
    case ErrorCode::DatasetDigestMismatch: return "DatasetDigestMismatch";
    case ErrorCode::IntegrityFailure: return "IntegrityFailure";
  }
  return "UnknownError";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

/// Process exit codes used by the CLI: 0 success, 2 validation error,
/// 3 backend/budget error, 4 integrity failure.
inline int exit_code_for(ErrorCode c) {
  switch (c) {
    case ErrorCode::TransportError:
    case ErrorCode::ProtocolError:
    case ErrorCode::BudgetExceeded:
    case ErrorCode::IOFailure:
      return 3;
    case ErrorCode::ManifestMismatch:
    case ErrorCode::CorruptManifest:
    case ErrorCode::SchemaVersionUnsupported:
    case ErrorCode::DatasetDigestMismatch:
    case ErrorCode::IntegrityFailure:
      return 4;
    default:
      return 2;
  }
}

}  // namespace reinfer
