#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace survfuse {

enum class ErrorKind {
  // dataset
  MissingColumn,
  DuplicatePatientId,
  MalformedRow,
  AllMissingColumn,
  UnimputedRecord,
  EmptyWindowList,
  InconsistentDimension,
  EmptyArray,
  DatasetTooSmall,
  // pesi
  NonPositiveAge,
  // numerics shared by the model modules
  DimensionMismatch,
  NonFiniteInput,
  NoEvents,
  SingularInformation,
  InvalidDimension,
  DivergedLoss,
  ConstantVariable,
  EmptyChild,
  DegenerateData,
  MismatchedLengths,
  MissingModality,
  ExtraModality,
  // metrics
  NoComparablePairs,
  TooFewResamples,
  DegenerateResampling,
  EmptyGroup,
  NoNonevents,
  TooFewPairs,
  // analysis
  EmptyInput,
  NoRvPatients,
  NoDeaths,
  InvalidInput,
  // synthetic / cli
  InvalidSpec,
  IoError,
  InvalidConfig,
  SchemaMismatch,
  UnknownModelKind,
  Stage,
};

std::string_view to_string(ErrorKind kind) noexcept;

/// Every failure raised by the library carries a machine-checkable kind.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message),
        kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Wraps a failure from one pipeline stage; the stage name prefixes the message.
class StageError : public Error {
 public:
  StageError(std::string stage, const Error& cause)
      : Error(ErrorKind::Stage, "[" + stage + "] " + cause.what()),
        stage_(std::move(stage)),
        cause_kind_(cause.kind()) {}

  const std::string& stage() const noexcept { return stage_; }
  ErrorKind cause_kind() const noexcept { return cause_kind_; }

 private:
  std::string stage_;
  ErrorKind cause_kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

}  // namespace survfuse
