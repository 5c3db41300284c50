#include "survfuse/error.hpp"

namespace survfuse {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::MissingColumn: return "MissingColumn";
    case ErrorKind::DuplicatePatientId: return "DuplicatePatientId";
    case ErrorKind::MalformedRow: return "MalformedRow";
    case ErrorKind::AllMissingColumn: return "AllMissingColumn";
    case ErrorKind::UnimputedRecord: return "UnimputedRecord";
    case ErrorKind::EmptyWindowList: return "EmptyWindowList";
    case ErrorKind::InconsistentDimension: return "InconsistentDimension";
    case ErrorKind::EmptyArray: return "EmptyArray";
    case ErrorKind::DatasetTooSmall: return "DatasetTooSmall";
    case ErrorKind::NonPositiveAge: return "NonPositiveAge";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::NonFiniteInput: return "NonFiniteInput";
    case ErrorKind::NoEvents: return "NoEvents";
    case ErrorKind::SingularInformation: return "SingularInformation";
    case ErrorKind::InvalidDimension: return "InvalidDimension";
    case ErrorKind::DivergedLoss: return "DivergedLoss";
    case ErrorKind::ConstantVariable: return "ConstantVariable";
    case ErrorKind::EmptyChild: return "EmptyChild";
    case ErrorKind::DegenerateData: return "DegenerateData";
    case ErrorKind::MismatchedLengths: return "MismatchedLengths";
    case ErrorKind::MissingModality: return "MissingModality";
    case ErrorKind::ExtraModality: return "ExtraModality";
    case ErrorKind::NoComparablePairs: return "NoComparablePairs";
    case ErrorKind::TooFewResamples: return "TooFewResamples";
    case ErrorKind::DegenerateResampling: return "DegenerateResampling";
    case ErrorKind::EmptyGroup: return "EmptyGroup";
    case ErrorKind::NoNonevents: return "NoNonevents";
    case ErrorKind::TooFewPairs: return "TooFewPairs";
    case ErrorKind::EmptyInput: return "EmptyInput";
    case ErrorKind::NoRvPatients: return "NoRvPatients";
    case ErrorKind::NoDeaths: return "NoDeaths";
    case ErrorKind::InvalidInput: return "InvalidInput";
    case ErrorKind::InvalidSpec: return "InvalidSpec";
    case ErrorKind::IoError: return "IoError";
    case ErrorKind::InvalidConfig: return "InvalidConfig";
    case ErrorKind::SchemaMismatch: return "SchemaMismatch";
    case ErrorKind::UnknownModelKind: return "UnknownModelKind";
    case ErrorKind::Stage: return "Stage";
  }
  return "Unknown";
}

}  // namespace survfuse
