#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace fcoc {

enum class ErrorCode {
  // numerics
  DegenerateDesign,
  LengthMismatch,
  TooShort,
  NonPositiveInput,
  // fractal
  InvalidConfig,
  ScaleTooLarge,
  AllZeroFluctuations,
  InsufficientScales,
  ImplausibleExponent,
  // chaos
  UnknownType,
  EmptyLibrary,
  InvalidDomain,
  // market
  NonPositivePrice,
  EmptyDay,
  TooFewReturns,
  NonPositiveBPV,
  ConstantFeature,
  UnalignedSeries,
  // synthetic
  InvalidH,
  NonStationaryParams,
  InvalidSpec,
  MalformedInput,
  // forecaster
  InsufficientData,
  DivergedLoss,
  EmptySplit,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::DegenerateDesign: return "DegenerateDesign";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::TooShort: return "TooShort";
    case ErrorCode::NonPositiveInput: return "NonPositiveInput";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::ScaleTooLarge: return "ScaleTooLarge";
    case ErrorCode::AllZeroFluctuations: return "AllZeroFluctuations";
    case ErrorCode::InsufficientScales: return "InsufficientScales";
    case ErrorCode::ImplausibleExponent: return "ImplausibleExponent";
    case ErrorCode::UnknownType: return "UnknownType";
    case ErrorCode::EmptyLibrary: return "EmptyLibrary";
    case ErrorCode::InvalidDomain: return "InvalidDomain";
    case ErrorCode::NonPositivePrice: return "NonPositivePrice";
    case ErrorCode::EmptyDay: return "EmptyDay";
    case ErrorCode::TooFewReturns: return "TooFewReturns";
    case ErrorCode::NonPositiveBPV: return "NonPositiveBPV";
    case ErrorCode::ConstantFeature: return "ConstantFeature";
    case ErrorCode::UnalignedSeries: return "UnalignedSeries";
    case ErrorCode::InvalidH: return "InvalidH";
    case ErrorCode::NonStationaryParams: return "NonStationaryParams";
    case ErrorCode::InvalidSpec: return "InvalidSpec";
    case ErrorCode::MalformedInput: return "MalformedInput";
    case ErrorCode::InsufficientData: return "InsufficientData";
    case ErrorCode::DivergedLoss: return "DivergedLoss";
    case ErrorCode::EmptySplit: return "EmptySplit";
  }
  return "Unknown";
}

/// Every failure raised by the library carries one of the codes above so
/// callers (the CLI in particular) can map them to exit statuses.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

  /// True for failures caused by the numbers rather than by malformed input.
  bool is_numerical() const noexcept {
    switch (code_) {
      case ErrorCode::DivergedLoss:
      case ErrorCode::AllZeroFluctuations:
      case ErrorCode::ImplausibleExponent:
      case ErrorCode::DegenerateDesign:
        return true;
      default:
        return false;
    }
  }

 private:
  ErrorCode code_;
};

}  // namespace fcoc
