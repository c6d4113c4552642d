#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace kerrflow {

enum class ErrorCode {
  NonpositiveMass,
  ExtremalOrSuper,
  OutsideChart,
  ChartDomain,
  HorizonSingular,
  NoBracket,
  ZeroSpatialPart,
  OnAxis,
  NotNull,
  DegenerateZero,
  PositivityViolation,
  DivisionDomain,
  NotInKHat,
  NoRoot,
  SecondRoot,
  OnAxisInPolarChart,
  StepBudgetExceeded,
  TolFailure,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::NonpositiveMass: return "NonpositiveMass";
    case ErrorCode::ExtremalOrSuper: return "ExtremalOrSuper";
    case ErrorCode::OutsideChart: return "OutsideChart";
    case ErrorCode::ChartDomain: return "ChartDomain";
    case ErrorCode::HorizonSingular: return "HorizonSingular";
    case ErrorCode::NoBracket: return "NoBracket";
    case ErrorCode::ZeroSpatialPart: return "ZeroSpatialPart";
    case ErrorCode::OnAxis: return "OnAxis";
    case ErrorCode::NotNull: return "NotNull";
    case ErrorCode::DegenerateZero: return "DegenerateZero";
    case ErrorCode::PositivityViolation: return "PositivityViolation";
    case ErrorCode::DivisionDomain: return "DivisionDomain";
    case ErrorCode::NotInKHat: return "NotInKHat";
    case ErrorCode::NoRoot: return "NoRoot";
    case ErrorCode::SecondRoot: return "SecondRoot";
    case ErrorCode::OnAxisInPolarChart: return "OnAxisInPolarChart";
    case ErrorCode::StepBudgetExceeded: return "StepBudgetExceeded";
    case ErrorCode::TolFailure: return "TolFailure";
  }
  return "Unknown";
}

/// Every failure raised by the library carries one of the codes above so
/// callers can branch on the kind without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace kerrflow
