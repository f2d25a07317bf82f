#pragma once

#include <stdexcept>
#include <string>

namespace lapmax {

/// Base class for all library errors.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ParseError : Error {
  using Error::Error;
};
struct InvalidGraph : Error {
  using Error::Error;
};
struct NonPositiveLength : Error {
  using Error::Error;
};
struct NonPositiveVertexWeight : Error {
  using Error::Error;
};
struct DisconnectedSupport : Error {
  using Error::Error;
};
struct NotSymmetric : Error {
  using Error::Error;
};
struct NoConvergence : Error {
  using Error::Error;
};
struct ZeroNotSimple : Error {
  using Error::Error;
};
struct DegenerateGap : Error {
  using Error::Error;
};
struct BasisMismatch : Error {
  using Error::Error;
};
struct ConstantFunction : Error {
  using Error::Error;
};
struct NotConstraintPreserving : Error {
  using Error::Error;
};
struct StepTooLarge : Error {
  using Error::Error;
};
struct NotPSD : Error {
  using Error::Error;
};
struct InvalidInit : Error {
  using Error::Error;
};
struct InvalidVertexWeight : Error {
  using Error::Error;
};
struct WrongMode : Error {
  using Error::Error;
};
struct EmptyGrid : Error {
  using Error::Error;
};
struct UnknownFixture : Error {
  using Error::Error;
};
struct IoError : Error {
  using Error::Error;
};

}  // namespace lapmax
