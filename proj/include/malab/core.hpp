#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>
#include <string_view>

namespace malab {

using Real = double;

template <typename Scalar>
using Vector2 = Eigen::Matrix<Scalar, 2, 1>;
template <typename Scalar>
using Matrix2 = Eigen::Matrix<Scalar, 2, 2>;

using Vec2 = Vector2<Real>;
using Mat2 = Matrix2<Real>;
using VecX = Eigen::VectorXd;

/// Spatial dimension of every grid in the library. Formulas that carry the
/// dimension take it as a parameter; this is the value they are called with.
inline constexpr int kDim = 2;

enum class ErrorCode {
  DegenerateDomain,
  NoConvergence,
  OutsideDomain,
  InsufficientLadder,
  PinchingViolated,
  NonConvexIterate,
  NotPSD,
  SingularOperator,
  PoleOnBoundary,
  ExponentOutOfRange,
  SectionTooSmall,
  EmptySection,
  NotSubsolution,
  NegativeSolution,
  MinimizerOnBoundary,
  ComparisonSolveFailed,
  SideConditionViolated,
  GeometryCheckFailed,
  GeometryUnsupported,
  InvalidArgument,
  ParseError,
  UnknownSuite,
  MissingOutputs,
};

std::string_view to_string(ErrorCode code);

/// Every module reports failures through this exception; `code()` is the
/// machine-readable tag that the command line front end forwards.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace malab
