#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>
#include <vector>

namespace kramers {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Axis-aligned box, one [lo, hi] interval per coordinate.
struct Box {
  std::vector<double> lo, hi;

  int dim() const { return static_cast<int>(lo.size()); }

  bool contains(const Vec& x, double slack = 0.0) const {
    for (int k = 0; k < dim(); ++k)
      if (x[k] < lo[k] - slack || x[k] > hi[k] + slack) return false;
    return true;
  }

  double diameter() const {
    double s = 0;
    for (int k = 0; k < dim(); ++k) s += (hi[k] - lo[k]) * (hi[k] - lo[k]);
    return std::sqrt(s);
  }
};

// Error types surfaced by the analysis pipeline.  Each one corresponds to a
// structural assumption that the input is expected to satisfy.
struct DegenerateCriticalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct SpectralAmbiguityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct AssumptionViolatedError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct HeightUnreachableError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DescentStallError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct LeftBoxError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NegativeDetError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct SingularSystemError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ImaginaryAxisEigenError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct UnstableAError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NoExitError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NoValidRadiusError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct QuadratureFailureError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct OutsideRectangleError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NonFiniteError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct MissingStageOutputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace kramers
