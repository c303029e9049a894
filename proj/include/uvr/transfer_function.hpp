#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "uvr/vec.hpp"

namespace uvr {

class TransferFunctionError : public std::runtime_error {
 public:
  explicit TransferFunctionError(const std::string& what) : std::runtime_error(what) {}
};

/// Piecewise-linear scalar -> (rgb, alpha) map. Scalars are clamped to
/// [domainMin, domainMax] before lookup; control scalars strictly increase.
class TransferFunction {
 public:
  struct ControlPoint {
    double s;
    Vec3 rgb;       // straight (non-premultiplied) color
    double alpha;   // in [0, 1]
  };

  TransferFunction(double domainMin, double domainMax,
                   std::vector<ControlPoint> points);

  /// Text format: first line `domain sMin sMax`, then `s r g b a` per line.
  static TransferFunction load(const std::string& path);

  struct Sample {
    Vec3 rgb;
    double alpha;
  };
  Sample eval(double scalar) const;

  double domainMin() const { return domainMin_; }
  double domainMax() const { return domainMax_; }
  const std::vector<ControlPoint>& points() const { return points_; }

  /// A TF that maps everything to alpha 0 (for discard tests).
  static TransferFunction transparent();

 private:
  double domainMin_, domainMax_;
  std::vector<ControlPoint> points_;
};

}  // namespace uvr
