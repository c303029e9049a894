#include "uvr/transfer_function.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace uvr {

TransferFunction::TransferFunction(double domainMin, double domainMax,
                                   std::vector<ControlPoint> points)
    : domainMin_(domainMin), domainMax_(domainMax), points_(std::move(points)) {
  if (points_.empty()) throw TransferFunctionError("transfer function has no control points");
  if (!(domainMin_ < domainMax_)) throw TransferFunctionError("empty transfer function domain");
  for (size_t i = 0; i < points_.size(); ++i) {
    if (points_[i].alpha < 0 || points_[i].alpha > 1)
      throw TransferFunctionError("control point opacity outside [0,1]");
    if (i > 0 && !(points_[i - 1].s < points_[i].s))
      throw TransferFunctionError("control point scalars must strictly increase");
  }
}

TransferFunction TransferFunction::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw TransferFunctionError("cannot open transfer function file: " + path);
  std::string keyword;
  double lo, hi;
  if (!(in >> keyword >> lo >> hi) || keyword != "domain")
    throw TransferFunctionError("transfer function file must start with `domain sMin sMax`");
  std::vector<ControlPoint> points;
  ControlPoint p;
  while (in >> p.s >> p.rgb.x >> p.rgb.y >> p.rgb.z >> p.alpha) points.push_back(p);
  if (!in.eof() && in.fail())
    throw TransferFunctionError("malformed control point line in " + path);
  return TransferFunction(lo, hi, std::move(points));
}

TransferFunction::Sample TransferFunction::eval(double scalar) const {
  double s = std::clamp(scalar, domainMin_, domainMax_);
  if (s <= points_.front().s) return {points_.front().rgb, points_.front().alpha};
  if (s >= points_.back().s) return {points_.back().rgb, points_.back().alpha};
  auto it = std::lower_bound(points_.begin(), points_.end(), s,
                             [](const ControlPoint& p, double v) { return p.s < v; });
  const ControlPoint& b = *it;
  const ControlPoint& a = *(it - 1);
  double u = (s - a.s) / (b.s - a.s);
  return {a.rgb * (1 - u) + b.rgb * u, a.alpha * (1 - u) + b.alpha * u};
}

TransferFunction TransferFunction::transparent() {
  return TransferFunction(0, 1, {{0, {0, 0, 0}, 0}, {1, {0, 0, 0}, 0}});
}

}  // namespace uvr
