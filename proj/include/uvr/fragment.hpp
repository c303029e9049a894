#pragma once

namespace uvr {

/// One integrated segment's contribution: premultiplied color, opacity, and
/// depth in ray-parameter units. Exactly five floats — this is also the
/// full-precision wire layout.
struct Fragment {
  float r = 0, g = 0, b = 0;  // premultiplied
  float alpha = 0;
  float depth = 0;

  bool operator==(const Fragment&) const = default;
};

}  // namespace uvr
