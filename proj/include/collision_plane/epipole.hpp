#pragma once

#include <string_view>

#include "collision_plane/camera_geometry.hpp"

namespace collision_plane {

enum class EpipoleMethod { HorizonIntersection, LeastSquares, ThreeFrameOffset, Given };

inline std::string_view to_string(EpipoleMethod m) {
  switch (m) {
    case EpipoleMethod::HorizonIntersection: return "HorizonIntersection";
    case EpipoleMethod::LeastSquares: return "LeastSquares";
    case EpipoleMethod::ThreeFrameOffset: return "ThreeFrameOffset";
    case EpipoleMethod::Given: return "Given";
  }
  return "Unknown";
}

/// Image location of the focus of expansion of one relative translation.
struct Epipole {
  PixelPoint position;
  EpipoleMethod method = EpipoleMethod::Given;
  // Method-specific fit quality in pixels (0 for exact constructions).
  double residual = 0.0;

  static Epipole at(PixelPoint p) { return {p, EpipoleMethod::Given, 0.0}; }
};

}  // namespace collision_plane
