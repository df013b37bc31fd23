#pragma once

#include "splatscape/geometry.hpp"

namespace splatscape {

/// Procedural "desk" scene used for offline runs and tests: a textured back
/// wall at z = 3, a floor at y = 0.5 and two shaded spheres, in the world
/// frame of an identity-pose camera. Every ray hits something, so the
/// returned frame is fully valid and its depth is exact z-depth.
RgbdFrame render_synthetic(const CameraView& view);

/// The bundled input view: identity pose, default 60 degree camera.
CameraView synthetic_view(int width, int height);

}  // namespace splatscape
