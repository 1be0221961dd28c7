#pragma once

#include <cmath>

#include "mmcut/grid.hpp"

namespace mmcut {

// Similarity transform from the segmentation frame into a template frame:
// T(s) = alpha * R(omega) * (s - c). The template frame has its origin at
// the template's foreground centroid, so consumers add that centroid to T(s)
// before sampling the template raster.
struct RigidTransform {
    double alpha = 1.0;        // isotropic scale, > 0
    double omega_angle = 0.0;  // rotation angle, radians
    Vec2 c{};                  // anchor point in the segmentation frame

    Vec2 apply(Vec2 s) const {
        const double co = std::cos(omega_angle);
        const double si = std::sin(omega_angle);
        const double dx = s.x - c.x;
        const double dy = s.y - c.y;
        return {alpha * (co * dx - si * dy), alpha * (si * dx + co * dy)};
    }
};

// Centroid of the foreground pixels.
inline Vec2 mask_centroid(const BinaryMask& mask) {
    double sx = 0.0, sy = 0.0;
    int n = 0;
    for (int y = 0; y < mask.height(); ++y)
        for (int x = 0; x < mask.width(); ++x)
            if (mask.at(x, y)) {
                sx += x;
                sy += y;
                ++n;
            }
    if (n == 0) return {0.0, 0.0};
    return {sx / n, sy / n};
}

}  // namespace mmcut
