#include "mmcut/shape_energy.hpp"

#include <numbers>

#include "mmcut/distance_transform.hpp"

namespace mmcut {

ShapeEnergyParts decompose_energy(const BinaryMask& omega, const DistanceField& template_field,
                                  const BinaryMask& template_mask, const RigidTransform& t,
                                  const ShapeEnergyParams& params) {
    const Vec2 anchor = mask_centroid(template_mask);
    const int w = omega.width();
    const int h = omega.height();
    ShapeEnergyParts parts;

    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const Vec2 sp = t.apply({(double)x, (double)y}) + anchor;
            const double phi = sample_field(template_field, sp);
            const int chi_tmpl = phi > 0.0 ? 1 : 0;
            if ((omega.at(x, y) != 0) != (chi_tmpl != 0))
                parts.mass += pow_abs(phi, params.lambda);
        }
    }

    // Each unordered 8-neighbor pair visited once via the four forward offsets.
    static const int offs[4][2] = {{1, 0}, {0, 1}, {1, 1}, {-1, 1}};
    const double inv_dist[4] = {1.0, 1.0, 1.0 / std::numbers::sqrt2, 1.0 / std::numbers::sqrt2};
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const uint8_t a = omega.at(x, y);
            for (int k = 0; k < 4; ++k) {
                const int nx = x + offs[k][0];
                const int ny = y + offs[k][1];
                if (!omega.in_bounds(nx, ny)) continue;
                if (a == omega.at(nx, ny)) continue;
                const Vec2 mid{(x + nx) * 0.5, (y + ny) * 0.5};
                const double phi = sample_field(template_field, t.apply(mid) + anchor);
                parts.boundary +=
                    std::numbers::pi / 8.0 * inv_dist[k] * pow_abs(phi, params.lambda);
            }
        }
    }
    return parts;
}

double shape_energy(const BinaryMask& omega, const DistanceField& template_field,
                    const BinaryMask& template_mask, const RigidTransform& t,
                    const ShapeEnergyParams& params) {
    const ShapeEnergyParts parts = decompose_energy(omega, template_field, template_mask, t, params);
    return parts.mass + parts.boundary;
}

}  // namespace mmcut
