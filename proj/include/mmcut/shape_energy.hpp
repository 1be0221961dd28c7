#pragma once

#include "mmcut/grid.hpp"
#include "mmcut/rigid_transform.hpp"

namespace mmcut {

struct ShapeEnergyParams {
    double lambda = 2.0;  // exponent on |distance|; >= 0, 0 means plain counting
};

// |x|^lambda with 0^0 defined as 1 so lambda = 0 degenerates to counting.
inline double pow_abs(double x, double lambda) {
    if (lambda == 0.0) return 1.0;
    if (lambda == 1.0) return std::fabs(x);
    if (lambda == 2.0) return x * x;
    return std::pow(std::fabs(x), lambda);
}

struct ShapeEnergyParts {
    double mass = 0.0;      // per-pixel label disagreement, weighted by |phi|^lambda
    double boundary = 0.0;  // straddling 8-neighbor pairs, weighted pi/(8*dist)
};

// Asymmetric dissimilarity between a labeling omega and a template shape whose
// signed distance field is sampled through the transform t. The mass term sums
// |chi_omega(s) - chi_tmpl(T(s))| * |phi_tmpl(T(s))|^lambda over pixels; the
// boundary term sums pi/(8*||s-u||) * |phi_tmpl(T((s+u)/2))|^lambda over
// unordered 8-neighbor pairs (s, u) with chi_omega(s) != chi_omega(u).
ShapeEnergyParts decompose_energy(const BinaryMask& omega, const DistanceField& template_field,
                                  const BinaryMask& template_mask, const RigidTransform& t,
                                  const ShapeEnergyParams& params);

double shape_energy(const BinaryMask& omega, const DistanceField& template_field,
                    const BinaryMask& template_mask, const RigidTransform& t,
                    const ShapeEnergyParams& params);

}  // namespace mmcut
