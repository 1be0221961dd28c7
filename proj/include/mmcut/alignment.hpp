#pragma once

#include <array>
#include <cmath>
#include <numbers>

#include "mmcut/grid.hpp"
#include "mmcut/rigid_transform.hpp"
#include "mmcut/shape_energy.hpp"
#include "mmcut/shape_prior.hpp"

namespace mmcut {

struct SmoothingParams {
    double epsilon = 1.5;  // width, pixel units, > 0
};

// Lorentzian mollified Dirac delta and its arctan antiderivative.
inline double delta_eps(double x, double eps) {
    return eps / (std::numbers::pi_v<double> * (eps * eps + x * x));
}
inline double heaviside_eps(double x, double eps) {
    return 0.5 + std::atan2(x, eps) / std::numbers::pi_v<double>;
}

struct AlignmentReport {
    RigidTransform transform;
    double final_energy = 0.0;
    int iterations = 0;
    bool converged = false;
    int fallback_steps = 0;  // gradient-descent substitutions for rejected Newton steps
};

// Parameter vector order everywhere: [alpha, c_x, c_y, omega_angle].
using Vec4 = std::array<double, 4>;
using Mat4 = std::array<double, 16>;  // row-major

struct AlignConfig {
    int max_iter = 50;
    double tol = 1e-4;
    double min_energy_decrease = 1e-8;
    double alpha_min = 0.05;
    double alpha_max = 20.0;
};

// Closed-form init: c = omega centroid, alpha = inertial-scale ratio, angle
// from principal axes with the pi ambiguity settled by the lower shape energy.
// Throws DegenerateShape when either mask has < 3 foreground pixels.
RigidTransform moment_init(const BinaryMask& omega, const BinaryMask& template_mask,
                           const ShapeEnergyParams& params = {});
RigidTransform moment_init(const BinaryMask& omega, const TemplateEntry& tmpl,
                           const ShapeEnergyParams& params = {});

// Continuous alignment objective: per-pixel mass mismatch
// (chi_omega - chi_tmpl(T(s)))^2 * |phi_tmpl(T(s))|^lambda plus the boundary
// band delta_eps(phi_omega(s)) * |phi_tmpl(T(s))|^lambda. The template field
// is resampled with a C1 interpolant on a padded raster so the objective and
// its derivatives stay consistent under finite differences.
double alignment_energy(const DistanceField& omega_field, const DistanceField& template_field,
                        const RigidTransform& t, const ShapeEnergyParams& params,
                        const SmoothingParams& smoothing);

Vec4 energy_gradient(const DistanceField& omega_field, const DistanceField& template_field,
                     const RigidTransform& t, const ShapeEnergyParams& params,
                     const SmoothingParams& smoothing);

Mat4 energy_hessian(const DistanceField& omega_field, const DistanceField& template_field,
                    const RigidTransform& t, const ShapeEnergyParams& params,
                    const SmoothingParams& smoothing);

// Safeguarded Newton descent on the alignment objective: steps that are
// non-positive-definite or uphill fall back to backtracking gradient descent.
// The returned transform never has worse discrete shape_energy than init.
// Throws NonFiniteEnergy if the objective degenerates at an accepted iterate.
AlignmentReport align(const BinaryMask& omega, const TemplateEntry& tmpl,
                      const RigidTransform& init, const ShapeEnergyParams& params = {},
                      const SmoothingParams& smoothing = {}, const AlignConfig& config = {});

}  // namespace mmcut
