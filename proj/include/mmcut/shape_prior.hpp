#pragma once

#include <string>
#include <vector>

#include "mmcut/grid.hpp"
#include "mmcut/rigid_transform.hpp"
#include "mmcut/shape_energy.hpp"

namespace mmcut {

struct TemplateEntry {
    BinaryMask mask;
    DistanceField field;  // signed_distance(mask)
    double weight = 1.0;  // w_j, normalized across the set
    double inertial_scale = 0.0;  // root mean squared distance from the centroid
    Vec2 centroid{};      // foreground centroid, raster coordinates
    RigidTransform current_transform{};  // segmentation frame -> this template
};

struct TemplateSet {
    std::vector<TemplateEntry> entries;
    double beta = 0.0;  // kernel bandwidth, > 0 once resolved
};

// Convex weights over templates, re-derived each MM iteration.
struct MMWeights {
    std::vector<double> c;
};

// Root mean squared distance of foreground pixels from their centroid.
double inertial_scale(const BinaryMask& mask);

// Builds the derived fields. Throws EmptyShape for degenerate masks and
// DegenerateShape when the foreground is a single pixel (no spatial extent).
TemplateEntry make_template(BinaryMask mask, double weight);

// JSON manifest: array of {"mask_path": ..., "weight"?: ...} objects, or an
// object with a "templates" array. Relative mask paths resolve against the
// manifest's directory. Weights are renormalized to sum 1; omitted weights
// default to uniform.
TemplateSet load_template_set(const std::string& manifest_path);

// Gaussian-style shape kernel sqrt(beta/2pi) * exp(-beta*u/2). The halved
// exponent is what makes the majorization surrogate a true upper bound of
// the total energy, and matches the beta/2 in the graph edge weights.
double kernel_value(double u_shape, double beta);
double log_kernel_value(double u_shape, double beta);

// Shape energy of omega against each template at its current transform.
std::vector<double> template_energies(const BinaryMask& omega, const TemplateSet& set,
                                      const ShapeEnergyParams& params);

// Scale-normalized nearest-neighbor bandwidth: each ordered template pair is
// moment-initialized and Newton-aligned, the per-target minima are floored at
// 1e-6, and beta = [sum_j (w_j / s_j^lambda) * min_k U(k -> j)]^-1.
// Throws InsufficientTemplates when the set has fewer than two entries.
double compute_bandwidth(const TemplateSet& set, const ShapeEnergyParams& params);

// c_j proportional to w_j * kernel(U_shape(omega_n, template_j)), normalized
// in log-space so extreme energy spreads cannot underflow to all-zero.
MMWeights mm_weights(const BinaryMask& omega_n, const TemplateSet& set,
                     const ShapeEnergyParams& params);
MMWeights mm_weights_from_energies(const std::vector<double>& energies,
                                   const TemplateSet& set);

}  // namespace mmcut
