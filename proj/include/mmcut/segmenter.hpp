#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "mmcut/graphcut.hpp"
#include "mmcut/grid.hpp"
#include "mmcut/intensity_model.hpp"
#include "mmcut/shape_prior.hpp"

namespace mmcut {

struct SegmenterConfig {
    double lambda = 2.0;
    std::optional<double> beta_override;  // required when only one template is given
    double tol_shape = 1e-6;       // stationarity threshold on successive-mask shape energy
    int max_mm_iters = 50;
    double refit_fraction = 0.02;    // intensity refit once this fraction of pixels flipped
    double realign_fraction = 0.02;  // template realign once this fraction flipped
    bool shared_transform = false;   // align the heaviest template, reuse for the rest
    double epsilon_smooth = 1.5;
    int beta_ramp_iters = 0;  // > 0 scales beta by min(1, n/ramp) per iteration

    // Observer for the per-iteration flow network (diagnostics dump); may be null.
    std::function<void(int iteration, const FlowNetwork&)> network_observer;
};

struct IterationRecord {
    int iteration = 0;           // 1-based MM iteration
    double total_energy = 0.0;   // full objective, up to an additive constant
    double surrogate_energy = 0.0;  // majorized objective the cut minimized
    std::vector<double> c;       // template responsibilities used this iteration
    long labels_changed = 0;     // pixels flipped vs the previous mask
    std::vector<RigidTransform> transforms;  // per-template, after this iteration
};

struct SegmentResult {
    BinaryMask mask;
    std::vector<IterationRecord> trace;
    bool converged = false;
    BinaryMask initial_mask;        // shape-free cut the loop started from
    double initial_total_energy = 0.0;  // energy of initial_mask after alignment
    LaplaceParams theta;            // final intensity model
    TemplateSet set;                // final template state (resolved beta, transforms)
};

// Full objective: foreground and background likelihood costs plus the
// negative log of the kernel mixture, evaluated in log-space.
double total_energy(const BinaryMask& omega, const GrayImage& image, const LaplaceParams& theta,
                    const TemplateSet& set, const ShapeEnergyParams& shape_params);

// Majorized objective anchored at the responsibilities c: likelihood costs
// plus (beta/2) sum_j c_j U_shape(omega, template_j).
double surrogate_energy(const BinaryMask& omega, const MMWeights& c, const GrayImage& image,
                        const LaplaceParams& theta, const TemplateSet& set,
                        const ShapeEnergyParams& shape_params);
// Same, with the responsibilities derived from an anchor labeling.
double surrogate_energy(const BinaryMask& omega, const BinaryMask& omega_anchor,
                        const GrayImage& image, const LaplaceParams& theta,
                        const TemplateSet& set, const ShapeEnergyParams& shape_params);

// Majorize-minimize segmentation loop: shape-free initial cut, template
// alignment, then alternating responsibility updates and graph cuts with
// conditional intensity refits and realignments. Throws EmptyShape (with the
// iteration index) if an iterate collapses to a single label.
SegmentResult segment(const GrayImage& image, const TemplateSet& templates,
                      const SegmenterConfig& config);

}  // namespace mmcut
