#include "mmcut/segmenter.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "mmcut/alignment.hpp"
#include "mmcut/distance_transform.hpp"
#include "mmcut/errors.hpp"

namespace mmcut {

namespace {

double intensity_cost(const BinaryMask& omega, const GrayImage& image,
                      const LaplaceParams& theta) {
    double e = 0.0;
    for (size_t i = 0; i < omega.size(); ++i) {
        if (omega[i])
            e += neg_log_likelihood(image[i], theta.mu_fg, theta.b_fg);
        else
            e += neg_log_likelihood(image[i], theta.mu_bg, theta.b_bg);
    }
    return e;
}

// Deterministic two-cluster Lloyd split of the intensities; the brighter
// cluster is taken as provisional foreground.
BinaryMask two_means_foreground(const GrayImage& image) {
    double lo = image[0], hi = image[0];
    for (size_t i = 0; i < image.size(); ++i) {
        lo = std::min(lo, image[i]);
        hi = std::max(hi, image[i]);
    }
    double c0 = lo, c1 = hi;
    for (int iter = 0; iter < 100; ++iter) {
        double s0 = 0.0, s1 = 0.0;
        long n0 = 0, n1 = 0;
        const double mid = 0.5 * (c0 + c1);
        for (size_t i = 0; i < image.size(); ++i) {
            if (image[i] <= mid) {
                s0 += image[i];
                ++n0;
            } else {
                s1 += image[i];
                ++n1;
            }
        }
        const double nc0 = n0 ? s0 / n0 : c0;
        const double nc1 = n1 ? s1 / n1 : c1;
        if (nc0 == c0 && nc1 == c1) break;
        c0 = nc0;
        c1 = nc1;
    }
    const double mid = 0.5 * (c0 + c1);
    BinaryMask fg(image.width(), image.height());
    for (size_t i = 0; i < image.size(); ++i) fg[i] = image[i] > mid ? 1 : 0;
    return fg;
}

// Identity comparator between two labelings on the same grid: chooses the
// transform whose sampling lands on each pixel exactly.
double successive_shape_energy(const BinaryMask& current, const BinaryMask& previous,
                               const ShapeEnergyParams& params) {
    const DistanceField prev_field = signed_distance(previous);
    RigidTransform ident;
    ident.c = mask_centroid(previous);
    return shape_energy(current, prev_field, previous, ident, params);
}

// Largest 8-connected foreground component. Likelihood-only cuts leave
// isolated noise speckles that wreck second moments, so alignment targets
// the dominant blob; the cut itself always sees the full labeling.
BinaryMask largest_component(const BinaryMask& mask) {
    BinaryMask out(mask.width(), mask.height());
    std::vector<int32_t> label(mask.size(), -1);
    int best_label = -1;
    size_t best_area = 0;
    int next = 0;
    std::vector<size_t> stack;
    for (size_t start = 0; start < mask.size(); ++start) {
        if (!mask[start] || label[start] >= 0) continue;
        size_t area = 0;
        stack.push_back(start);
        label[start] = next;
        while (!stack.empty()) {
            const size_t i = stack.back();
            stack.pop_back();
            ++area;
            const int x = (int)(i % mask.width()), y = (int)(i / mask.width());
            for (int dy = -1; dy <= 1; ++dy)
                for (int dx = -1; dx <= 1; ++dx) {
                    const int nx = x + dx, ny = y + dy;
                    if (nx < 0 || nx >= mask.width() || ny < 0 || ny >= mask.height()) continue;
                    const size_t ni = (size_t)ny * mask.width() + nx;
                    if (mask[ni] && label[ni] < 0) {
                        label[ni] = next;
                        stack.push_back(ni);
                    }
                }
        }
        if (area > best_area) {
            best_area = area;
            best_label = next;
        }
        ++next;
    }
    for (size_t i = 0; i < mask.size(); ++i)
        out[i] = (label[i] == best_label && best_label >= 0) ? 1 : 0;
    return out;
}

void align_all(const BinaryMask& omega_full, TemplateSet& set,
               const ShapeEnergyParams& shape_params, const SmoothingParams& smoothing,
               bool shared) {
    const BinaryMask omega = largest_component(omega_full);
    if (shared) {
        size_t lead = 0;
        for (size_t j = 1; j < set.entries.size(); ++j)
            if (set.entries[j].weight > set.entries[lead].weight) lead = j;
        const RigidTransform init = moment_init(omega, set.entries[lead], shape_params);
        const AlignmentReport rep =
            align(omega, set.entries[lead], init, shape_params, smoothing);
        for (auto& e : set.entries) e.current_transform = rep.transform;
        return;
    }
    for (auto& e : set.entries) {
        const RigidTransform init = moment_init(omega, e, shape_params);
        e.current_transform = align(omega, e, init, shape_params, smoothing).transform;
    }
}

long count_flips(const BinaryMask& a, const BinaryMask& b) {
    long n = 0;
    for (size_t i = 0; i < a.size(); ++i)
        if (a[i] != b[i]) ++n;
    return n;
}

void require_two_labels(const BinaryMask& omega, int iteration) {
    const size_t fg = foreground_count(omega);
    if (fg == 0)
        throw EmptyShape("segment: labeling collapsed to all-background at iteration " +
                         std::to_string(iteration));
    if (fg == omega.size())
        throw EmptyShape("segment: labeling collapsed to all-foreground at iteration " +
                         std::to_string(iteration));
}

}  // namespace

double total_energy(const BinaryMask& omega, const GrayImage& image, const LaplaceParams& theta,
                    const TemplateSet& set, const ShapeEnergyParams& shape_params) {
    const std::vector<double> u = template_energies(omega, set, shape_params);
    double lse = -std::numeric_limits<double>::infinity();
    std::vector<double> lw(u.size());
    for (size_t j = 0; j < u.size(); ++j) {
        lw[j] = std::log(set.entries[j].weight) + log_kernel_value(u[j], set.beta);
        lse = std::max(lse, lw[j]);
    }
    double sum = 0.0;
    for (double v : lw) sum += std::exp(v - lse);
    const double log_mixture = lse + std::log(sum);
    return intensity_cost(omega, image, theta) - log_mixture;
}

double surrogate_energy(const BinaryMask& omega, const MMWeights& c, const GrayImage& image,
                        const LaplaceParams& theta, const TemplateSet& set,
                        const ShapeEnergyParams& shape_params) {
    const std::vector<double> u = template_energies(omega, set, shape_params);
    double shape = 0.0;
    for (size_t j = 0; j < u.size(); ++j) shape += c.c[j] * u[j];
    return intensity_cost(omega, image, theta) + 0.5 * set.beta * shape;
}

double surrogate_energy(const BinaryMask& omega, const BinaryMask& omega_anchor,
                        const GrayImage& image, const LaplaceParams& theta,
                        const TemplateSet& set, const ShapeEnergyParams& shape_params) {
    return surrogate_energy(omega, mm_weights(omega_anchor, set, shape_params), image, theta,
                            set, shape_params);
}

SegmentResult segment(const GrayImage& image, const TemplateSet& templates,
                      const SegmenterConfig& config) {
    const ShapeEnergyParams shape_params{config.lambda};
    const SmoothingParams smoothing{config.epsilon_smooth};
    const long n_total = (long)image.size();

    SegmentResult result;
    result.set = templates;
    TemplateSet& set = result.set;

    // Intensity init: provisional regions from a brightness split.
    LaplaceParams theta = fit(image, two_means_foreground(image));

    // Shape-free cut: zero bandwidth leaves only the likelihood t-links.
    BinaryMask omega;
    {
        TemplateSet free_set = set;
        free_set.beta = 0.0;
        MMWeights uniform;
        uniform.c.assign(set.entries.size(), 1.0 / set.entries.size());
        const FlowNetwork net = build_network(image, theta, free_set, uniform, shape_params);
        omega = max_flow(net).labeling;
    }
    require_two_labels(omega, 0);
    theta = fit(image, omega);

    if (config.beta_override)
        set.beta = *config.beta_override;
    else
        set.beta = compute_bandwidth(set, shape_params);
    const double base_beta = set.beta;

    align_all(omega, set, shape_params, smoothing, config.shared_transform);

    result.initial_mask = omega;
    result.initial_total_energy = total_energy(omega, image, theta, set, shape_params);

    long since_fit = 0;
    long since_align = 0;

    for (int n = 1; n <= config.max_mm_iters; ++n) {
        if (config.beta_ramp_iters > 0)
            set.beta = base_beta * std::min(1.0, (double)n / config.beta_ramp_iters);

        const MMWeights c = mm_weights(omega, set, shape_params);
        const FlowNetwork net = build_network(image, theta, set, c, shape_params);
        if (config.network_observer) config.network_observer(n, net);
        BinaryMask next = max_flow(net).labeling;
        require_two_labels(next, n);

        const long flips = count_flips(next, omega);
        since_fit += flips;
        since_align += flips;

        IterationRecord rec;
        rec.iteration = n;
        rec.c = c.c;
        rec.labels_changed = flips;
        rec.surrogate_energy = surrogate_energy(next, c, image, theta, set, shape_params);

        const double succ_energy =
            flips > 0 ? successive_shape_energy(next, omega, shape_params)
                      : std::numeric_limits<double>::infinity();

        bool refit_fired = false;
        if (flips > 0 && (double)since_fit > config.refit_fraction * n_total) {
            theta = fit(image, next);
            since_fit = 0;
            refit_fired = true;
        }
        bool realign_fired = false;
        if (flips > 0 && (double)since_align > config.realign_fraction * n_total) {
            align_all(next, set, shape_params, smoothing, config.shared_transform);
            since_align = 0;
            realign_fired = true;
        }

        rec.total_energy = total_energy(next, image, theta, set, shape_params);
        rec.transforms.reserve(set.entries.size());
        for (const auto& e : set.entries) rec.transforms.push_back(e.current_transform);
        result.trace.push_back(std::move(rec));

        omega = next;

        if (flips == 0 && !refit_fired && !realign_fired) {
            result.converged = true;
            break;
        }
        if (flips > 0 && succ_energy <= config.tol_shape) {
            result.converged = true;
            break;
        }
    }

    result.mask = std::move(omega);
    result.theta = theta;
    return result;
}

}  // namespace mmcut
