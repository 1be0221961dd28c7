#include "mmcut/shape_prior.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numbers>

#include "mmcut/alignment.hpp"
#include "mmcut/distance_transform.hpp"
#include "mmcut/errors.hpp"
#include "mmcut/raster_io.hpp"

#include "json.hpp"

namespace mmcut {

double inertial_scale(const BinaryMask& mask) {
    const Vec2 c = mask_centroid(mask);
    double sum = 0.0;
    long n = 0;
    for (int y = 0; y < mask.height(); ++y)
        for (int x = 0; x < mask.width(); ++x)
            if (mask.at(x, y)) {
                const double dx = x - c.x, dy = y - c.y;
                sum += dx * dx + dy * dy;
                ++n;
            }
    if (n == 0) throw EmptyShape("inertial_scale: no foreground pixels");
    return std::sqrt(sum / n);
}

TemplateEntry make_template(BinaryMask mask, double weight) {
    const size_t fg = foreground_count(mask);
    if (fg == 0) throw EmptyShape("make_template: template mask has no foreground");
    if (fg == 1)
        throw DegenerateShape("make_template: single-pixel template has no spatial extent");
    TemplateEntry e;
    e.field = signed_distance(mask);
    e.centroid = mask_centroid(mask);
    e.inertial_scale = inertial_scale(mask);
    e.mask = std::move(mask);
    e.weight = weight;
    return e;
}

TemplateSet load_template_set(const std::string& manifest_path) {
    std::ifstream in(manifest_path);
    if (!in) throw IoError("cannot open template manifest: " + manifest_path);
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw IoError("template manifest " + manifest_path + ": " + e.what());
    }

    const nlohmann::json* list = &doc;
    if (doc.is_object()) {
        if (!doc.contains("templates"))
            throw IoError("template manifest " + manifest_path + ": missing \"templates\" array");
        list = &doc.at("templates");
    }
    if (!list->is_array() || list->empty())
        throw IoError("template manifest " + manifest_path + ": expected a non-empty array");

    const auto base = std::filesystem::path(manifest_path).parent_path();
    TemplateSet set;
    double weight_sum = 0.0;
    for (const auto& item : *list) {
        if (!item.is_object() || !item.contains("mask_path"))
            throw IoError("template manifest " + manifest_path +
                          ": each entry needs a \"mask_path\"");
        std::filesystem::path p = item.at("mask_path").get<std::string>();
        if (p.is_relative()) p = base / p;
        const double w = item.value("weight", 1.0);
        if (!(w > 0.0) || !std::isfinite(w))
            throw NonFiniteWeight("template manifest " + manifest_path +
                                  ": weight must be finite and > 0");
        set.entries.push_back(make_template(load_mask(p.string()), w));
        weight_sum += w;
    }
    for (auto& e : set.entries) e.weight /= weight_sum;
    return set;
}

double kernel_value(double u_shape, double beta) {
    return std::sqrt(beta / (2.0 * std::numbers::pi_v<double>)) *
           std::exp(-0.5 * beta * u_shape);
}

double log_kernel_value(double u_shape, double beta) {
    return 0.5 * std::log(beta / (2.0 * std::numbers::pi_v<double>)) - 0.5 * beta * u_shape;
}

std::vector<double> template_energies(const BinaryMask& omega, const TemplateSet& set,
                                      const ShapeEnergyParams& params) {
    std::vector<double> u;
    u.reserve(set.entries.size());
    for (const auto& e : set.entries)
        u.push_back(shape_energy(omega, e.field, e.mask, e.current_transform, params));
    return u;
}

double compute_bandwidth(const TemplateSet& set, const ShapeEnergyParams& params) {
    const size_t J = set.entries.size();
    if (J < 2)
        throw InsufficientTemplates(
            "compute_bandwidth: need at least two templates (or an explicit beta override)");

    // min_k U(k -> j): template k plays the evolving shape, aligned onto j.
    // Mismatched pairs sit on wide plateaus where extra iterations barely
    // move the minimum; a moderate cap keeps the setup cost bounded.
    AlignConfig align_cfg;
    align_cfg.max_iter = 30;
    constexpr double kMinFloor = 1e-6;
    double denom = 0.0;
    for (size_t j = 0; j < J; ++j) {
        const TemplateEntry& target = set.entries[j];
        double best = std::numeric_limits<double>::infinity();
        for (size_t k = 0; k < J; ++k) {
            if (k == j) continue;
            const BinaryMask& evolving = set.entries[k].mask;
            const RigidTransform init = moment_init(evolving, target, params);
            const AlignmentReport rep = align(evolving, target, init, params, {}, align_cfg);
            const double u = shape_energy(evolving, target.field, target.mask,
                                          rep.transform, params);
            best = std::min(best, u);
        }
        denom += target.weight / std::pow(target.inertial_scale, params.lambda) *
                 std::max(best, kMinFloor);
    }
    return 1.0 / denom;
}

MMWeights mm_weights(const BinaryMask& omega_n, const TemplateSet& set,
                     const ShapeEnergyParams& params) {
    return mm_weights_from_energies(template_energies(omega_n, set, params), set);
}

MMWeights mm_weights_from_energies(const std::vector<double>& energies,
                                   const TemplateSet& set) {
    const size_t J = set.entries.size();
    std::vector<double> lw(J);
    double lw_max = -std::numeric_limits<double>::infinity();
    for (size_t j = 0; j < J; ++j) {
        lw[j] = std::log(set.entries[j].weight) + log_kernel_value(energies[j], set.beta);
        lw_max = std::max(lw_max, lw[j]);
    }
    MMWeights out;
    out.c.resize(J);
    double sum = 0.0;
    for (size_t j = 0; j < J; ++j) {
        out.c[j] = std::exp(lw[j] - lw_max);
        sum += out.c[j];
    }
    for (double& v : out.c) v /= sum;
    return out;
}

}  // namespace mmcut
