#include "mmcut/intensity_model.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "mmcut/errors.hpp"

namespace mmcut {
namespace {

// Median by full sort; even counts average the middle pair.
double median_of(std::vector<double>& v) {
    std::sort(v.begin(), v.end());
    const size_t n = v.size();
    if (n % 2 == 1) return v[n / 2];
    return 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::pair<double, double> fit_region(std::vector<double>& values) {
    const double mu = median_of(values);
    double sum = 0.0;
    for (double v : values) sum += std::fabs(v - mu);
    const double b = std::max(sum / values.size(), LaplaceParams::b_floor);
    return {mu, b};
}

}  // namespace

LaplaceParams fit(const GrayImage& image, const BinaryMask& mask) {
    std::vector<double> fg, bg;
    fg.reserve(image.size());
    bg.reserve(image.size());
    for (size_t i = 0; i < image.size(); ++i) (mask[i] ? fg : bg).push_back(image[i]);
    if (fg.empty()) throw EmptyRegion("fit: foreground region is empty");
    if (bg.empty()) throw EmptyRegion("fit: background region is empty");

    LaplaceParams p;
    std::tie(p.mu_fg, p.b_fg) = fit_region(fg);
    std::tie(p.mu_bg, p.b_bg) = fit_region(bg);
    return p;
}

double neg_log_likelihood(double intensity, double mu, double b) {
    return std::log(2.0 * b) + std::fabs(intensity - mu) / b;
}

}  // namespace mmcut
