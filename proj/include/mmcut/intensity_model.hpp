#pragma once

#include "mmcut/grid.hpp"

namespace mmcut {

// Laplace intensity model, one (location, scale) pair per region. The scale
// is floored so constant regions keep a proper density.
struct LaplaceParams {
    double mu_fg = 0.0;
    double b_fg = 1.0;
    double mu_bg = 0.0;
    double b_bg = 1.0;
    static constexpr double b_floor = 1e-3;
};

// mu = median of the region's intensities, b = mean absolute deviation from
// that median, floored at b_floor. Throws EmptyRegion if a region is empty.
LaplaceParams fit(const GrayImage& image, const BinaryMask& mask);

// ln(2b) + |intensity - mu| / b. Requires b >= b_floor.
double neg_log_likelihood(double intensity, double mu, double b);

}  // namespace mmcut
