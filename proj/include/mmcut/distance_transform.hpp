#pragma once

#include "mmcut/grid.hpp"

namespace mmcut {

// Exact signed Euclidean distance between pixel centers: positive inside the
// shape, negative outside, magnitude = distance to the nearest pixel center
// carrying the opposite label. Every magnitude is therefore >= 1.
// Throws EmptyShape when the mask is all-background or all-foreground.
DistanceField signed_distance(const BinaryMask& mask);

// Bilinear interpolation of a field at a continuous point. Outside the grid
// the value is the interpolated value at the clamped boundary point minus the
// Euclidean distance from the query to that point, which continues the
// distance field's unit slope.
double sample_field(const DistanceField& field, Vec2 p);

}  // namespace mmcut
