#pragma once

#include <stdexcept>
#include <string>

namespace mmcut {

struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Raster file could not be read or written.
struct IoError : Error {
    explicit IoError(const std::string& msg) : Error(msg) {}
};

// Raster file exists but is not an 8-bit grayscale PNG or binary PGM.
struct UnsupportedFormat : Error {
    explicit UnsupportedFormat(const std::string& msg) : Error(msg) {}
};

// Mask is all-background or all-foreground, so no signed distance exists.
struct EmptyShape : Error {
    explicit EmptyShape(const std::string& msg) : Error(msg) {}
};

// Shape has too few foreground pixels for moment statistics.
struct DegenerateShape : Error {
    explicit DegenerateShape(const std::string& msg) : Error(msg) {}
};

// Alignment energy evaluated to NaN or infinity at the current iterate.
struct NonFiniteEnergy : Error {
    explicit NonFiniteEnergy(const std::string& msg) : Error(msg) {}
};

// Kernel bandwidth needs at least two templates unless an override is given.
struct InsufficientTemplates : Error {
    explicit InsufficientTemplates(const std::string& msg) : Error(msg) {}
};

// Region passed to the intensity fitter contains no pixels.
struct EmptyRegion : Error {
    explicit EmptyRegion(const std::string& msg) : Error(msg) {}
};

// A graph capacity evaluated to NaN or infinity.
struct NonFiniteWeight : Error {
    explicit NonFiniteWeight(const std::string& msg) : Error(msg) {}
};

}  // namespace mmcut
