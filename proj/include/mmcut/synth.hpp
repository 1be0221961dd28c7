#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mmcut/grid.hpp"

namespace mmcut {

// A self-contained benchmark instance: noisy image, ground-truth mask, and
// the template shapes the prior is built from.
struct SynthCase {
    std::string name;
    GrayImage image;
    BinaryMask truth;
    std::vector<BinaryMask> template_masks;
    std::vector<double> template_weights;  // empty = uniform
    std::optional<double> beta_override;
    uint64_t seed = 0;
};

// Shape rasterizers (pixel centers at integer coordinates).
BinaryMask render_blob(int w, int h, Vec2 center, double ax, double ay, double power,
                       double angle);
BinaryMask render_lshape(int w, int h, Vec2 center, double arm_len_x, double arm_len_y,
                         double thickness, double angle);
BinaryMask render_star(int w, int h, Vec2 center, double r0, double amp, int lobes,
                       double phase);

// Benchmark generators; identical seeds give identical cases.
SynthCase make_blob_case(uint64_t seed);
SynthCase make_lshape_case(uint64_t seed);
SynthCase make_star_case(uint64_t seed, int lobes);
// Flat two-tone image with `fraction` of the foreground pixels re-drawn from
// the background noise law; fraction 0 leaves exactly two intensities.
SynthCase make_corrupt_case(uint64_t seed, double fraction);
// Three 3-lobe and three 5-lobe templates with a noisy 5-lobe target.
SynthCase make_hybrid_case(uint64_t seed);

// Writes image.png, truth.png, templates/*.png, templates.json, and
// manifest.json under dir, creating it if needed.
void write_case(const SynthCase& c, const std::string& dir);

// 2|A∩B| / (|A|+|B|); 1.0 when both are empty.
double dice(const BinaryMask& a, const BinaryMask& b);

// Number of protrusions on the dominant component: 8-connected pieces, at
// least 9 px each, lying beyond the midpoint of the min and max boundary
// radii around the centroid.
int lobe_count(const BinaryMask& mask);

}  // namespace mmcut
