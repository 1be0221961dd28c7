#include "mmcut/distance_transform.hpp"

#include <algorithm>
#include <limits>

#include "mmcut/errors.hpp"

namespace mmcut {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// 1D squared-distance transform by lower envelope of parabolas rooted at the
// finite entries of f. Exact for arbitrary seed values.
void transform_1d(const double* f, double* d, int n, int* v, double* z) {
    int k = 0;
    v[0] = 0;
    z[0] = -kInf;
    z[1] = kInf;
    for (int q = 1; q < n; ++q) {
        if (f[q] == kInf) continue;
        if (f[v[0]] == kInf) {
            // No finite parabola yet.
            k = 0;
            v[0] = q;
            z[0] = -kInf;
            z[1] = kInf;
            continue;
        }
        double s = ((f[q] + q * (double)q) - (f[v[k]] + v[k] * (double)v[k])) / (2.0 * (q - v[k]));
        while (s <= z[k]) {
            --k;
            s = ((f[q] + q * (double)q) - (f[v[k]] + v[k] * (double)v[k])) / (2.0 * (q - v[k]));
        }
        ++k;
        v[k] = q;
        z[k] = s;
        z[k + 1] = kInf;
    }
    if (f[v[0]] == kInf) {
        for (int q = 0; q < n; ++q) d[q] = kInf;
        return;
    }
    k = 0;
    for (int q = 0; q < n; ++q) {
        while (z[k + 1] < q) ++k;
        double dx = q - v[k];
        d[q] = dx * dx + f[v[k]];
    }
}

// Squared distance from every pixel to the nearest seed pixel.
Grid<double> squared_distance_to(const BinaryMask& mask, uint8_t seed_label) {
    const int w = mask.width();
    const int h = mask.height();
    Grid<double> dist(w, h, kInf);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            if (mask.at(x, y) == seed_label) dist.at(x, y) = 0.0;

    const int n = std::max(w, h);
    std::vector<double> f(n), d(n), z(n + 1);
    std::vector<int> v(n);

    for (int x = 0; x < w; ++x) {
        for (int y = 0; y < h; ++y) f[y] = dist.at(x, y);
        transform_1d(f.data(), d.data(), h, v.data(), z.data());
        for (int y = 0; y < h; ++y) dist.at(x, y) = d[y];
    }
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) f[x] = dist.at(x, y);
        transform_1d(f.data(), d.data(), w, v.data(), z.data());
        for (int x = 0; x < w; ++x) dist.at(x, y) = d[x];
    }
    return dist;
}

}  // namespace

DistanceField signed_distance(const BinaryMask& mask) {
    const int fg = foreground_count(mask);
    if (fg == 0) throw EmptyShape("signed_distance: mask has no foreground pixels");
    if (fg == static_cast<int>(mask.size()))
        throw EmptyShape("signed_distance: mask has no background pixels");

    Grid<double> to_bg = squared_distance_to(mask, 0);
    Grid<double> to_fg = squared_distance_to(mask, 1);

    DistanceField field(mask.width(), mask.height());
    for (size_t i = 0; i < mask.size(); ++i)
        field[i] = mask[i] ? std::sqrt(to_bg[i]) : -std::sqrt(to_fg[i]);
    return field;
}

double sample_field(const DistanceField& field, Vec2 p) {
    const int w = field.width();
    const int h = field.height();
    const double cx = std::clamp(p.x, 0.0, (double)(w - 1));
    const double cy = std::clamp(p.y, 0.0, (double)(h - 1));

    int x0 = (int)std::floor(cx);
    int y0 = (int)std::floor(cy);
    if (x0 > w - 2) x0 = std::max(0, w - 2);
    if (y0 > h - 2) y0 = std::max(0, h - 2);
    const int x1 = std::min(x0 + 1, w - 1);
    const int y1 = std::min(y0 + 1, h - 1);
    const double tx = cx - x0;
    const double ty = cy - y0;

    const double v00 = field.at(x0, y0);
    const double v10 = field.at(x1, y0);
    const double v01 = field.at(x0, y1);
    const double v11 = field.at(x1, y1);
    const double value = (1 - ty) * ((1 - tx) * v00 + tx * v10) + ty * ((1 - tx) * v01 + tx * v11);

    const double dx = p.x - cx;
    const double dy = p.y - cy;
    if (dx == 0.0 && dy == 0.0) return value;
    return value - std::sqrt(dx * dx + dy * dy);
}

}  // namespace mmcut
