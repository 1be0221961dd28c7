#include "mmcut/synth.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numbers>
#include <random>

#include "mmcut/distance_transform.hpp"
#include "mmcut/errors.hpp"
#include "mmcut/raster_io.hpp"

#include "json.hpp"

namespace mmcut {

namespace {

// Draws use raw engine output so the byte stream is stable across library
// versions; std::uniform_real_distribution et al. make no such promise.
double u01(std::mt19937_64& rng) {
    return (double)(rng() >> 11) * 0x1.0p-53;
}
double uniform(std::mt19937_64& rng, double lo, double hi) {
    return lo + (hi - lo) * u01(rng);
}
double laplace_draw(std::mt19937_64& rng, double mu, double b) {
    const double u = u01(rng) - 0.5;
    const double s = u < 0.0 ? -1.0 : 1.0;
    return mu - b * s * std::log(1.0 - 2.0 * std::fabs(u));
}

constexpr int kImageSize = 128;
constexpr int kTemplateSize = 112;
constexpr double kForegroundTone = 0.75;
constexpr double kBackgroundTone = 0.25;

GrayImage two_tone(const BinaryMask& mask) {
    GrayImage img(mask.width(), mask.height());
    for (size_t i = 0; i < mask.size(); ++i)
        img[i] = mask[i] ? kForegroundTone : kBackgroundTone;
    return img;
}

void add_laplace_noise(GrayImage& img, std::mt19937_64& rng, double b) {
    for (size_t i = 0; i < img.size(); ++i)
        img[i] = std::clamp(img[i] + laplace_draw(rng, 0.0, b), 0.0, 1.0);
}

// Re-draws `fraction` of the foreground pixels from the background noise law.
void corrupt_foreground(GrayImage& img, const BinaryMask& truth, std::mt19937_64& rng,
                        double fraction) {
    std::vector<size_t> fg;
    for (size_t i = 0; i < truth.size(); ++i)
        if (truth[i]) fg.push_back(i);
    const size_t m = (size_t)(fraction * fg.size());
    for (size_t i = 0; i < m && i < fg.size(); ++i) {
        const size_t j = i + (size_t)(rng() % (fg.size() - i));
        std::swap(fg[i], fg[j]);
        img[fg[i]] = std::clamp(laplace_draw(rng, kBackgroundTone, 0.08), 0.0, 1.0);
    }
}

}  // namespace

BinaryMask render_blob(int w, int h, Vec2 center, double ax, double ay, double power,
                       double angle) {
    BinaryMask m(w, h);
    const double co = std::cos(angle), si = std::sin(angle);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const double dx = x - center.x, dy = y - center.y;
            const double u = co * dx + si * dy;
            const double v = -si * dx + co * dy;
            const double q = std::pow(std::fabs(u / ax), power) +
                             std::pow(std::fabs(v / ay), power);
            m.at(x, y) = q <= 1.0 ? 1 : 0;
        }
    return m;
}

BinaryMask render_lshape(int w, int h, Vec2 center, double arm_len_x, double arm_len_y,
                         double thickness, double angle) {
    BinaryMask m(w, h);
    const double co = std::cos(angle), si = std::sin(angle);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const double dx = x - center.x, dy = y - center.y;
            // Shape frame: L occupies [0,ax]x[0,t] plus [0,t]x[0,ay],
            // recentered on its bounding-box middle.
            const double u = co * dx + si * dy + arm_len_x * 0.5;
            const double v = -si * dx + co * dy + arm_len_y * 0.5;
            const bool horiz = u >= 0.0 && u <= arm_len_x && v >= 0.0 && v <= thickness;
            const bool vert = u >= 0.0 && u <= thickness && v >= 0.0 && v <= arm_len_y;
            m.at(x, y) = horiz || vert ? 1 : 0;
        }
    return m;
}

BinaryMask render_star(int w, int h, Vec2 center, double r0, double amp, int lobes,
                       double phase) {
    BinaryMask m(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const double dx = x - center.x, dy = y - center.y;
            const double r = std::sqrt(dx * dx + dy * dy);
            const double th = std::atan2(dy, dx);
            m.at(x, y) = r <= r0 + amp * std::cos(lobes * (th - phase)) ? 1 : 0;
        }
    return m;
}

SynthCase make_blob_case(uint64_t seed) {
    std::mt19937_64 rng(seed);
    SynthCase c;
    c.name = "blob";
    c.seed = seed;

    const double ax = uniform(rng, 18.0, 26.0);
    const double ay = uniform(rng, 12.0, 18.0);
    const double power = uniform(rng, 1.8, 2.4);
    const double angle = uniform(rng, 0.0, std::numbers::pi);
    const double scale = uniform(rng, 0.95, 1.15);
    const Vec2 center{64.0 + uniform(rng, -6.0, 6.0), 64.0 + uniform(rng, -6.0, 6.0)};

    c.truth = render_blob(kImageSize, kImageSize, center, scale * ax, scale * ay, power, angle);
    const Vec2 tc{kTemplateSize / 2.0, kTemplateSize / 2.0};
    c.template_masks.push_back(render_blob(kTemplateSize, kTemplateSize, tc, ax, ay, power, 0.0));
    c.template_masks.push_back(
        render_blob(kTemplateSize, kTemplateSize, tc, 1.12 * ax, 1.12 * ay, power, 0.0));

    c.image = two_tone(c.truth);
    add_laplace_noise(c.image, rng, 0.05);
    return c;
}

SynthCase make_lshape_case(uint64_t seed) {
    std::mt19937_64 rng(seed);
    SynthCase c;
    c.name = "lshape";
    c.seed = seed;

    const double alx = uniform(rng, 34.0, 44.0);
    const double aly = uniform(rng, 30.0, 40.0);
    const double th = uniform(rng, 10.0, 14.0);
    const double angle = uniform(rng, 0.0, std::numbers::pi);
    const double scale = uniform(rng, 0.95, 1.15);
    const Vec2 center{64.0 + uniform(rng, -6.0, 6.0), 64.0 + uniform(rng, -6.0, 6.0)};

    c.truth = render_lshape(kImageSize, kImageSize, center, scale * alx, scale * aly,
                            scale * th, angle);
    const Vec2 tc{kTemplateSize / 2.0, kTemplateSize / 2.0};
    c.template_masks.push_back(render_lshape(kTemplateSize, kTemplateSize, tc, alx, aly, th, 0.0));
    c.template_masks.push_back(
        render_lshape(kTemplateSize, kTemplateSize, tc, 1.12 * alx, 1.12 * aly, 1.12 * th, 0.0));

    c.image = two_tone(c.truth);
    add_laplace_noise(c.image, rng, 0.05);
    return c;
}

SynthCase make_star_case(uint64_t seed, int lobes) {
    std::mt19937_64 rng(seed);
    SynthCase c;
    c.name = "star";
    c.seed = seed;

    const double r0 = uniform(rng, 31.0, 37.0);
    const double amp = uniform(rng, 12.0, 16.0);
    const double phase = uniform(rng, 0.0, 2.0 * std::numbers::pi);
    const Vec2 center{64.0 + uniform(rng, -6.0, 6.0), 64.0 + uniform(rng, -6.0, 6.0)};

    c.truth = render_star(kImageSize, kImageSize, center, r0, amp, lobes, phase);
    const Vec2 tc{kTemplateSize / 2.0, kTemplateSize / 2.0};
    c.template_masks.push_back(render_star(kTemplateSize, kTemplateSize, tc, r0, amp, lobes, 0.0));
    c.template_masks.push_back(
        render_star(kTemplateSize, kTemplateSize, tc, r0 + 3.0, amp, lobes, 0.0));

    c.image = two_tone(c.truth);
    add_laplace_noise(c.image, rng, 0.05);
    return c;
}

SynthCase make_corrupt_case(uint64_t seed, double fraction) {
    std::mt19937_64 rng(seed);
    SynthCase c;
    c.name = "corrupt";
    c.seed = seed;

    const double ax = uniform(rng, 20.0, 26.0);
    const double ay = uniform(rng, 14.0, 18.0);
    const double power = uniform(rng, 1.9, 2.3);
    const double angle = uniform(rng, 0.0, std::numbers::pi);
    const double scale = uniform(rng, 0.95, 1.1);
    const Vec2 center{64.0 + uniform(rng, -6.0, 6.0), 64.0 + uniform(rng, -6.0, 6.0)};

    c.truth = render_blob(kImageSize, kImageSize, center, scale * ax, scale * ay, power, angle);
    const Vec2 tc{kTemplateSize / 2.0, kTemplateSize / 2.0};
    c.template_masks.push_back(render_blob(kTemplateSize, kTemplateSize, tc, ax, ay, power, 0.0));
    // Single template: the bandwidth rule needs a pair, so the manifest pins
    // beta. The two-tone image makes the fitted likelihoods razor-sharp, so
    // the prior needs real weight to beat them over the corrupted pixels.
    c.beta_override = 40.0;

    c.image = two_tone(c.truth);
    corrupt_foreground(c.image, c.truth, rng, std::clamp(fraction, 0.0, 1.0));
    return c;
}

SynthCase make_hybrid_case(uint64_t seed) {
    std::mt19937_64 rng(seed);
    SynthCase c;
    c.name = "hybrid";
    c.seed = seed;

    const double phase = uniform(rng, 0.0, 2.0 * std::numbers::pi);
    const Vec2 center{64.0 + uniform(rng, -6.0, 6.0), 64.0 + uniform(rng, -6.0, 6.0)};
    c.truth = render_star(kImageSize, kImageSize, center, 31.0, 13.0, 5, phase);

    constexpr int kStarCanvas = 104;
    const Vec2 tc{kStarCanvas / 2.0, kStarCanvas / 2.0};
    for (double r0 : {27.0, 31.0, 35.0})
        c.template_masks.push_back(render_star(kStarCanvas, kStarCanvas, tc, r0, 13.0, 3, 0.0));
    for (double r0 : {27.0, 31.0, 35.0})
        c.template_masks.push_back(render_star(kStarCanvas, kStarCanvas, tc, r0, 13.0, 5, 0.0));

    c.image = two_tone(c.truth);
    add_laplace_noise(c.image, rng, 0.06);
    return c;
}

void write_case(const SynthCase& c, const std::string& dir) {
    namespace fs = std::filesystem;
    const fs::path root(dir);
    fs::create_directories(root / "templates");

    save_image(c.image, (root / "image.png").string());
    save_mask(c.truth, (root / "truth.png").string());

    nlohmann::ordered_json tpl = nlohmann::ordered_json::array();
    for (size_t j = 0; j < c.template_masks.size(); ++j) {
        const std::string rel = "templates/t" + std::to_string(j) + ".png";
        save_mask(c.template_masks[j], (root / rel).string());
        nlohmann::ordered_json entry{{"mask_path", rel}};
        if (!c.template_weights.empty()) entry["weight"] = c.template_weights[j];
        tpl.push_back(entry);
    }
    {
        std::ofstream out(root / "templates.json");
        out << tpl.dump(2) << "\n";
    }

    nlohmann::ordered_json manifest{
        {"image_path", "image.png"},
        {"templates_path", "templates.json"},
        {"output_dir", "out"},
        {"rng_seed", c.seed},
    };
    if (c.beta_override) manifest["beta_override"] = *c.beta_override;
    {
        std::ofstream out(root / "manifest.json");
        out << manifest.dump(2) << "\n";
    }
}

double dice(const BinaryMask& a, const BinaryMask& b) {
    size_t inter = 0, na = 0, nb = 0;
    for (size_t i = 0; i < a.size(); ++i) {
        na += a[i] ? 1 : 0;
        nb += b[i] ? 1 : 0;
        inter += (a[i] && b[i]) ? 1 : 0;
    }
    if (na + nb == 0) return 1.0;
    return 2.0 * (double)inter / (double)(na + nb);
}

namespace {

int count_components_8(const BinaryMask& m, size_t min_area) {
    std::vector<uint8_t> seen(m.size(), 0);
    int count = 0;
    for (int y = 0; y < m.height(); ++y)
        for (int x = 0; x < m.width(); ++x) {
            const size_t start = (size_t)y * m.width() + x;
            if (!m[start] || seen[start]) continue;
            size_t area = 0;
            std::deque<std::pair<int, int>> queue{{x, y}};
            seen[start] = 1;
            while (!queue.empty()) {
                const auto [cx, cy] = queue.front();
                queue.pop_front();
                ++area;
                for (int dy = -1; dy <= 1; ++dy)
                    for (int dx = -1; dx <= 1; ++dx) {
                        const int nx = cx + dx, ny = cy + dy;
                        if (nx < 0 || nx >= m.width() || ny < 0 || ny >= m.height()) continue;
                        const size_t ni = (size_t)ny * m.width() + nx;
                        if (m[ni] && !seen[ni]) {
                            seen[ni] = 1;
                            queue.emplace_back(nx, ny);
                        }
                    }
            }
            if (area >= min_area) ++count;
        }
    return count;
}

BinaryMask dominant_component_8(const BinaryMask& m) {
    std::vector<int> label(m.size(), -1);
    int next = 0, best = -1;
    size_t best_area = 0;
    for (int y = 0; y < m.height(); ++y)
        for (int x = 0; x < m.width(); ++x) {
            const size_t start = (size_t)y * m.width() + x;
            if (!m[start] || label[start] >= 0) continue;
            const int id = next++;
            size_t area = 0;
            std::deque<std::pair<int, int>> queue{{x, y}};
            label[start] = id;
            while (!queue.empty()) {
                const auto [cx, cy] = queue.front();
                queue.pop_front();
                ++area;
                for (int dy = -1; dy <= 1; ++dy)
                    for (int dx = -1; dx <= 1; ++dx) {
                        const int nx = cx + dx, ny = cy + dy;
                        if (!m.in_bounds(nx, ny)) continue;
                        const size_t ni = (size_t)ny * m.width() + nx;
                        if (m[ni] && label[ni] < 0) {
                            label[ni] = id;
                            queue.emplace_back(nx, ny);
                        }
                    }
            }
            if (area > best_area) {
                best_area = area;
                best = id;
            }
        }
    BinaryMask out(m.width(), m.height());
    for (size_t i = 0; i < m.size(); ++i) out[i] = label[i] == best ? 1 : 0;
    return out;
}

}  // namespace

int lobe_count(const BinaryMask& mask) {
    const int fg = foreground_count(mask);
    if (fg == 0 || (size_t)fg == mask.size()) return 0;

    // Work on the dominant component only; stray specks would register as
    // extra lobes.
    const BinaryMask body = dominant_component_8(mask);

    double cx = 0.0, cy = 0.0, area = 0.0;
    for (int y = 0; y < body.height(); ++y)
        for (int x = 0; x < body.width(); ++x)
            if (body.at(x, y)) {
                cx += x;
                cy += y;
                area += 1.0;
            }
    cx /= area;
    cy /= area;

    // Radial profile around the centroid: lobes reach out to r_max while the
    // gaps between them pull the boundary in to r_min. Cutting at the
    // midpoint radius leaves one connected piece per lobe. A shape without
    // protrusions has r_min close to r_max and the cut strands at most
    // rounding slivers, which the area floor discards.
    double r_max = 0.0;
    double r_min = std::numeric_limits<double>::max();
    for (int y = 0; y < body.height(); ++y)
        for (int x = 0; x < body.width(); ++x) {
            if (!body.at(x, y)) continue;
            const double r = std::hypot(x - cx, y - cy);
            r_max = std::max(r_max, r);
            bool boundary = false;
            for (int dy = -1; dy <= 1 && !boundary; ++dy)
                for (int dx = -1; dx <= 1 && !boundary; ++dx) {
                    const int nx = x + dx, ny = y + dy;
                    if (!body.in_bounds(nx, ny) || !body.at(nx, ny)) boundary = true;
                }
            if (boundary) r_min = std::min(r_min, r);
        }

    const double cut = 0.5 * (r_min + r_max);
    BinaryMask outer(body.width(), body.height());
    for (int y = 0; y < body.height(); ++y)
        for (int x = 0; x < body.width(); ++x)
            outer.at(x, y) = (body.at(x, y) && std::hypot(x - cx, y - cy) > cut) ? 1 : 0;
    return count_components_8(outer, 9);
}

}  // namespace mmcut
