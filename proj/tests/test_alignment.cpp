#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "mmcut/alignment.hpp"
#include "mmcut/distance_transform.hpp"
#include "mmcut/errors.hpp"
#include "mmcut/synth.hpp"

using namespace mmcut;

namespace {

double wrap_angle(double a) {
    while (a > std::numbers::pi) a -= 2.0 * std::numbers::pi;
    while (a < -std::numbers::pi) a += 2.0 * std::numbers::pi;
    return a;
}

// Foreground = transformed template interior, sampled at pixel centers.
BinaryMask render_pose(const TemplateEntry& tmpl, const RigidTransform& t, int w, int h) {
    BinaryMask out(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            out.at(x, y) =
                sample_field(tmpl.field, t.apply({(double)x, (double)y}) + tmpl.centroid) > 0.0;
    return out;
}

}  // namespace

TEST_CASE("moment init is exact on a translated copy") {
    const BinaryMask shape = render_lshape(32, 32, {16, 16}, 11.0, 8.0, 5.0, 0.0);
    BinaryMask omega(64, 64);
    for (int y = 0; y < 32; ++y)
        for (int x = 0; x < 32; ++x)
            if (shape.at(x, y)) omega.at(x + 19, y + 7) = 1;

    const RigidTransform t = moment_init(omega, shape);
    const Vec2 centroid = mask_centroid(omega);
    CHECK(t.alpha == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(std::fabs(wrap_angle(t.omega_angle)) < 1e-6);
    CHECK(t.c.x == doctest::Approx(centroid.x).epsilon(1e-9));
    CHECK(t.c.y == doctest::Approx(centroid.y).epsilon(1e-9));
}

TEST_CASE("moment init needs spatial extent on both sides") {
    BinaryMask tiny(8, 8);
    tiny.at(3, 3) = tiny.at(4, 3) = 1;
    const BinaryMask shape = render_blob(16, 16, {8, 8}, 4.0, 3.0, 2.0, 0.0);
    CHECK_THROWS_AS(moment_init(tiny, shape), DegenerateShape);
    CHECK_THROWS_AS(moment_init(shape, tiny), DegenerateShape);
}

TEST_CASE("analytic gradient matches central differences") {
    const TemplateEntry tmpl =
        make_template(render_lshape(36, 36, {18, 18}, 12.0, 9.0, 5.0, 0.0), 1.0);
    const BinaryMask omega_mask = render_blob(40, 40, {20, 19}, 9.0, 7.0, 2.0, 0.35);
    const DistanceField omega_field = signed_distance(omega_mask);
    const ShapeEnergyParams params{2.0};
    const SmoothingParams smoothing{1.5};

    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> da(-0.15, 0.15), dc(-2.0, 2.0), dw(-0.3, 0.3);
    const RigidTransform base = moment_init(omega_mask, tmpl, params);

    double worst = 0.0;
    for (int trial = 0; trial < 12; ++trial) {
        RigidTransform t = base;
        t.alpha += da(rng);
        t.c.x += dc(rng);
        t.c.y += dc(rng);
        t.omega_angle += dw(rng);

        const Vec4 g = energy_gradient(omega_field, tmpl.field, t, params, smoothing);
        Vec4 fd{};
        const double hs[4] = {1e-6, 1e-5, 1e-5, 1e-6};
        for (int i = 0; i < 4; ++i) {
            RigidTransform lo = t, hi = t;
            double* plo[4] = {&lo.alpha, &lo.c.x, &lo.c.y, &lo.omega_angle};
            double* phi[4] = {&hi.alpha, &hi.c.x, &hi.c.y, &hi.omega_angle};
            *plo[i] -= hs[i];
            *phi[i] += hs[i];
            fd[i] = (alignment_energy(omega_field, tmpl.field, hi, params, smoothing) -
                     alignment_energy(omega_field, tmpl.field, lo, params, smoothing)) /
                    (2.0 * hs[i]);
        }
        double scale = 1.0;
        for (int i = 0; i < 4; ++i) scale = std::max(scale, std::fabs(fd[i]));
        for (int i = 0; i < 4; ++i) worst = std::max(worst, std::fabs(g[i] - fd[i]) / scale);
    }
    CHECK(worst < 1e-3);
    MESSAGE("worst relative gradient error: ", worst);
}

TEST_CASE("analytic hessian matches the differenced gradient") {
    const TemplateEntry tmpl =
        make_template(render_blob(34, 34, {17, 17}, 10.0, 6.0, 2.6, -0.2), 1.0);
    const BinaryMask omega_mask = render_lshape(40, 40, {20, 20}, 11.0, 9.0, 6.0, 0.15);
    const DistanceField omega_field = signed_distance(omega_mask);
    const ShapeEnergyParams params{2.0};
    const SmoothingParams smoothing{1.5};

    std::mt19937_64 rng(32);
    std::uniform_real_distribution<double> da(-0.1, 0.1), dc(-1.5, 1.5), dw(-0.25, 0.25);
    const RigidTransform base = moment_init(omega_mask, tmpl, params);

    double worst = 0.0;
    for (int trial = 0; trial < 8; ++trial) {
        RigidTransform t = base;
        t.alpha += da(rng);
        t.c.x += dc(rng);
        t.c.y += dc(rng);
        t.omega_angle += dw(rng);

        const Mat4 h = energy_hessian(omega_field, tmpl.field, t, params, smoothing);
        Mat4 fd{};
        const double hs[4] = {1e-5, 1e-4, 1e-4, 1e-5};
        for (int j = 0; j < 4; ++j) {
            RigidTransform lo = t, hi = t;
            double* plo[4] = {&lo.alpha, &lo.c.x, &lo.c.y, &lo.omega_angle};
            double* phi[4] = {&hi.alpha, &hi.c.x, &hi.c.y, &hi.omega_angle};
            *plo[j] -= hs[j];
            *phi[j] += hs[j];
            const Vec4 glo = energy_gradient(omega_field, tmpl.field, lo, params, smoothing);
            const Vec4 ghi = energy_gradient(omega_field, tmpl.field, hi, params, smoothing);
            for (int i = 0; i < 4; ++i) fd[i * 4 + j] = (ghi[i] - glo[i]) / (2.0 * hs[j]);
        }
        double scale = 1.0;
        for (int k = 0; k < 16; ++k) scale = std::max(scale, std::fabs(fd[k]));
        for (int k = 0; k < 16; ++k) worst = std::max(worst, std::fabs(h[k] - fd[k]) / scale);
    }
    CHECK(worst < 1e-2);
    MESSAGE("worst relative hessian error: ", worst);
}

TEST_CASE("hessian is symmetric") {
    const TemplateEntry tmpl =
        make_template(render_blob(30, 30, {15, 15}, 8.0, 6.0, 2.0, 0.1), 1.0);
    const BinaryMask omega_mask = render_blob(36, 36, {18, 18}, 9.0, 5.0, 2.0, 0.4);
    const DistanceField omega_field = signed_distance(omega_mask);
    const RigidTransform t = moment_init(omega_mask, tmpl);
    const Mat4 h = energy_hessian(omega_field, tmpl.field, t, {}, {});
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) CHECK(h[i * 4 + j] == h[j * 4 + i]);
}

// Elongated ellipse plus an off-axis bump: a wide second-moment eigen-gap
// keeps the principal axis (and hence the recovered angle) well conditioned.
static BinaryMask pose_target() {
    BinaryMask out = render_blob(32, 32, {15, 16}, 13.5, 5.0, 2.0, 0.0);
    const BinaryMask bump = render_blob(32, 32, {23, 21}, 4.0, 4.0, 2.0, 0.0);
    for (int y = 0; y < out.height(); ++y)
        for (int x = 0; x < out.width(); ++x)
            if (bump.at(x, y)) out.at(x, y) = 1;
    return out;
}

TEST_CASE("alignment recovers a known pose from moments plus newton") {
    const TemplateEntry tmpl = make_template(pose_target(), 1.0);
    std::mt19937_64 rng(106);
    std::uniform_real_distribution<double> uf(0.7, 1.4), uw(-20.0, 20.0), ut(-10.0, 10.0);

    int hits = 0;
    const int trials = 30;
    for (int trial = 0; trial < trials; ++trial) {
        const double f = uf(rng);
        const RigidTransform truth{1.0 / f, uw(rng) * std::numbers::pi / 180.0,
                                   {48.0 + ut(rng), 48.0 + ut(rng)}};
        const BinaryMask omega = render_pose(tmpl, truth, 96, 96);
        const RigidTransform init = moment_init(omega, tmpl);
        const AlignmentReport rep = align(omega, tmpl, init);

        const double dc = std::hypot(rep.transform.c.x - truth.c.x, rep.transform.c.y - truth.c.y);
        const double dw =
            std::fabs(wrap_angle(rep.transform.omega_angle - truth.omega_angle)) * 180.0 /
            std::numbers::pi;
        const double dalpha = std::fabs(rep.transform.alpha / truth.alpha - 1.0);
        if (dc < 0.5 && dw < 1.0 && dalpha < 0.05) ++hits;
    }
    CHECK(hits >= trials - 1);
    MESSAGE("pose recovered in ", hits, "/", trials, " trials");
}

TEST_CASE("align never worsens the discrete shape energy of its init") {
    const TemplateEntry tmpl =
        make_template(render_blob(28, 28, {14, 14}, 8.0, 5.0, 2.0, 0.3), 1.0);
    const BinaryMask omega = render_blob(48, 48, {25, 22}, 10.0, 7.0, 2.0, -0.3);
    const ShapeEnergyParams params{2.0};

    std::mt19937_64 rng(34);
    std::uniform_real_distribution<double> da(-0.3, 0.3), dc(-6.0, 6.0), dw(-0.8, 0.8);
    for (int trial = 0; trial < 10; ++trial) {
        RigidTransform init = moment_init(omega, tmpl, params);
        init.alpha = std::max(0.1, init.alpha + da(rng));
        init.c.x += dc(rng);
        init.c.y += dc(rng);
        init.omega_angle += dw(rng);

        const AlignmentReport rep = align(omega, tmpl, init, params);
        const double before = shape_energy(omega, tmpl.field, tmpl.mask, init, params);
        const double after = shape_energy(omega, tmpl.field, tmpl.mask, rep.transform, params);
        CHECK(after <= before + 1e-9);
    }
}
