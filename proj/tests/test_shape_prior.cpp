#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>

#include "mmcut/errors.hpp"
#include "mmcut/raster_io.hpp"
#include "mmcut/shape_prior.hpp"
#include "mmcut/synth.hpp"

using namespace mmcut;
namespace fs = std::filesystem;

TEST_CASE("template construction derives field, centroid, and scale") {
    BinaryMask m(9, 9);
    // 3x3 square: centroid (4, 4), radius of gyration sqrt(mean of {0,1,2} distances^2).
    for (int y = 3; y <= 5; ++y)
        for (int x = 3; x <= 5; ++x) m.at(x, y) = 1;
    const TemplateEntry e = make_template(m, 2.0);
    CHECK(e.centroid.x == doctest::Approx(4.0).epsilon(1e-15));
    CHECK(e.centroid.y == doctest::Approx(4.0).epsilon(1e-15));
    // Squared offsets from the centroid: 4 corners at 2, 4 edges at 1, center 0.
    CHECK(e.inertial_scale == doctest::Approx(std::sqrt(12.0 / 9.0)).epsilon(1e-12));
    CHECK(e.weight == 2.0);
    CHECK(e.field.at(4, 4) == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(e.field.at(0, 0) > -6.0);
    CHECK(e.field.at(0, 0) < 0.0);
}

TEST_CASE("degenerate template masks are rejected") {
    CHECK_THROWS_AS(make_template(BinaryMask(5, 5), 1.0), EmptyShape);
    BinaryMask one(5, 5);
    one.at(2, 2) = 1;
    CHECK_THROWS_AS(make_template(one, 1.0), DegenerateShape);
}

TEST_CASE("kernel values follow the scaled gaussian form") {
    for (double beta : {0.5, 2.0, 17.0}) {
        const double norm = std::sqrt(beta / (2.0 * std::numbers::pi));
        CHECK(kernel_value(0.0, beta) == doctest::Approx(norm).epsilon(1e-14));
        CHECK(kernel_value(1.0 / beta, beta) ==
              doctest::Approx(norm * std::exp(-0.5)).epsilon(1e-14));
        for (double u : {0.0, 0.3, 4.0}) {
            CHECK(std::log(kernel_value(u, beta)) ==
                  doctest::Approx(log_kernel_value(u, beta)).epsilon(1e-12));
            CHECK(log_kernel_value(u, beta) ==
                  doctest::Approx(0.5 * std::log(beta / (2.0 * std::numbers::pi)) -
                                  0.5 * beta * u)
                      .epsilon(1e-14));
        }
    }
}

TEST_CASE("responsibilities follow kernel ratios and survive extreme spreads") {
    TemplateSet set;
    set.entries.push_back(make_template(render_blob(15, 15, {7, 7}, 4.0, 3.0, 2.0, 0.0), 0.5));
    set.entries.push_back(make_template(render_blob(15, 15, {7, 7}, 3.0, 3.0, 2.0, 0.0), 0.5));
    set.beta = 4.0;

    // An energy gap of 2 ln(3) / beta makes the kernel ratio exactly 3:1.
    const double gap = 2.0 * std::log(3.0) / set.beta;
    MMWeights w = mm_weights_from_energies({1.0, 1.0 + gap}, set);
    REQUIRE(w.c.size() == 2);
    CHECK(w.c[0] == doctest::Approx(0.75).epsilon(1e-12));
    CHECK(w.c[1] == doctest::Approx(0.25).epsilon(1e-12));

    // Equal energies fall back to the prior weights.
    w = mm_weights_from_energies({5.0, 5.0}, set);
    CHECK(w.c[0] == doctest::Approx(0.5).epsilon(1e-12));

    // A spread that would underflow naive exponentials still normalizes.
    w = mm_weights_from_energies({0.0, 1e6}, set);
    CHECK(w.c[0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(w.c[1] >= 0.0);
    CHECK(w.c[0] + w.c[1] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("responsibilities from a labeling prefer the matching template") {
    TemplateSet set;
    set.entries.push_back(make_template(render_blob(21, 21, {10, 10}, 6.0, 4.0, 2.0, 0.2), 0.5));
    set.entries.push_back(make_template(render_lshape(21, 21, {10, 10}, 7.0, 6.0, 4.0, 0.0), 0.5));
    set.beta = 1.0;
    // Overlay both templates on a canvas holding a copy of the first shape.
    BinaryMask omega(29, 29);
    for (int y = 0; y < 21; ++y)
        for (int x = 0; x < 21; ++x)
            if (set.entries[0].mask.at(x, y)) omega.at(x + 4, y + 4) = 1;
    const Vec2 c = mask_centroid(omega);
    for (auto& e : set.entries) e.current_transform = {1.0, 0.0, c};

    const MMWeights w = mm_weights(omega, set, {});
    CHECK(w.c[0] > w.c[1]);
    CHECK(w.c[0] + w.c[1] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("bandwidth needs two templates and is positive when they exist") {
    TemplateSet lone;
    lone.entries.push_back(make_template(render_blob(15, 15, {7, 7}, 4.0, 3.0, 2.0, 0.0), 1.0));
    CHECK_THROWS_AS(compute_bandwidth(lone, {}), InsufficientTemplates);

    TemplateSet set;
    set.entries.push_back(make_template(render_blob(21, 21, {10, 10}, 6.0, 4.0, 2.0, 0.0), 0.5));
    set.entries.push_back(make_template(render_blob(21, 21, {10, 10}, 5.0, 5.0, 2.0, 0.0), 0.5));
    const double beta = compute_bandwidth(set, {});
    CHECK(beta > 0.0);
    CHECK(std::isfinite(beta));
    CHECK(compute_bandwidth(set, {}) == beta);  // deterministic

    // Near-identical templates drive the nearest-neighbor energies toward the
    // floor, so the bandwidth grows.
    TemplateSet twins;
    twins.entries.push_back(make_template(set.entries[0].mask, 0.5));
    twins.entries.push_back(make_template(set.entries[0].mask, 0.5));
    CHECK(compute_bandwidth(twins, {}) > beta);
}

TEST_CASE("template sets load from json with paths resolved and weights normalized") {
    const fs::path dir = fs::temp_directory_path() / "mmcut_prior_test";
    fs::create_directories(dir / "shapes");
    const BinaryMask a = render_blob(17, 17, {8, 8}, 5.0, 3.0, 2.0, 0.0);
    const BinaryMask b = render_blob(17, 17, {8, 8}, 4.0, 4.0, 2.0, 0.0);
    save_mask(a, (dir / "shapes" / "a.png").string());
    save_mask(b, (dir / "shapes" / "b.png").string());

    std::ofstream((dir / "set.json"))
        << R"([{"mask_path": "shapes/a.png", "weight": 3.0},)"
        << R"( {"mask_path": "shapes/b.png", "weight": 1.0}])";
    TemplateSet set = load_template_set((dir / "set.json").string());
    REQUIRE(set.entries.size() == 2);
    CHECK(set.entries[0].weight == doctest::Approx(0.75).epsilon(1e-12));
    CHECK(set.entries[1].weight == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(set.entries[0].mask == a);

    // Object form, omitted weights default to uniform.
    std::ofstream((dir / "set2.json"))
        << R"({"templates": [{"mask_path": "shapes/a.png"}, {"mask_path": "shapes/b.png"}]})";
    set = load_template_set((dir / "set2.json").string());
    CHECK(set.entries[0].weight == doctest::Approx(0.5).epsilon(1e-12));

    std::ofstream((dir / "bad.json")) << R"([{"mask_path": "shapes/missing.png"}])";
    CHECK_THROWS_AS(load_template_set((dir / "bad.json").string()), IoError);
}
