#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "mmcut/distance_transform.hpp"
#include "mmcut/errors.hpp"
#include "mmcut/graphcut.hpp"
#include "mmcut/synth.hpp"
#include "oracles.hpp"

using namespace mmcut;

TEST_CASE("max flow reaches the exhaustive minimum cut on tiny grids") {
    std::mt19937_64 rng(21);
    std::uniform_int_distribution<int> dim(1, 4);
    for (int trial = 0; trial < 60; ++trial) {
        const FlowNetwork net = oracles::random_network(rng, dim(rng), dim(rng));
        const CutResult r = max_flow(net);
        const double want = oracles::exhaustive_min_cut(net);
        CHECK(r.flow_value == doctest::Approx(want).epsilon(1e-12));
        // The labeling it reports must itself achieve that cost.
        CHECK(oracles::cut_cost(net, r.labeling) == doctest::Approx(want).epsilon(1e-12));
    }
}

TEST_CASE("tree-reuse and shortest-path solvers agree on larger grids") {
    std::mt19937_64 rng(22);
    for (int trial = 0; trial < 40; ++trial) {
        const FlowNetwork net = oracles::random_network(rng, 8, 8);
        const CutResult a = max_flow(net);
        const CutResult b = reference_max_flow(net);
        CHECK(a.flow_value == doctest::Approx(b.flow_value).epsilon(1e-9));
        CHECK(oracles::cut_cost(net, a.labeling) == doctest::Approx(a.flow_value).epsilon(1e-9));
        CHECK(oracles::cut_cost(net, b.labeling) == doctest::Approx(b.flow_value).epsilon(1e-9));
    }
}

TEST_CASE("max flow is deterministic") {
    std::mt19937_64 rng(23);
    const FlowNetwork net = oracles::random_network(rng, 10, 7);
    const CutResult a = max_flow(net);
    const CutResult b = max_flow(net);
    CHECK(a.flow_value == b.flow_value);
    CHECK(a.labeling == b.labeling);
}

TEST_CASE("labeling cut cost honors the stored energy offset") {
    std::mt19937_64 rng(24);
    FlowNetwork net = oracles::random_network(rng, 3, 3);
    net.set_energy_offset(17.25);
    const BinaryMask lab = oracles::random_mixed_mask(rng, 3, 3);
    CHECK(labeling_cut_cost(net, lab) == doctest::Approx(oracles::cut_cost(net, lab)).epsilon(1e-12));
}

TEST_CASE("submodularity check flags negative pair capacities") {
    std::mt19937_64 rng(25);
    FlowNetwork net = oracles::random_network(rng, 4, 4);
    CHECK(check_submodularity(net));
    net.set_neighbor(1, 1, NeighborDir::East, -0.001);
    CHECK(!check_submodularity(net));
}

namespace {

TemplateSet two_template_set(double beta) {
    TemplateSet set;
    set.entries.push_back(make_template(render_blob(17, 17, {8, 8}, 5.0, 3.5, 2.0, 0.2), 0.6));
    set.entries.push_back(make_template(render_blob(17, 17, {8, 8}, 4.0, 4.0, 3.0, 0.0), 0.4));
    set.beta = beta;
    // Anchor both templates over the middle of a small image.
    for (auto& e : set.entries) e.current_transform = {1.0, 0.15, {2.0, 1.5}};
    return set;
}

}  // namespace

TEST_CASE("network capacities transcribe the surrogate energy terms") {
    std::mt19937_64 rng(26);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    GrayImage img(5, 4);
    for (size_t i = 0; i < img.size(); ++i) img[i] = u(rng);
    LaplaceParams theta{0.75, 0.08, 0.25, 0.09};
    const TemplateSet set = two_template_set(3.0);
    const MMWeights weights{{0.7, 0.3}};
    const ShapeEnergyParams params{2.0};

    const FlowNetwork net = build_network(img, theta, set, weights, params);
    REQUIRE(net.width() == 5);
    REQUIRE(net.height() == 4);

    double offset = 0.0;
    for (int y = 0; y < 4; ++y)
        for (int x = 0; x < 5; ++x) {
            double src = neg_log_likelihood(img.at(x, y), theta.mu_bg, theta.b_bg);
            double snk = neg_log_likelihood(img.at(x, y), theta.mu_fg, theta.b_fg);
            for (size_t j = 0; j < set.entries.size(); ++j) {
                const auto& e = set.entries[j];
                const double phi = sample_field(
                    e.field, e.current_transform.apply({(double)x, (double)y}) + e.centroid);
                const double cost = 0.5 * set.beta * weights.c[j] * pow_abs(phi, params.lambda);
                (phi > 0.0 ? src : snk) += cost;
            }
            const double m = std::min(src, snk);
            offset += m;
            CHECK(net.cap_source(x, y) == doctest::Approx(src - m).epsilon(1e-12));
            CHECK(net.cap_sink(x, y) == doctest::Approx(snk - m).epsilon(1e-12));
        }
    CHECK(net.energy_offset() == doctest::Approx(offset).epsilon(1e-12));

    const double dist[4] = {1.0, 1.0, std::numbers::sqrt2, std::numbers::sqrt2};
    for (int y = 0; y < 4; ++y)
        for (int x = 0; x < 5; ++x)
            for (int d = 0; d < 4; ++d) {
                const auto dir = static_cast<NeighborDir>(d);
                if (!net.neighbor_in_bounds(x, y, dir)) continue;
                const double mx = x + kNeighborOffsets[d][0] * 0.5;
                const double my = y + kNeighborOffsets[d][1] * 0.5;
                double sum = 0.0;
                for (size_t j = 0; j < set.entries.size(); ++j) {
                    const auto& e = set.entries[j];
                    const double phi =
                        sample_field(e.field, e.current_transform.apply({mx, my}) + e.centroid);
                    sum += weights.c[j] * pow_abs(phi, params.lambda);
                }
                const double want = std::numbers::pi * set.beta / (16.0 * dist[d]) * sum;
                CHECK(net.neighbor_cap(x, y, dir) == doctest::Approx(want).epsilon(1e-12));
            }
}

TEST_CASE("non-finite capacities are rejected with the pixel named") {
    GrayImage img(3, 3, 0.5);
    img.at(1, 2) = std::numeric_limits<double>::quiet_NaN();
    const LaplaceParams theta{0.75, 0.08, 0.25, 0.09};
    const TemplateSet set = two_template_set(2.0);
    CHECK_THROWS_AS(build_network(img, theta, set, MMWeights{{0.5, 0.5}}, {}), NonFiniteWeight);
}

TEST_CASE("dimacs dump lists every node and both arc directions") {
    std::mt19937_64 rng(27);
    const FlowNetwork net = oracles::random_network(rng, 3, 2);
    std::ostringstream out;
    dump_dimacs(net, out);
    const std::string text = out.str();
    CHECK(text.rfind("p max 8 ", 0) == 0);  // 6 pixels + source + sink
    size_t arcs = 0;
    for (size_t pos = 0; (pos = text.find("\na ", pos)) != std::string::npos; ++pos) ++arcs;
    // 12 t-link arcs plus 2 per unordered neighbor pair (E:4 S:3 SE:2 SW:2 = 11).
    CHECK(arcs == 12 + 22);
}
