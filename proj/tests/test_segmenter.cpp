#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "mmcut/errors.hpp"
#include "mmcut/segmenter.hpp"
#include "mmcut/synth.hpp"
#include "oracles.hpp"

using namespace mmcut;

namespace {

TemplateSet set_from_case(const SynthCase& c) {
    TemplateSet set;
    const double uniform = 1.0 / c.template_masks.size();
    for (size_t j = 0; j < c.template_masks.size(); ++j) {
        const double w = c.template_weights.empty() ? uniform : c.template_weights[j];
        set.entries.push_back(make_template(c.template_masks[j], w));
    }
    return set;
}

SegmenterConfig config_from_case(const SynthCase& c) {
    SegmenterConfig cfg;
    if (c.beta_override) cfg.beta_override = c.beta_override;
    return cfg;
}

// Small fixture shared by the energy-identity tests: a 5x5 image, two
// templates anchored over its middle, and a fixed intensity model.
struct TinyProblem {
    GrayImage image{5, 5};
    TemplateSet set;
    LaplaceParams theta{0.75, 0.08, 0.25, 0.09};
    ShapeEnergyParams params{2.0};

    explicit TinyProblem(uint64_t seed, double beta = 3.0) {
        std::mt19937_64 rng(seed);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        for (size_t i = 0; i < image.size(); ++i) image[i] = u(rng);
        set.entries.push_back(
            make_template(render_blob(17, 17, {8, 8}, 5.0, 3.5, 2.0, 0.2), 0.6));
        set.entries.push_back(
            make_template(render_lshape(17, 17, {8, 8}, 6.0, 5.0, 3.0, 0.0), 0.4));
        set.beta = beta;
        for (auto& e : set.entries) e.current_transform = {1.0, 0.1, {2.0, 2.0}};
    }
};

}  // namespace

TEST_CASE("the surrogate majorizes the total energy and is tight at its anchor") {
    std::mt19937_64 rng(41);
    for (int instance = 0; instance < 5; ++instance) {
        const TinyProblem p(100 + instance);
        const BinaryMask anchor = oracles::random_mixed_mask(rng, 5, 5);
        const MMWeights c = mm_weights(anchor, p.set, p.params);

        const double total_anchor = total_energy(anchor, p.image, p.theta, p.set, p.params);
        const double sur_anchor = surrogate_energy(anchor, c, p.image, p.theta, p.set, p.params);

        for (int trial = 0; trial < 10; ++trial) {
            const BinaryMask omega = oracles::random_mixed_mask(rng, 5, 5);
            const double total = total_energy(omega, p.image, p.theta, p.set, p.params);
            const double sur = surrogate_energy(omega, c, p.image, p.theta, p.set, p.params);
            CHECK(total - total_anchor <= sur - sur_anchor + 1e-9);
        }

        // At the anchor the gap is exactly the responsibilities' divergence
        // from the template weights minus the kernel normalizer.
        double gap = -0.5 * std::log(p.set.beta / (2.0 * std::numbers::pi));
        for (size_t j = 0; j < c.c.size(); ++j)
            if (c.c[j] > 0.0) gap += c.c[j] * std::log(c.c[j] / p.set.entries[j].weight);
        CHECK(total_anchor == doctest::Approx(sur_anchor + gap).epsilon(1e-9));
    }
}

TEST_CASE("anchored surrogate overload matches the explicit-weights one") {
    const TinyProblem p(7);
    std::mt19937_64 rng(42);
    const BinaryMask anchor = oracles::random_mixed_mask(rng, 5, 5);
    const BinaryMask omega = oracles::random_mixed_mask(rng, 5, 5);
    const MMWeights c = mm_weights(anchor, p.set, p.params);
    CHECK(surrogate_energy(omega, anchor, p.image, p.theta, p.set, p.params) ==
          doctest::Approx(surrogate_energy(omega, c, p.image, p.theta, p.set, p.params))
              .epsilon(1e-12));
}

TEST_CASE("single-template totals reduce to a closed form") {
    TinyProblem p(8);
    p.set.entries.resize(1);
    p.set.entries[0].weight = 1.0;
    std::mt19937_64 rng(43);
    const BinaryMask omega = oracles::random_mixed_mask(rng, 5, 5);

    const double u = template_energies(omega, p.set, p.params)[0];
    double nll = 0.0;
    for (size_t i = 0; i < omega.size(); ++i)
        nll += omega[i] ? neg_log_likelihood(p.image[i], p.theta.mu_fg, p.theta.b_fg)
                        : neg_log_likelihood(p.image[i], p.theta.mu_bg, p.theta.b_bg);
    const double want =
        nll + 0.5 * p.set.beta * u - 0.5 * std::log(p.set.beta / (2.0 * std::numbers::pi));
    CHECK(total_energy(omega, p.image, p.theta, p.set, p.params) ==
          doctest::Approx(want).epsilon(1e-12));
}

TEST_CASE("the mm loop descends the total energy while parameters are frozen") {
    // Refit/realign thresholds above one labeling's worth of flips keep theta
    // and the transforms fixed after initialization, which is the regime where
    // the per-iteration totals must be non-increasing.
    const struct { const char* name; SynthCase c; } cases[] = {
        {"blob", make_blob_case(1)},
        {"star", make_star_case(2, 5)},
        {"corrupt", make_corrupt_case(3, 0.2)},
        {"lshape", make_lshape_case(4)},
    };
    for (const auto& [name, c] : cases) {
        TemplateSet set = set_from_case(c);
        SegmenterConfig cfg = config_from_case(c);
        cfg.refit_fraction = 10.0;
        cfg.realign_fraction = 10.0;
        const SegmentResult r = segment(c.image, set, cfg);
        REQUIRE(!r.trace.empty());
        for (size_t i = 1; i < r.trace.size(); ++i) {
            INFO(name, " iteration ", r.trace[i].iteration);
            CHECK(r.trace[i].total_energy <= r.trace[i - 1].total_energy + 1e-9);
        }
        CHECK(r.trace.front().total_energy <= r.initial_total_energy + 1e-9);
    }
}

TEST_CASE("blob segmentation converges quickly and accurately") {
    const SynthCase c = make_blob_case(5);
    TemplateSet set = set_from_case(c);
    const SegmentResult r = segment(c.image, set, config_from_case(c));
    CHECK(r.converged);
    CHECK(r.trace.size() < 10);
    CHECK(dice(r.mask, c.truth) > 0.95);
    CHECK(dice(r.mask, c.truth) >= dice(r.initial_mask, c.truth) - 1e-12);
}

TEST_CASE("trace rows carry normalized responsibilities and the final row is stationary") {
    const SynthCase c = make_star_case(6, 5);
    TemplateSet set = set_from_case(c);
    const SegmentResult r = segment(c.image, set, config_from_case(c));
    REQUIRE(r.converged);
    for (const auto& row : r.trace) {
        REQUIRE(row.c.size() == set.entries.size());
        double sum = 0.0;
        for (double v : row.c) {
            CHECK(v >= 0.0);
            sum += v;
        }
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
        CHECK(row.transforms.size() == set.entries.size());
    }
    CHECK(r.trace.back().labels_changed == 0);
    CHECK(r.set.beta > 0.0);
}

TEST_CASE("segmentation is deterministic") {
    const SynthCase c = make_corrupt_case(9, 0.2);
    TemplateSet set1 = set_from_case(c);
    TemplateSet set2 = set_from_case(c);
    const SegmenterConfig cfg = config_from_case(c);
    const SegmentResult a = segment(c.image, set1, cfg);
    const SegmentResult b = segment(c.image, set2, cfg);
    CHECK(a.mask == b.mask);
    REQUIRE(a.trace.size() == b.trace.size());
    for (size_t i = 0; i < a.trace.size(); ++i) {
        CHECK(a.trace[i].total_energy == b.trace[i].total_energy);
        CHECK(a.trace[i].labels_changed == b.trace[i].labels_changed);
    }
}

TEST_CASE("the prior fills in corrupted foreground that the likelihood abandons") {
    const SynthCase c = make_corrupt_case(2, 0.2);
    TemplateSet set = set_from_case(c);
    const SegmentResult r = segment(c.image, set, config_from_case(c));
    const double with_prior = dice(r.mask, c.truth);
    const double likelihood_only = dice(r.initial_mask, c.truth);
    CHECK(with_prior > likelihood_only);
    CHECK(with_prior > 0.95);
}

TEST_CASE("a lone template without a bandwidth override is refused") {
    const SynthCase c = make_blob_case(1);
    TemplateSet set;
    set.entries.push_back(make_template(c.template_masks[0], 1.0));
    SegmenterConfig cfg;  // no beta_override
    CHECK_THROWS_AS(segment(c.image, set, cfg), InsufficientTemplates);
}

TEST_CASE("the network observer sees every iteration") {
    const SynthCase c = make_blob_case(3);
    TemplateSet set = set_from_case(c);
    SegmenterConfig cfg = config_from_case(c);
    std::vector<int> seen;
    cfg.network_observer = [&](int iteration, const FlowNetwork& net) {
        seen.push_back(iteration);
        CHECK(net.width() == c.image.width());
        CHECK(check_submodularity(net));
    };
    const SegmentResult r = segment(c.image, set, cfg);
    REQUIRE(seen.size() == r.trace.size());
    for (size_t i = 0; i < seen.size(); ++i) CHECK(seen[i] == (int)i + 1);
}
