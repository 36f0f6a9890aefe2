#include <doctest.h>

#include <cmath>

#include "dmgrid/deep_memory.hpp"
#include "dmgrid/grid.hpp"
#include "dmgrid/routing.hpp"
#include "dmgrid/simulation.hpp"
#include "helpers.hpp"

using namespace dmgrid;
using testutil::basis;

namespace {
ExpertRouter claimed_router(const std::vector<Vec>& centroids, RoutingMode mode = RoutingMode::Hard) {
    ExpertRouter r(static_cast<int>(centroids.size()), static_cast<int>(centroids[0].size()), mode);
    r.input_centroids = centroids;
    r.claimed.assign(centroids.size(), true);
    return r;
}
}  // namespace

TEST_CASE("exact centroid match selects that expert") {
    const auto r = claimed_router({basis(4, 0), basis(4, 1), basis(4, 2)});
    CHECK(nearest_expert(r, basis(4, 2)) == 2);
    CHECK(nearest_expert(r, 3.0 * basis(4, 1)) == 1);
}

TEST_CASE("ties go to the lowest index") {
    const auto r = claimed_router({basis(2, 0), basis(2, 1)});
    Vec x(2);
    x << 1.0, 1.0;
    CHECK(nearest_expert(r, x) == 0);
}

TEST_CASE("nearest expert agrees with a brute-force argmax") {
    Rng rng(11);
    std::vector<Vec> c;
    for (int i = 0; i < 5; ++i) c.push_back(rng.unit_vector(8));
    const auto r = claimed_router(c);
    for (int t = 0; t < 100; ++t) {
        const Vec x = rng.gaussian(8);
        int best = 0;
        for (int e = 1; e < 5; ++e)
            if (x.dot(c[e]) / c[e].norm() > x.dot(c[best]) / c[best].norm()) best = e;
        CHECK(nearest_expert(r, x) == best);
        // Positive rescaling never changes the winner.
        CHECK(nearest_expert(r, 7.5 * x) == best);
    }
}

TEST_CASE("unclaimed experts are claimed in index order") {
    ExpertRouter r(3, 4, RoutingMode::Hard);
    Rng rng(1);
    CHECK(select_expert(r, basis(4, 0), rng).expert == 0);
    CHECK(select_expert(r, basis(4, 1), rng).expert == 1);
    CHECK(select_expert(r, basis(4, 0), rng).expert == 0);
    CHECK(select_expert(r, basis(4, 2), rng).expert == 2);
    CHECK(r.claimed == std::vector<bool>{true, true, true});
}

TEST_CASE("all-zero input raises RoutingDegenerate") {
    ExpertRouter r(2, 3, RoutingMode::Hard);
    Rng rng(1);
    CHECK_THROWS_AS(select_expert(r, Vec::Zero(3), rng), RoutingDegenerate);
}

TEST_CASE("soft routing sharpens as the temperature drops") {
    auto r = claimed_router({basis(3, 0), basis(3, 1), basis(3, 2)}, RoutingMode::Soft);
    Vec x(3);
    x << 1.0, 0.6, 0.2;
    r.temperature = 1.0;
    const double warm = routing_weights(r, x)[0];
    r.temperature = 0.05;
    const double cold = routing_weights(r, x)[0];
    CHECK(cold > warm);
    CHECK(cold > 0.99);
    double s = 0.0;
    for (double w : routing_weights(r, x)) s += w;
    CHECK(s == doctest::Approx(1.0));
}

TEST_CASE("fixed map routes by context label") {
    ExpertRouter r(3, 2, RoutingMode::FixedMap);
    r.fixed_map = {2, 0, 1};
    Rng rng(1);
    CHECK(select_expert(r, basis(2, 0), rng, 0).expert == 2);
    CHECK(select_expert(r, basis(2, 0), rng, 2).expert == 1);
    CHECK_THROWS_AS(select_expert(r, basis(2, 0), rng, -1), ConfigError);
}

TEST_CASE("balanced partition") {
    CHECK(balanced_partition(256, 3) == std::vector<int>{86, 85, 85});
    CHECK(balanced_partition(10, 1) == std::vector<int>{10});
    CHECK_THROWS_AS(balanced_partition(2, 3), ConfigError);
}

TEST_CASE("binding disruption with one expert is the identity") {
    GridConfig cfg;
    Rng rng(2);
    Grid g(cfg, 1, rng);
    ExpertRouter r(1, cfg.dim, RoutingMode::BindingDisruption);
    const auto before = g.labels();
    CHECK(apply_binding_disruption(r, g, rng) == before);
}

TEST_CASE("binding disruption makes every unit's label uniform") {
    GridConfig cfg;
    Rng rng(3);
    Grid g(cfg, 3, rng);
    ExpertRouter r(3, cfg.dim, RoutingMode::BindingDisruption);
    const auto sizes = g.group_sizes();
    std::vector<std::vector<long>> counts(g.size(), std::vector<long>(3, 0));
    const int cycles = 10000;
    for (int t = 0; t < cycles; ++t) {
        apply_binding_disruption(r, g, rng);
        CHECK_EQ(g.group_sizes(), sizes);
        for (std::size_t i = 0; i < g.size(); ++i) ++counts[i][g.unit(i).expert_id];
    }
    std::vector<double> probs;
    for (int s : sizes) probs.push_back(static_cast<double>(s) / g.size());
    // Chi-square with 2 dof has survival exp(-x/2); Bonferroni over all units at 1%.
    const double limit = -2.0 * std::log(0.01 / static_cast<double>(g.size()));
    int bad = 0;
    for (const auto& c : counts)
        if (testutil::chi_square(c, probs) > limit) ++bad;
    CHECK(bad == 0);
}

TEST_CASE("group sizes are conserved in every routing mode") {
    for (const char* mode : {"hard", "disabled", "disruption", "soft", "fixed"}) {
        SimConfig cfg;
        cfg.routing.mode = mode;
        Simulation sim(cfg, 5);
        const auto sizes = sim.grid().group_sizes();
        for (int t = 0; t < 300; ++t) sim.step(t / 10 % 3);
        CHECK_MESSAGE(sim.grid().group_sizes() == sizes, mode);
    }
}

TEST_CASE("disrupted routing carries no context information downstream") {
    SimConfig cfg;
    cfg.routing.mode = "disruption";
    cfg.memory.record = false;
    cfg.memory.seed = false;
    Simulation sim(cfg, 9);
    const auto reports = sim.run_plan();
    CHECK(reports.back().metrics.mutual_information <= 0.05);
}
