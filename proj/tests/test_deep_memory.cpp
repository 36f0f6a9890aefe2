#include <doctest.h>

#include <cmath>

#include "dmgrid/deep_memory.hpp"
#include "dmgrid/grid.hpp"
#include "dmgrid/simulation.hpp"
#include "dmgrid/stats.hpp"
#include "helpers.hpp"

using namespace dmgrid;
using testutil::basis;

TEST_CASE("first record from a zero slot") {
    DeepMemoryState dm(3, 4);
    Rng rng(1);
    record(dm, 1, basis(4, 2), rng);
    CHECK((dm.centroids[1] - 0.1 * basis(4, 2)).norm() < 1e-15);
    CHECK(dm.initialized[1]);
    CHECK_FALSE(dm.initialized[0]);
}

TEST_CASE("repeated recording converges to the fired mean") {
    DeepMemoryState dm(1, 4);
    Rng rng(1);
    Vec u(4);
    u << 0.5, -0.5, 0.5, 0.5;
    for (int i = 0; i < 200; ++i) record(dm, 0, u, rng);
    CHECK(cosine(dm.centroids[0], u) >= 1.0 - 1e-6);
    CHECK((dm.centroids[0] - u).norm() < 1e-8);
}

TEST_CASE("mismatched write lands in the shifted slot") {
    DeepMemoryState dm(3, 4);
    dm.write_mode = WriteMode::Mismatched;
    Rng rng(1);
    for (int i = 0; i < 50; ++i) record(dm, 0, basis(4, 0), rng);
    CHECK(dm.centroids[0].norm() == 0.0);
    CHECK(cosine(dm.centroids[1], basis(4, 0)) == doctest::Approx(1.0));
    CHECK(cyclic_permutation(3) == std::vector<int>{1, 2, 0});
}

TEST_CASE("recording can be switched off") {
    DeepMemoryState dm(2, 3);
    dm.record_on = false;
    Rng rng(1);
    record(dm, 0, basis(3, 0), rng);
    CHECK_FALSE(dm.initialized[0]);
}

TEST_CASE("seeding modes") {
    DeepMemoryState dm(2, 3);
    dm.centroids[0] = basis(3, 0);
    dm.centroids[1] = basis(3, 1);
    dm.initialized = {true, true};
    Rng rng(2);

    SUBCASE("continuous at p = 1 always returns the stored centroid") {
        for (int i = 0; i < 100; ++i) {
            const auto s = seed_unit(dm, 1, i, rng);
            REQUIRE(s);
            CHECK((*s - basis(3, 1)).norm() == 0.0);
        }
    }
    SUBCASE("p = 0 never seeds") {
        dm.inject_prob = 0.0;
        for (int i = 0; i < 100; ++i) CHECK_FALSE(seed_unit(dm, 0, i, rng));
    }
    SUBCASE("wrong expert uses the shifted slot") {
        dm.seed_mode = SeedMode::WrongExpert;
        CHECK((*seed_unit(dm, 0, 0, rng) - basis(3, 1)).norm() == 0.0);
    }
    SUBCASE("one-shot seeds only at its cycle") {
        dm.seed_mode = SeedMode::OneShot;
        dm.one_shot_cycle = 5;
        CHECK_FALSE(seed_unit(dm, 0, 4, rng));
        CHECK(seed_unit(dm, 0, 5, rng));
    }
    SUBCASE("noise seed ignores the stored centroid") {
        dm.seed_mode = SeedMode::NoiseSeed;
        const auto s = seed_unit(dm, 0, 0, rng);
        REQUIRE(s);
        CHECK(s->norm() == doctest::Approx(1.0));
        CHECK(std::fabs(cosine(*s, basis(3, 0))) < 0.999);
    }
    SUBCASE("uninitialised slot falls back to random rebirth") {
        dm.initialized[0] = false;
        CHECK_FALSE(seed_unit(dm, 0, 0, rng));
    }
    SUBCASE("suspension blocks seeding") {
        dm.seeding_suspended = true;
        CHECK_FALSE(seed_unit(dm, 0, 0, rng));
    }
}

TEST_CASE("seeding fraction over 1000 replacements is binomial") {
    DeepMemoryState dm(1, 4);
    dm.inject_prob = 0.5;
    dm.centroids[0] = Vec::Ones(4);
    dm.initialized[0] = true;
    Rng rng(17);
    int seeded = 0;
    for (int i = 0; i < 1000; ++i) seeded += seed_unit(dm, 0, i, rng).has_value();
    const auto [lo, hi] = testutil::binom_interval(1000, 0.5, 0.01);
    CHECK(seeded >= lo);
    CHECK(seeded <= hi);
}

TEST_CASE("anchoring at rate 0 and 1") {
    GridConfig cfg;
    Rng rng(3);
    Grid g(cfg, 2, rng);
    DeepMemoryState dm(2, cfg.dim);
    dm.centroids = {basis(cfg.dim, 0), basis(cfg.dim, 1)};
    dm.initialized = {true, true};
    dm.anchor_on = true;
    const auto before = g.units();
    dm.anchor_rate = 0.0;
    anchor(dm, g);
    for (std::size_t i = 0; i < g.size(); ++i) CHECK((g.unit(i).content - before[i].content).norm() == 0.0);
    dm.anchor_rate = 1.0;
    anchor(dm, g);
    for (std::size_t i = 0; i < g.size(); ++i)
        CHECK((g.unit(i).content - dm.centroids[g.unit(i).expert_id]).norm() == 0.0);
}

TEST_CASE("validate rejects bad settings") {
    DeepMemoryState dm(3, 4);
    dm.inject_prob = 1.5;
    CHECK_THROWS_AS(dm.validate(), ConfigError);
    dm.inject_prob = 0.5;
    dm.write_permutation = {0, 0, 1};
    CHECK_THROWS_AS(dm.validate(), ConfigError);
}

// ---- whole-simulation properties ------------------------------------------

namespace {
double run_r(SimConfig cfg, std::uint64_t seed) {
    Simulation sim(cfg, seed);
    return sim.run_plan().back().metrics.r_mean;
}
}  // namespace

TEST_CASE("recording alone does not touch the dynamics") {
    SimConfig on, off;
    on.memory.seed = false;
    off.memory.seed = false;
    off.memory.record = false;
    for (std::uint64_t s : {1, 2}) CHECK(run_r(on, s) == run_r(off, s));
}

TEST_CASE("seeding without recording is inert") {
    SimConfig seed_only, none;
    seed_only.memory.record = false;
    none.memory.record = false;
    none.memory.seed = false;
    for (std::uint64_t s : {1, 2}) CHECK(run_r(seed_only, s) == doctest::Approx(run_r(none, s)).epsilon(0.05));
}

TEST_CASE("record and seed together lift R") {
    SimConfig dm, nodm;
    nodm.memory.record = false;
    nodm.memory.seed = false;
    for (std::uint64_t s : {1, 2, 3}) CHECK(run_r(dm, s) - run_r(nodm, s) >= 0.3);
}

TEST_CASE("median R is non-decreasing in injection probability") {
    double prev = -1.0;
    for (double p : {0.0, 0.25, 0.5, 0.75, 1.0}) {
        SimConfig cfg;
        cfg.memory.inject_prob = p;
        std::vector<double> rs;
        for (std::uint64_t s : {1, 2, 3}) rs.push_back(run_r(cfg, s));
        const double m = stats::median(rs);
        CHECK(m >= prev - 0.01);
        prev = m;
    }
}

TEST_CASE("noise seeding gives no lift over no seeding") {
    SimConfig noise, nodm;
    noise.memory.seed_mode = "noise";
    nodm.memory.seed = false;
    std::vector<double> d;
    for (std::uint64_t s : {1, 2, 3}) d.push_back(run_r(noise, s) - run_r(nodm, s));
    CHECK(std::fabs(stats::median(d)) <= 0.1);
}
