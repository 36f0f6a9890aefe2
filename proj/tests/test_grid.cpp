#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "dmgrid/deep_memory.hpp"
#include "dmgrid/grid.hpp"
#include "dmgrid/simulation.hpp"
#include "dmgrid/task.hpp"
#include "helpers.hpp"

using namespace dmgrid;
using testutil::basis;

TEST_CASE("content update examples") {
    UnitState u;
    u.content = Vec::Zero(2);
    update_content(u, basis(2, 0), 0.1);
    CHECK((u.content - 0.1 * basis(2, 0)).norm() < 1e-15);
    u.content = basis(2, 1);
    update_content(u, basis(2, 1), 0.3);
    CHECK((u.content - basis(2, 1)).norm() < 1e-15);
    update_content(u, basis(2, 0), 1.0);
    CHECK((u.content - basis(2, 0)).norm() < 1e-15);
}

TEST_CASE("threshold adaptation steps") {
    GridConfig cfg;
    cfg.threshold_rate = 0.01;
    UnitState u;
    u.threshold = 0.5;
    adapt_threshold(u, true, cfg);
    CHECK(u.threshold == doctest::Approx(0.508));
    adapt_threshold(u, false, cfg);
    CHECK(u.threshold == doctest::Approx(0.506));
}

TEST_CASE("threshold adaptation drives the firing rate to target") {
    GridConfig cfg;
    cfg.threshold_rate = 0.01;
    UnitState u;
    u.content = basis(4, 0);
    const double a = activation(u.content, basis(4, 0), cfg.activation_bias);
    int fired = 0;
    const int cycles = 10000;
    for (int t = 0; t < cycles; ++t) {
        const bool f = a > u.threshold;
        fired += f;
        adapt_threshold(u, f, cfg);
    }
    CHECK(std::fabs(static_cast<double>(fired) / cycles - cfg.target_rate) <= 0.05);
}

TEST_CASE("activation") {
    CHECK(activation(basis(3, 0), basis(3, 0)) == doctest::Approx(1.0));
    CHECK(activation(2.0 * basis(3, 0), -basis(3, 0)) == 0.0);
    CHECK(activation(basis(3, 0), -basis(3, 0), 2.0) == doctest::Approx(1.0));
    CHECK(activation(Vec::Zero(3), 0.5 * basis(3, 1), 0.1) == doctest::Approx(0.6));
}

TEST_CASE("torus neighbourhood has eight distinct neighbours") {
    GridConfig cfg;
    Rng rng(1);
    Grid g(cfg, 3, rng);
    for (std::size_t i = 0; i < g.size(); ++i) CHECK(g.neighbors(i).size() == 8);
    // Corner wraps to the opposite edges.
    const auto& n0 = g.neighbors(0);
    CHECK(std::find(n0.begin(), n0.end(), 255) != n0.end());
    CHECK(std::find(n0.begin(), n0.end(), 15) != n0.end());
}

TEST_CASE("replacement") {
    GridConfig cfg;
    Rng rng(2);
    Grid g(cfg, 3, rng);
    ExpertRouter router(3, cfg.dim, RoutingMode::Hard);
    DeepMemoryState dm(3, cfg.dim);
    dm.seed_on = false;

    CHECK(replace_depleted(g, router, dm, rng).empty());

    const Vec old = g.unit(7).content;
    g.unit(7).energy = 0.0;
    g.unit(7).age = 42;
    const auto r = replace_depleted(g, router, dm, rng);
    REQUIRE(r.size() == 1);
    CHECK(r[0] == 7);
    CHECK((g.unit(7).content - old).norm() > 1e-6);
    CHECK(g.unit(7).energy == cfg.e_init);
    CHECK(g.unit(7).age == 0);
}

TEST_CASE("a fully depleted grid is replaced in one cycle") {
    GridConfig cfg;
    Rng rng(3);
    Grid g(cfg, 3, rng);
    ExpertRouter router(3, cfg.dim, RoutingMode::Hard);
    DeepMemoryState dm(3, cfg.dim);
    for (std::size_t i = 0; i < g.size(); ++i) g.unit(i).energy = 0.0;
    const auto out = step_cycle(g, basis(cfg.dim, 0), router, dm, rng);
    CHECK(out.replaced_ids.size() == g.size());
    CHECK(out.fired_ids.empty());
}

TEST_CASE("no activation cost means no turnover") {
    SimConfig cfg;
    cfg.grid.activation_cost = 0.0;
    Simulation sim(cfg, 4);
    std::size_t replaced = 0;
    for (int t = 0; t < 500; ++t) replaced += sim.step(t / 10 % 3).replaced_ids.size();
    CHECK(replaced == 0);
}

TEST_CASE("default turnover sits at the calibrated rate") {
    SimConfig cfg;
    cfg.memory.record = false;
    cfg.memory.seed = false;
    for (std::uint64_t s : {0, 1, 2}) {
        Simulation sim(cfg, s);
        const double d = sim.run_plan().back().metrics.death_rate;
        CHECK(d > 0.008);
        CHECK(d < 0.025);
    }
}

TEST_CASE("energy stays within [0, e_init]") {
    SimConfig cfg;
    Simulation sim(cfg, 5);
    for (int t = 0; t < 1500; ++t) {
        sim.step(t / 10 % 3);
        for (const auto& u : sim.grid().units()) {
            REQUIRE(u.energy >= 0.0);
            REQUIRE(u.energy <= cfg.grid.e_init);
        }
    }
}

TEST_CASE("same seed, same trajectory") {
    SimConfig cfg;
    Simulation a(cfg, 6), b(cfg, 6);
    for (int t = 0; t < 400; ++t) {
        const auto oa = a.step(t / 10 % 3);
        const auto ob = b.step(t / 10 % 3);
        REQUIRE(oa.fired_ids == ob.fired_ids);
        REQUIRE(oa.replaced_ids == ob.replaced_ids);
    }
    for (std::size_t i = 0; i < a.grid().size(); ++i)
        CHECK((a.grid().unit(i).content - b.grid().unit(i).content).norm() == 0.0);
}

TEST_CASE("input of the wrong dimension is rejected") {
    GridConfig cfg;
    Rng rng(7);
    Grid g(cfg, 2, rng);
    ExpertRouter router(2, cfg.dim, RoutingMode::Hard);
    DeepMemoryState dm(2, cfg.dim);
    CHECK_THROWS_AS(step_cycle(g, Vec::Ones(3), router, dm, rng), ConfigError);
}

TEST_CASE("uniform updates contract differences by (1 - lambda)^t") {
    Rng rng(8);
    std::vector<UnitState> units(16);
    for (auto& u : units) u.content = rng.unit_vector(8);
    const Vec d0 = units[3].content - units[9].content;
    for (int t = 1; t <= 40; ++t) {
        const Vec x = rng.unit_vector(8);
        for (auto& u : units) update_content(u, x, 0.1);
        const Vec d = units[3].content - units[9].content;
        CHECK((d - std::pow(0.9, t) * d0).norm() <= 1e-12);
    }
}

TEST_CASE("shared noisy inputs collapse contents toward the grand centroid") {
    const double lambda = 0.1;
    Rng rng(9);
    const ContextTask task = make_task(3, 16, 0.0, 0.1, rng);
    std::vector<UnitState> units(256);
    for (auto& u : units) u.content = rng.unit_vector(16);
    auto variance = [&] {
        Vec m = Vec::Zero(16);
        for (const auto& u : units) m += u.content;
        m /= 256.0;
        double v = 0.0;
        for (const auto& u : units) v += (u.content - m).squaredNorm();
        return v / 256.0;
    };
    const Vec grand = (task.true_centroids[0] + task.true_centroids[1] + task.true_centroids[2]) / 3.0;
    const double v0 = variance();
    // Per-unit noise leaves a floor; the allowance covers it over the first 30 steps.
    const double eps_noise = 0.5;
    Vec stationary = Vec::Zero(16);
    for (int t = 1; t <= 200; ++t) {
        const int ctx = static_cast<int>(rng.index(3));
        for (auto& u : units) update_content(u, sample_input(task, ctx, rng), lambda);
        if (t <= 30) CHECK(variance() / v0 <= std::pow(1.0 - lambda, t) * (1.0 + eps_noise));
        if (t >= 100) {
            for (const auto& u : units) stationary += u.content;
        }
    }
    // The instantaneous mean tracks recent contexts; its time average settles on the grand centroid.
    CHECK(cosine(stationary, grand) >= 0.95);
}

TEST_CASE("stable binding without turnover converges to the context centroids") {
    SimConfig cfg;
    cfg.grid.activation_cost = 0.0;
    cfg.memory.record = false;
    cfg.memory.seed = false;
    Simulation sim(cfg, 10);
    const auto m = sim.run_plan().back().metrics;
    CHECK(m.r_mean >= 0.9);
    // Pairwise separation of group means keeps at least half of the true separation.
    const auto& c = sim.task().true_centroids;
    for (int a = 0; a < 3; ++a)
        for (int b = a + 1; b < 3; ++b) {
            const Vec ga = sim.grid().home_group_mean(a).normalized();
            const Vec gb = sim.grid().home_group_mean(b).normalized();
            CHECK((ga - gb).norm() >= 0.5 * (c[a] - c[b]).norm());
        }
}
