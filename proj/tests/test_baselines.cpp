#include <doctest.h>

#include <cmath>

#include "dmgrid/baselines.hpp"
#include "dmgrid/simulation.hpp"
#include "dmgrid/task.hpp"
#include "helpers.hpp"

using namespace dmgrid;
using testutil::basis;

TEST_CASE("single-slot retrieval returns the slot") {
    Rng rng(1);
    HopfieldMemory mem(1, 4, 1.0, 0.01, 0.0, rng);
    mem.slots[0] = basis(4, 2);
    CHECK((hopfield_retrieve(mem, basis(4, 2)) - basis(4, 2)).norm() < 1e-15);
    CHECK((hopfield_retrieve(mem, basis(4, 0)) - basis(4, 2)).norm() < 1e-15);
}

TEST_CASE("large beta retrieves the nearest orthogonal slot") {
    Rng rng(2);
    HopfieldMemory mem(4, 4, 50.0, 0.01, 0.0, rng);
    for (int j = 0; j < 4; ++j) mem.slots[j] = basis(4, j);
    Vec q = basis(4, 1) + 0.2 * basis(4, 3);
    CHECK((hopfield_retrieve(mem, q) - basis(4, 1)).norm() < 1e-6);
}

TEST_CASE("retrieval lies in the convex hull of the slots") {
    Rng rng(3);
    HopfieldMemory mem(8, 6, 1.0, 0.01, 0.0, rng);
    for (int t = 0; t < 20; ++t) {
        const Vec q = rng.gaussian(6);
        const auto w = hopfield_weights(mem, q);
        double s = 0.0;
        Vec mix = Vec::Zero(6);
        for (std::size_t j = 0; j < w.size(); ++j) {
            CHECK(w[j] >= 0.0);
            s += w[j];
            mix += w[j] * mem.slots[j];
        }
        CHECK(s == doctest::Approx(1.0));
        CHECK((mix - hopfield_retrieve(mem, q)).norm() < 1e-12);
    }
}

TEST_CASE("hopfield storage moves the closest slot only") {
    Rng rng(4);
    HopfieldMemory mem(2, 2, 1.0, 0.5, 0.0, rng);
    mem.slots = {basis(2, 0), basis(2, 1)};
    hopfield_step(mem, basis(2, 0) + 0.1 * basis(2, 1), rng);
    CHECK((mem.slots[1] - basis(2, 1)).norm() == 0.0);
    CHECK(mem.slots[0][1] == doctest::Approx(0.05));
}

TEST_CASE("reservoir has the requested spectral radius") {
    Rng rng(5);
    EchoStateNetwork esn(64, 4, 0.9, 0.2, 1.0, 0.01, 0.0, rng);
    CHECK(spectral_radius(esn.reservoir) == doctest::Approx(0.9).epsilon(1e-9));
    // Independent estimate from the growth rate of iterated products.
    Vec v = Vec::Ones(64);
    double log_growth = 0.0;
    for (int t = 0; t < 3000; ++t) {
        v = esn.reservoir * v;
        const double n = v.norm();
        if (t >= 1000) log_growth += std::log(n);
        v /= n;
    }
    CHECK(std::exp(log_growth / 2000.0) == doctest::Approx(0.9).epsilon(1e-3));
}

TEST_CASE("zero readout rate keeps predictions at zero") {
    Rng rng(6);
    EchoStateNetwork esn(32, 4, 0.9, 0.2, 1.0, 0.0, 0.0, rng);
    for (int t = 0; t < 100; ++t) CHECK(esn_step(esn, rng.unit_vector(4), basis(4, 0), rng).norm() == 0.0);
}

TEST_CASE("LMS readout learns a constant target") {
    Rng rng(7);
    EchoStateNetwork esn(32, 4, 0.9, 0.3, 1.0, 0.01, 0.0, rng);
    Vec target(4);
    target << 0.5, -0.5, 0.5, -0.5;
    Vec pred;
    for (int t = 0; t < 5000; ++t) pred = esn_step(esn, basis(4, 1), target, rng);
    CHECK((pred - target).norm() <= 0.05 * target.norm());
}

TEST_CASE("reservoir state forgets its initial condition") {
    Rng a(8), b(8);
    EchoStateNetwork e1(64, 4, 0.95, 0.1, 1.0, 0.0, 0.0, a);
    EchoStateNetwork e2(64, 4, 0.95, 0.1, 1.0, 0.0, 0.0, b);
    e1.state = Vec::Constant(64, 0.5);
    e2.state = Vec::Constant(64, -0.5);
    Rng in(9);
    for (int t = 0; t < 1000; ++t) {
        const Vec x = in.unit_vector(4);
        esn_step(e1, x, Vec::Zero(4), a);
        esn_step(e2, x, Vec::Zero(4), b);
    }
    CHECK((e1.state - e2.state).norm() < 1e-6);
}

TEST_CASE("turnover calibration") {
    CHECK(calibrate_turnover(0.0143) == 0.0143);
    CHECK_THROWS_AS(calibrate_turnover(0.0), CalibrationError);
    CHECK_THROWS_AS(calibrate_turnover(1.0), CalibrationError);
}

TEST_CASE("calibrated rate matches the grid's measured death rate") {
    SimConfig cfg;
    Simulation sim(cfg, 3);
    const double d = sim.run_plan().back().metrics.death_rate;
    CHECK(calibrate_turnover(d) == d);
    CHECK(d > 0.0);
}

TEST_CASE("hopfield with turnover loses its representation") {
    Rng rng(10);
    const ContextTask task = make_task(3, 16, 0.0, 0.1, rng);
    auto score = [&](double turnover) {
        Rng srng(11), irng(12), mrng(13);
        ScheduleParams p;
        Schedule sched(p, 3, srng);
        BaselineRunSpec spec;
        spec.turnover_prob = turnover;
        return run_baseline(spec, task, sched, srng, irng, mrng).r_mean;
    };
    CHECK(score(0.0) - score(0.0143) >= 0.3);
}
