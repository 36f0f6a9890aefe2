// Acceptance run: one PASS/FAIL line per criterion. Exit code is 0 unless
// --strict is given (then 3 on any failed criterion) or something throws (1).
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dmgrid/baselines.hpp"
#include "dmgrid/deep_memory.hpp"
#include "dmgrid/grid.hpp"
#include "dmgrid/harness.hpp"
#include "dmgrid/metrics.hpp"
#include "dmgrid/stats.hpp"

using namespace dmgrid;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool passed = false;
    std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// Hard checks of a block, optionally restricted to a name subset. Soft checks are listed, never counted.
Outcome block_outcome(const BlockResult& br, const std::set<std::string>& only = {}) {
    Outcome o{true, ""};
    int failed_runs = 0;
    for (const auto& r : br.records)
        if (!r.error.empty()) ++failed_runs;
    if (failed_runs) {
        o.passed = false;
        o.detail += br.spec.id + ": " + std::to_string(failed_runs) + " runs raised; ";
    }
    for (const auto& c : br.checks) {
        if (!only.empty() && !only.count(c.name)) continue;
        if (c.soft) {
            o.detail += "[soft " + std::string(c.passed ? "ok" : "miss") + "] " + c.name + " (" + c.detail + "); ";
            continue;
        }
        if (!c.passed) {
            o.passed = false;
            o.detail += "[FAIL] " + c.name + " (" + c.detail + "); ";
        }
    }
    if (o.passed && o.detail.empty()) o.detail = br.spec.id + " checks hold";
    return o;
}

Outcome with_budget(Outcome o, double elapsed, double budget) {
    char buf[96];
    std::snprintf(buf, sizeof buf, " t=%.1fs/%.0fs", elapsed, budget);
    if (elapsed > budget) {
        o.passed = false;
        o.detail += " over runtime budget;";
    }
    o.detail += buf;
    return o;
}

// ---- criterion 1 -----------------------------------------------------------

Outcome criterion_collapse() {
    Outcome o{true, ""};
    const double lambda = 0.1;
    const int dim = 16;

    // Deterministic sub-case: identical input to every unit, every unit updated.
    {
        Rng rng(101);
        std::vector<UnitState> units(32);
        for (auto& u : units) u.content = rng.unit_vector(dim);
        std::vector<Vec> d0;
        for (std::size_t i = 1; i < units.size(); ++i) d0.push_back(units[i].content - units[0].content);
        double worst = 0.0;
        for (int t = 1; t <= 50; ++t) {
            const Vec x = rng.unit_vector(dim);
            for (auto& u : units) update_content(u, x, lambda);
            const double factor = std::pow(1.0 - lambda, t);
            for (std::size_t i = 1; i < units.size(); ++i) {
                const Vec d = units[i].content - units[0].content;
                worst = std::max(worst, (d - factor * d0[i - 1]).norm() / (factor * d0[i - 1].norm()));
            }
        }
        if (worst > 1e-9) o.passed = false;
        char buf[96];
        std::snprintf(buf, sizeof buf, "contraction rel err %.2e; ", worst);
        o.detail += buf;
    }

    // Stochastic UA: equal mixing, every unit updated, unbiased per-unit inputs.
    {
        Rng rng(202);
        const ContextTask task = make_task(3, dim, 0.0, 0.1, rng);
        std::vector<UnitState> units(256);
        for (auto& u : units) u.content = rng.unit_vector(dim);
        auto variance = [&]() {
            Vec mean = Vec::Zero(dim);
            for (const auto& u : units) mean += u.content;
            mean /= static_cast<double>(units.size());
            double v = 0.0;
            for (const auto& u : units) v += (u.content - mean).squaredNorm();
            return v / static_cast<double>(units.size());
        };
        const double v0 = variance();
        for (int t = 0; t < 200; ++t) {
            const int ctx = static_cast<int>(rng.index(3));
            for (auto& u : units) update_content(u, sample_input(task, ctx, rng), lambda);
        }
        const double ratio = variance() / v0;
        if (!(ratio < 0.05)) o.passed = false;
        char buf[96];
        std::snprintf(buf, sizeof buf, "normalized variance at t=200: %.4f (< 0.05)", ratio);
        o.detail += buf;
    }
    return o;
}

// ---- criterion 10 ----------------------------------------------------------

Outcome criterion_determinism(std::uint64_t master_seed) {
    Outcome o{true, ""};
    const fs::path tmp = fs::temp_directory_path() / ("dmgrid_acceptance_" + std::to_string(master_seed));
    auto produce = [&](const std::string& sub) {
        auto spec = make_block("G1");
        spec.seeds = {0, 1, 2};
        std::vector<BlockResult> res;
        res.push_back(run_block(spec, master_seed));
        emit_outputs(res, master_seed, (tmp / sub).string());
        std::ifstream f(tmp / sub / "runs.csv", std::ios::binary);
        std::ostringstream ss;
        ss << f.rdbuf();
        return ss.str();
    };
    const std::string a = produce("a"), b = produce("b");
    fs::remove_all(tmp);
    if (a.empty() || a != b) {
        o.passed = false;
        o.detail += "runs.csv differs between invocations; ";
    } else {
        o.detail += "runs.csv byte-identical (" + std::to_string(a.size()) + " bytes); ";
    }

    auto expect = [&](bool cond, const std::string& name) {
        if (!cond) {
            o.passed = false;
            o.detail += "[FAIL] " + name + "; ";
        }
    };
    // MI of a perfect 3x3 diagonal table is ln 3.
    expect(std::fabs(mutual_information({{10, 0, 0}, {0, 10, 0}, {0, 0, 10}}) - std::log(3.0)) < 1e-12, "MI = ln 3");
    // Six positive signs out of six: one-sided p = 1/64.
    expect(std::fabs(stats::sign_test({1, 1, 1, 1, 1, 1}).p_one_sided - 1.0 / 64.0) < 1e-12, "sign-test p = 1/64");
    // Recording EMA from a zero slot: m_n = v (1 - (1 - a)^n).
    {
        DeepMemoryState dm(1, 4);
        dm.record_rate = 0.1;
        Rng rng(7);
        Vec v(4);
        v << 1.0, -2.0, 0.5, 3.0;
        for (int n = 0; n < 25; ++n) record(dm, 0, v, rng);
        expect((dm.centroids[0] - v * (1.0 - std::pow(0.9, 25))).norm() < 1e-12, "record EMA closed form");
        UnitState u;
        u.content = Vec::Zero(4);
        for (int n = 0; n < 25; ++n) update_content(u, v, 0.1);
        expect((u.content - v * (1.0 - std::pow(0.9, 25))).norm() < 1e-12, "content EMA closed form");
    }
    // ESN reservoir is rescaled to the requested spectral radius.
    {
        Rng rng(11);
        EchoStateNetwork esn(64, 4, 0.9, 0.2, 1.0, 0.01, 0.0, rng);
        expect(std::fabs(spectral_radius(esn.reservoir) - 0.9) < 1e-9, "spectral radius 0.9");
    }
    // Seeding fires with probability p: fraction within 4 sigma of p.
    {
        DeepMemoryState dm(1, 4);
        dm.inject_prob = 0.3;
        dm.centroids[0] = Vec::Ones(4);
        dm.initialized[0] = true;
        Rng rng(13);
        const int n = 20000;
        int seeded = 0;
        for (int i = 0; i < n; ++i)
            if (seed_unit(dm, 0, i, rng)) ++seeded;
        const double frac = static_cast<double>(seeded) / n;
        expect(std::fabs(frac - 0.3) < 4.0 * std::sqrt(0.3 * 0.7 / n), "binomial seeding fraction");
    }
    if (o.passed) o.detail += "unit examples hold";
    return o;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"acceptance criteria"};
    bool strict = false;
    std::uint64_t master_seed = 20251016;
    std::string out_dir;
    app.add_flag("--strict", strict, "non-zero exit when a criterion fails");
    app.add_option("--master-seed", master_seed, "master seed");
    app.add_option("--out", out_dir, "also write the registry outputs here");
    CLI11_PARSE(app, argc, argv);

    std::vector<BlockResult> results;
    auto run = [&](const std::string& id) -> const BlockResult& {
        results.push_back(run_block(make_block(id), master_seed));
        return results.back();
    };

    int failures = 0;
    auto line = [&](int n, const char* name, const Outcome& o) {
        std::printf("criterion %2d %-4s %s: %s\n", n, o.passed ? "PASS" : "FAIL", name, o.detail.c_str());
        std::fflush(stdout);
        if (!o.passed) ++failures;
    };

    try {
        auto t0 = std::chrono::steady_clock::now();
        Outcome o = criterion_collapse();
        line(1, "grand-centroid collapse", with_budget(o, seconds_since(t0), 1.0));

        t0 = std::chrono::steady_clock::now();
        {
            const BlockResult& g1 = run(std::string("G1"));
            o = block_outcome(g1, {"full_mi_ge", "disrupted_mi_le", "full_fsel_ge", "disrupted_fsel_le",
                                   "sham_silhouette_equivalent"});
        }
        line(2, "G1 routing causality", with_budget(o, seconds_since(t0), 30.0));

        t0 = std::chrono::steady_clock::now();
        o = block_outcome(run("DM1"));
        line(3, "DM1 persistence ordering", with_budget(o, seconds_since(t0), 30.0));

        t0 = std::chrono::steady_clock::now();
        o = block_outcome(run("DM2"));
        line(4, "DM2 reconstruction", with_budget(o, seconds_since(t0), 60.0));

        t0 = std::chrono::steady_clock::now();
        {
            Outcome a = block_outcome(run("DM3"));
            Outcome b = block_outcome(run("G2B"));
            o = {a.passed && b.passed, a.detail + " | " + b.detail};
        }
        line(5, "DM3/G2B envelope", with_budget(o, seconds_since(t0), 240.0));

        t0 = std::chrono::steady_clock::now();
        o = block_outcome(run("DMF"));
        line(6, "DM-F factorial", with_budget(o, seconds_since(t0), 60.0));

        t0 = std::chrono::steady_clock::now();
        o = block_outcome(run("E1"));
        line(7, "E1 single-factor ablation", with_budget(o, seconds_since(t0), 60.0));

        t0 = std::chrono::steady_clock::now();
        o = block_outcome(run("E2"));
        line(8, "E2 mediation", with_budget(o, seconds_since(t0), 60.0));

        t0 = std::chrono::steady_clock::now();
        o = block_outcome(run("E6"));
        line(9, "E6 baselines", with_budget(o, seconds_since(t0), 60.0));

        t0 = std::chrono::steady_clock::now();
        o = criterion_determinism(master_seed);
        line(10, "determinism and stats", with_budget(o, seconds_since(t0), 10.0));

        if (!out_dir.empty()) emit_outputs(results, master_seed, out_dir);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "acceptance aborted: %s\n", e.what());
        return 1;
    }
    std::printf("%d/10 criteria pass\n", 10 - failures);
    return strict && failures ? 3 : 0;
}
