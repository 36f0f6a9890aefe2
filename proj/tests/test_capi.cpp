#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <string>

#include "dmgrid/dmgrid.h"

namespace fs = std::filesystem;

TEST_CASE("version and registry") {
    CHECK(std::string(dmg_version()) == "0.1.0");
    CHECK(dmg_block_count() == 13);
    CHECK(std::string(dmg_block_id(0)) == "G1");
    CHECK(dmg_block_id(13) == nullptr);
    char* spec = nullptr;
    REQUIRE(dmg_block_describe("E2", &spec) == DMG_OK);
    CHECK(std::string(spec).find("dose_0") != std::string::npos);
    dmg_free_string(spec);
    CHECK(dmg_block_describe("XX", &spec) == DMG_ERR_CONFIG);
    CHECK(std::strlen(dmg_last_error()) > 0);
}

TEST_CASE("config validation maps to error codes") {
    CHECK(dmg_validate_config(nullptr, nullptr, 0) == DMG_OK);
    CHECK(dmg_validate_config("{\"grid\": {\"dim\": 8}}", nullptr, 0) == DMG_OK);
    CHECK(dmg_validate_config("{\"grid\": {\"bogus\": 1}}", nullptr, 0) == DMG_ERR_CONFIG);
    CHECK(dmg_validate_config("not json", nullptr, 0) == DMG_ERR_CONFIG);
    const char* bad[] = {"memory.inject_prob=2"};
    CHECK(dmg_validate_config(nullptr, bad, 1) == DMG_ERR_CONFIG);
    CHECK(dmg_validate_config(nullptr, nullptr, 1) == DMG_ERR_INVALID_ARGUMENT);

    const char* ok[] = {"routing.k=5"};
    char* resolved = nullptr;
    char* hash = nullptr;
    REQUIRE(dmg_resolve_config(nullptr, ok, 1, &resolved, &hash) == DMG_OK);
    CHECK(std::string(resolved).find("\"k\": 5") != std::string::npos);
    CHECK(std::strlen(hash) > 0);
    dmg_free_string(resolved);
    dmg_free_string(hash);
}

TEST_CASE("simulation handle lifecycle") {
    dmg_sim* sim = nullptr;
    REQUIRE(dmg_sim_create(nullptr, nullptr, 0, 42, &sim) == DMG_OK);
    REQUIRE(sim != nullptr);
    CHECK(dmg_sim_unit_count(sim) == 256);
    CHECK(dmg_sim_dim(sim) == 16);

    int fired = -1;
    CHECK(dmg_sim_step(sim, 0, &fired) == DMG_OK);
    CHECK(fired >= 0);
    CHECK(dmg_sim_step(sim, 7, &fired) == DMG_ERR_INVALID_ARGUMENT);

    double content[16];
    CHECK(dmg_sim_unit_content(sim, 3, content, 16) == DMG_OK);
    double n = 0.0;
    for (double v : content) n += v * v;
    CHECK(n > 0.0);
    CHECK(dmg_sim_unit_content(sim, 3, content, 4) == DMG_ERR_INVALID_ARGUMENT);
    CHECK(dmg_sim_unit_content(sim, 999, content, 16) == DMG_ERR_INVALID_ARGUMENT);
    double e = -1.0;
    CHECK(dmg_sim_unit_energy(sim, 0, &e) == DMG_OK);
    CHECK(e >= 0.0);

    dmg_metrics m{};
    CHECK(dmg_sim_run_phase(sim, DMG_PHASE_OPERATE, 600, &m) == DMG_OK);
    CHECK(m.r_mean > 0.5);
    CHECK(dmg_sim_run_phase(sim, DMG_PHASE_INTERFERE, 500, &m) == DMG_OK);
    CHECK(m.r_mean < 0.5);
    dmg_sim_destroy(sim);

    CHECK(dmg_sim_step(nullptr, 0, nullptr) == DMG_ERR_INVALID_ARGUMENT);
    CHECK(dmg_sim_unit_count(nullptr) == -1);
    dmg_sim_destroy(nullptr);
}

TEST_CASE("run plan through the C API is deterministic") {
    dmg_metrics a{}, b{};
    for (dmg_metrics* out : {&a, &b}) {
        dmg_sim* sim = nullptr;
        REQUIRE(dmg_sim_create(nullptr, nullptr, 0, 3, &sim) == DMG_OK);
        REQUIRE(dmg_sim_run_plan(sim, out) == DMG_OK);
        dmg_sim_destroy(sim);
    }
    CHECK(a.r_mean == b.r_mean);
    CHECK(a.mutual_information == b.mutual_information);
    CHECK(a.r_mean > 0.9);
}

TEST_CASE("run blocks and sweep write their outputs") {
    const fs::path out = fs::temp_directory_path() / "dmgrid_capi_test";
    fs::remove_all(out);
    const char* ids[] = {"SHAM"};
    const uint64_t seeds[] = {0, 1};
    int dev = -1;
    char* summary = nullptr;
    REQUIRE(dmg_run_blocks(ids, 1, 1, seeds, 2, nullptr, nullptr, 0, out.c_str(), &dev, &summary) == DMG_OK);
    CHECK((dev == 0 || dev == 1));
    CHECK(std::string(summary).find("\"SHAM\"") != std::string::npos);
    dmg_free_string(summary);
    CHECK(fs::exists(out / "runs.csv"));
    CHECK(fs::exists(out / "manifest.json"));

    const char* bad[] = {"NOPE"};
    CHECK(dmg_run_blocks(bad, 1, 1, seeds, 2, nullptr, nullptr, 0, out.c_str(), &dev, nullptr) == DMG_ERR_CONFIG);

    const int ks[] = {3};
    const double ps[] = {1.0};
    const char* sched[] = {"block"};
    const uint64_t one[] = {0};
    REQUIRE(dmg_sweep(ks, 1, ps, 1, sched, 1, one, 1, 1, nullptr, nullptr, 0, (out / "sw").c_str()) == DMG_OK);
    CHECK(fs::exists(out / "sw" / "sweep.csv"));
    const char* badsched[] = {"warp"};
    CHECK(dmg_sweep(ks, 1, ps, 1, badsched, 1, one, 1, 1, nullptr, nullptr, 0, (out / "sw").c_str()) ==
          DMG_ERR_CONFIG);
    fs::remove_all(out);
}
