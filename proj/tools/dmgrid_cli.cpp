// Command-line front end; talks to the simulator only through the C API.
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "dmgrid/dmgrid.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitDeviation = 2;

struct Common {
    std::string config_file;
    std::vector<std::string> sets;
    std::string out_dir;
    std::vector<std::uint64_t> seeds;
    std::uint64_t master_seed = 20251016;
};

std::string read_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot read config file '" + path + "'");
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

std::string default_out_dir() {
    const char* env = std::getenv("DMGRID_OUT_DIR");
    return env && *env ? env : "results";
}

std::vector<const char*> c_strings(const std::vector<std::string>& v) {
    std::vector<const char*> out;
    for (const auto& s : v) out.push_back(s.c_str());
    return out;
}

int report_error(const char* what) {
    std::fprintf(stderr, "error: %s: %s\n", what, dmg_last_error());
    return kExitError;
}

void add_config_options(CLI::App* cmd, Common& c) {
    cmd->add_option("--config", c.config_file, "JSON config file")->check(CLI::ExistingFile);
    cmd->add_option("--set", c.sets, "override, dot.path=value (repeatable)");
}

void print_checks(const nlohmann::ordered_json& summary) {
    for (const auto& [id, block] : summary.items()) {
        const bool dev = block.value("deviations", false);
        std::printf("%s: %s (%d runs, %d failed)\n", id.c_str(), dev ? "DEVIATION" : "ok",
                    block.value("runs", 0), block.value("failed_runs", 0));
        for (const auto& c : block["checks"]) {
            const bool passed = c.value("passed", false);
            const bool soft = c.value("soft", false);
            std::printf("  %-5s %s%s: %s\n", passed ? "pass" : "FAIL", soft ? "(soft) " : "",
                        c.value("name", "").c_str(), c.value("detail", "").c_str());
        }
    }
}

int cmd_run(const std::vector<std::string>& blocks_in, const Common& c) {
    std::vector<std::string> blocks;
    for (const auto& b : blocks_in) {
        if (b == "all") {
            for (size_t i = 0; i < dmg_block_count(); ++i) blocks.emplace_back(dmg_block_id(i));
        } else {
            blocks.push_back(b);
        }
    }
    const std::string config = c.config_file.empty() ? "" : read_file(c.config_file);
    const auto ids = c_strings(blocks);
    const auto sets = c_strings(c.sets);
    const std::string out = c.out_dir.empty() ? default_out_dir() : c.out_dir;
    int deviations = 0;
    char* summary = nullptr;
    const dmg_status st = dmg_run_blocks(ids.data(), ids.size(), c.master_seed, c.seeds.empty() ? nullptr : c.seeds.data(),
                                         c.seeds.size(), config.empty() ? nullptr : config.c_str(), sets.data(),
                                         sets.size(), out.c_str(), &deviations, &summary);
    if (st != DMG_OK) return report_error("run");
    print_checks(nlohmann::ordered_json::parse(summary));
    dmg_free_string(summary);
    std::printf("outputs written to %s\n", out.c_str());
    return deviations ? kExitDeviation : kExitOk;
}

int cmd_sweep(const std::vector<int>& ks, const std::vector<double>& ps, const std::vector<std::string>& scheds,
              const Common& c) {
    const std::string config = c.config_file.empty() ? "" : read_file(c.config_file);
    const auto sched_c = c_strings(scheds);
    const auto sets = c_strings(c.sets);
    std::vector<std::uint64_t> seeds = c.seeds;
    if (seeds.empty()) seeds = {0, 1, 2, 3, 4, 5};
    const std::string out = c.out_dir.empty() ? default_out_dir() : c.out_dir;
    const dmg_status st = dmg_sweep(ks.data(), ks.size(), ps.data(), ps.size(), sched_c.data(), sched_c.size(),
                                    seeds.data(), seeds.size(), c.master_seed,
                                    config.empty() ? nullptr : config.c_str(), sets.data(), sets.size(), out.c_str());
    if (st != DMG_OK) return report_error("sweep");
    std::printf("sweep written to %s/sweep.csv and %s/sweep_pivot.csv\n", out.c_str(), out.c_str());
    return kExitOk;
}

int cmd_validate(const Common& c) {
    const std::string config = c.config_file.empty() ? "" : read_file(c.config_file);
    const auto sets = c_strings(c.sets);
    char* resolved = nullptr;
    char* hash = nullptr;
    if (dmg_resolve_config(config.empty() ? nullptr : config.c_str(), sets.data(), sets.size(), &resolved, &hash) !=
        DMG_OK)
        return report_error("invalid config");
    std::printf("%s\nconfig ok, hash %s\n", resolved, hash);
    dmg_free_string(resolved);
    dmg_free_string(hash);
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"dissipative grid simulator and experiment harness"};
    app.require_subcommand(1);
    app.set_version_flag("--version", dmg_version());

    Common common;
    std::vector<std::string> blocks;
    auto* run = app.add_subcommand("run", "run registry blocks");
    run->add_option("--block,-b", blocks, "block id (repeatable, or 'all')")->required();
    run->add_option("--seeds", common.seeds, "comma-separated seeds")->delimiter(',');
    run->add_option("--out", common.out_dir, "output directory (default $DMGRID_OUT_DIR or ./results)");
    run->add_option("--master-seed", common.master_seed, "master seed");
    add_config_options(run, common);

    std::vector<int> ks{3, 5, 8};
    std::vector<double> ps{0.1, 0.25, 0.5};
    std::vector<std::string> scheds{"block", "zipf"};
    auto* sweep = app.add_subcommand("sweep", "(K, p, scheduler) envelope sweep");
    sweep->add_option("--k", ks, "expert counts")->delimiter(',');
    sweep->add_option("--p", ps, "injection probabilities")->delimiter(',');
    sweep->add_option("--sched", scheds, "schedulers")->delimiter(',');
    sweep->add_option("--seeds", common.seeds, "comma-separated seeds")->delimiter(',');
    sweep->add_option("--out", common.out_dir, "output directory");
    sweep->add_option("--master-seed", common.master_seed, "master seed");
    add_config_options(sweep, common);

    bool verbose_list = false;
    auto* list = app.add_subcommand("list", "list registry block ids");
    list->add_flag("--describe", verbose_list, "print each block definition as JSON");

    auto* validate = app.add_subcommand("validate", "validate a config file");
    add_config_options(validate, common);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitError;
    }

    try {
        if (*run) return cmd_run(blocks, common);
        if (*sweep) return cmd_sweep(ks, ps, scheds, common);
        if (*validate) return cmd_validate(common);
        if (*list) {
            for (size_t i = 0; i < dmg_block_count(); ++i) {
                const char* id = dmg_block_id(i);
                if (!verbose_list) {
                    std::printf("%s\n", id);
                    continue;
                }
                char* spec = nullptr;
                if (dmg_block_describe(id, &spec) != DMG_OK) return report_error("describe");
                std::printf("%s\n", spec);
                dmg_free_string(spec);
            }
            return kExitOk;
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitError;
    }
    return kExitError;
}
