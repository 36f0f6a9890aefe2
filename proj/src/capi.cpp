#include "dmgrid/dmgrid.h"

#include <cstdlib>
#include <cstring>
#include <exception>
#include <string>
#include <vector>

#include "dmgrid/harness.hpp"
#include "dmgrid/simulation.hpp"

struct dmg_sim {
    dmgrid::Simulation sim;
    dmg_sim(const dmgrid::SimConfig& cfg, std::uint64_t seed) : sim(cfg, seed) {}
};

namespace {

thread_local std::string g_last_error;

dmg_status fail(dmg_status code, const std::string& msg) {
    g_last_error = msg;
    return code;
}

template <class F>
dmg_status guarded(F&& f) {
    try {
        g_last_error.clear();
        f();
        return DMG_OK;
    } catch (const dmgrid::Error& e) {
        return fail(static_cast<dmg_status>(static_cast<int>(e.code())), e.what());
    } catch (const nlohmann::json::exception& e) {
        return fail(DMG_ERR_CONFIG, std::string("json: ") + e.what());
    } catch (const std::bad_alloc&) {
        return fail(DMG_ERR_INTERNAL, "out of memory");
    } catch (const std::exception& e) {
        return fail(DMG_ERR_INTERNAL, e.what());
    } catch (...) {
        return fail(DMG_ERR_INTERNAL, "unknown exception");
    }
}

char* dup_string(const std::string& s) {
    char* out = static_cast<char*>(std::malloc(s.size() + 1));
    if (!out) throw std::bad_alloc();
    std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

dmgrid::json base_json(const char* config_json, const char* const* overrides, size_t n_overrides) {
    dmgrid::json j = dmgrid::json::object();
    if (config_json && *config_json) j = dmgrid::json::parse(config_json);
    if (!j.is_object()) throw dmgrid::ConfigError("config must be a JSON object");
    if (n_overrides > 0 && !overrides) throw dmgrid::Error(dmgrid::ErrorCode::InvalidArgument, "overrides is NULL");
    // Overrides go through the fully populated tree so dot-paths to defaulted keys resolve.
    if (n_overrides > 0) j = dmgrid::to_json(dmgrid::config_from_json(j));
    for (size_t i = 0; i < n_overrides; ++i) {
        if (!overrides[i]) throw dmgrid::Error(dmgrid::ErrorCode::InvalidArgument, "override is NULL");
        dmgrid::apply_override(j, overrides[i]);
    }
    return j;
}

dmgrid::SimConfig resolve(const char* config_json, const char* const* overrides, size_t n_overrides) {
    dmgrid::SimConfig cfg = dmgrid::config_from_json(base_json(config_json, overrides, n_overrides));
    cfg.validate();
    return cfg;
}

void fill(const dmgrid::MetricsReport& m, dmg_metrics* out) {
    if (!out) return;
    out->r_mean = m.r_mean;
    out->firing_selectivity = m.firing_selectivity;
    out->mutual_information = m.mutual_information;
    out->content_mutual_information = m.content_mutual_information;
    out->silhouette = m.silhouette;
    out->context_silhouette = m.context_silhouette;
    out->drift_estimate = m.drift_estimate;
    out->death_rate = m.death_rate;
    out->degenerate = m.degenerate ? 1 : 0;
}

void require(bool cond, const char* what) {
    if (!cond) throw dmgrid::Error(dmgrid::ErrorCode::InvalidArgument, what);
}

}  // namespace

extern "C" {

const char* dmg_version(void) { return dmgrid::kArtifactVersion; }

const char* dmg_last_error(void) { return g_last_error.c_str(); }

void dmg_free_string(char* s) { std::free(s); }

dmg_status dmg_validate_config(const char* config_json, const char* const* overrides, size_t n_overrides) {
    return guarded([&] { resolve(config_json, overrides, n_overrides); });
}

dmg_status dmg_resolve_config(const char* config_json, const char* const* overrides, size_t n_overrides,
                              char** resolved_json, char** hash) {
    return guarded([&] {
        require(resolved_json && hash, "output pointers must not be NULL");
        const auto cfg = resolve(config_json, overrides, n_overrides);
        *resolved_json = dup_string(dmgrid::to_json(cfg).dump(2));
        *hash = dup_string(dmgrid::config_hash(cfg));
    });
}

dmg_status dmg_sim_create(const char* config_json, const char* const* overrides, size_t n_overrides,
                          uint64_t seed, dmg_sim** out) {
    return guarded([&] {
        require(out != nullptr, "out must not be NULL");
        *out = nullptr;
        *out = new dmg_sim(resolve(config_json, overrides, n_overrides), seed);
    });
}

void dmg_sim_destroy(dmg_sim* sim) { delete sim; }

dmg_status dmg_sim_step(dmg_sim* sim, int context, int* n_fired) {
    return guarded([&] {
        require(sim != nullptr, "sim must not be NULL");
        require(context >= 0 && context < sim->sim.config().routing.k, "context out of range");
        const auto outcome = sim->sim.step(context);
        if (n_fired) *n_fired = static_cast<int>(outcome.fired_ids.size());
    });
}

dmg_status dmg_sim_run_phase(dmg_sim* sim, dmg_phase phase, int duration, dmg_metrics* out) {
    return guarded([&] {
        require(sim != nullptr, "sim must not be NULL");
        require(duration >= 0, "duration must be non-negative");
        dmgrid::PhaseKind kind;
        switch (phase) {
            case DMG_PHASE_WARMUP: kind = dmgrid::PhaseKind::Warmup; break;
            case DMG_PHASE_OPERATE: kind = dmgrid::PhaseKind::Operate; break;
            case DMG_PHASE_INTERFERE: kind = dmgrid::PhaseKind::Interfere; break;
            case DMG_PHASE_RECONSTRUCT: kind = dmgrid::PhaseKind::Reconstruct; break;
            default: throw dmgrid::Error(dmgrid::ErrorCode::InvalidArgument, "unknown phase");
        }
        const auto report = kind == dmgrid::PhaseKind::Interfere ? dmgrid::run_interference_phase(sim->sim, duration)
                                                                 : sim->sim.run_phase(kind, duration);
        fill(report, out);
    });
}

dmg_status dmg_sim_run_plan(dmg_sim* sim, dmg_metrics* out) {
    return guarded([&] {
        require(sim != nullptr, "sim must not be NULL");
        const auto reports = sim->sim.run_plan();
        if (!reports.empty()) fill(reports.back().metrics, out);
    });
}

int dmg_sim_unit_count(const dmg_sim* sim) { return sim ? static_cast<int>(sim->sim.grid().size()) : -1; }

int dmg_sim_dim(const dmg_sim* sim) { return sim ? sim->sim.config().grid.dim : -1; }

dmg_status dmg_sim_unit_content(const dmg_sim* sim, int unit, double* out, size_t len) {
    return guarded([&] {
        require(sim && out, "arguments must not be NULL");
        require(unit >= 0 && static_cast<std::size_t>(unit) < sim->sim.grid().size(), "unit out of range");
        const auto& c = sim->sim.grid().unit(unit).content;
        require(len >= static_cast<size_t>(c.size()), "buffer too small");
        for (Eigen::Index i = 0; i < c.size(); ++i) out[i] = c[i];
    });
}

dmg_status dmg_sim_unit_energy(const dmg_sim* sim, int unit, double* out) {
    return guarded([&] {
        require(sim && out, "arguments must not be NULL");
        require(unit >= 0 && static_cast<std::size_t>(unit) < sim->sim.grid().size(), "unit out of range");
        *out = sim->sim.grid().unit(unit).energy;
    });
}

size_t dmg_block_count(void) { return dmgrid::block_ids().size(); }

const char* dmg_block_id(size_t index) {
    const auto& ids = dmgrid::block_ids();
    return index < ids.size() ? ids[index].c_str() : nullptr;
}

dmg_status dmg_block_describe(const char* id, char** spec_json) {
    return guarded([&] {
        require(id && spec_json, "arguments must not be NULL");
        *spec_json = dup_string(dmgrid::to_json(dmgrid::make_block(id)).dump(2));
    });
}

dmg_status dmg_run_blocks(const char* const* ids, size_t n_ids, uint64_t master_seed, const uint64_t* seeds,
                          size_t n_seeds, const char* config_json, const char* const* overrides,
                          size_t n_overrides, const char* out_dir, int* deviations, char** summary_json) {
    return guarded([&] {
        require(ids && n_ids > 0, "no blocks given");
        require(out_dir != nullptr, "out_dir must not be NULL");
        require(seeds != nullptr || n_seeds == 0, "seeds is NULL");
        const auto base = base_json(config_json, overrides, n_overrides);
        std::vector<dmgrid::BlockSpec> specs;
        for (size_t i = 0; i < n_ids; ++i) {
            require(ids[i] != nullptr, "block id is NULL");
            auto spec = dmgrid::make_block(ids[i]);
            if (seeds) spec.seeds.assign(seeds, seeds + n_seeds);
            spec.validate();
            specs.push_back(std::move(spec));
        }
        std::vector<dmgrid::BlockResult> results;
        int dev = 0;
        for (const auto& spec : specs) {
            results.push_back(dmgrid::run_block(spec, master_seed, base));
            if (results.back().deviations()) dev = 1;
        }
        dmgrid::emit_outputs(results, master_seed, out_dir);
        if (deviations) *deviations = dev;
        if (summary_json) {
            dmgrid::json s = dmgrid::json::object();
            for (const auto& r : results) s[r.spec.id] = r.summary;
            *summary_json = dup_string(s.dump(2));
        }
    });
}

dmg_status dmg_sweep(const int* k_values, size_t n_k, const double* p_values, size_t n_p,
                     const char* const* schedulers, size_t n_sched, const uint64_t* seeds, size_t n_seeds,
                     uint64_t master_seed, const char* config_json, const char* const* overrides,
                     size_t n_overrides, const char* out_dir) {
    return guarded([&] {
        require(k_values && p_values && schedulers && seeds && out_dir, "arguments must not be NULL");
        dmgrid::SweepSpec sw;
        sw.k_values.assign(k_values, k_values + n_k);
        sw.p_values.assign(p_values, p_values + n_p);
        for (size_t i = 0; i < n_sched; ++i) {
            require(schedulers[i] != nullptr, "scheduler is NULL");
            sw.schedulers.emplace_back(schedulers[i]);
        }
        const std::vector<std::uint64_t> s(seeds, seeds + n_seeds);
        const auto result = dmgrid::sweep_envelope(sw, s, master_seed, base_json(config_json, overrides, n_overrides));
        dmgrid::emit_sweep(result, out_dir);
    });
}

}  // extern "C"
