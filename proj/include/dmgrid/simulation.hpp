#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "dmgrid/deep_memory.hpp"
#include "dmgrid/grid.hpp"
#include "dmgrid/metrics.hpp"
#include "dmgrid/routing.hpp"
#include "dmgrid/task.hpp"

namespace dmgrid {

using json = nlohmann::ordered_json;

struct RoutingConfig {
    int k = 3;
    std::string mode = "hard";
    double temperature = 0.10;
    double centroid_rate = 0.05;
    double claim_similarity = 0.5;
};

struct MemoryConfig {
    bool record = true;
    bool seed = true;
    bool anchor = false;
    double record_rate = 0.1;
    double inject_prob = 1.0;
    double anchor_rate = 0.0001;
    std::string write_mode = "correct";
    double write_noise = 0.3;
    std::string seed_mode = "continuous";
    bool shared_slot = false;
};

struct TaskConfig {
    double input_noise = 0.1;
    double min_separation = 0.0;
    std::string scheduler = "block";
    int block_size = 10;
    double p_stay = 0.9;
    double zipf_exponent = 1.0;
    int session_period = 1000;
    std::string session_inner = "block";
};

struct PhaseConfig {
    int warmup = 500;
    int operate = 2000;
    int interfere = 0;
    int reconstruct = 0;
    int eval_window = 500;
    int snapshot_every = 10;
};

struct BaselineConfig {
    int hopfield_slots = 32;
    double hopfield_beta = 1.0;
    double hopfield_rate = 0.01;
    int esn_reservoir = 128;
    double esn_spectral_radius = 0.95;
    double esn_rate = 0.01;
    double esn_sparsity = 0.1;
    double esn_input_scale = 1.0;
    /// Reset probability per slot / neuron; negative means "calibrate from the grid".
    double turnover_prob = -1.0;
};

/// Fully resolved configuration of one run. Every default lives here.
struct SimConfig {
    GridConfig grid;
    RoutingConfig routing;
    MemoryConfig memory;
    TaskConfig task;
    PhaseConfig phases;
    BaselineConfig baselines;

    void validate() const;
};

json to_json(const SimConfig& cfg);
/// Strict: unknown keys raise ConfigError. Missing keys keep their defaults.
SimConfig config_from_json(const json& j);
/// Applies `key=value` with a dotted path (e.g. "memory.inject_prob=0.5").
void apply_override(json& j, const std::string& assignment);
/// FNV-1a over the canonical (sorted-key) serialization, hex encoded.
std::string config_hash(const SimConfig& cfg);

/// Accumulates the evaluation-window observables for one phase.
class MetricsWindow {
public:
    MetricsWindow(int n_units, int k_experts, int k_contexts, int dim);

    void observe_cycle(const class Simulation& sim, int context, const CycleOutcome& outcome,
                       double displacement);
    void observe_snapshot(const class Simulation& sim);
    MetricsReport finish(const class Simulation& sim) const;
    long cycles() const { return cycles_; }

private:
    int n_, k_, kc_, dim_;
    long cycles_ = 0;
    long replaced_ = 0;
    double displacement_sum_ = 0.0;
    std::vector<std::vector<long>> fire_log_;
    std::vector<std::vector<double>> joint_;
    std::vector<std::vector<double>> content_joint_;
    std::vector<Vec> representations_;
    std::vector<int> representation_labels_;
    std::vector<std::vector<Vec>> snapshots_;
};

enum class PhaseKind { Warmup, Operate, Interfere, Reconstruct };
std::string_view to_string(PhaseKind kind);

struct PhaseReport {
    PhaseKind kind = PhaseKind::Operate;
    int cycles = 0;
    MetricsReport metrics;
};

/// One (config, seed) simulation: grid, router, memory, task and scheduler
/// with private random streams derived from the seed.
class Simulation {
public:
    Simulation(const SimConfig& cfg, std::uint64_t seed);

    /// Runs `duration` cycles; metrics cover the final eval_window cycles.
    MetricsReport run_phase(PhaseKind kind, int duration);
    /// Runs the configured phase plan, returning one report per non-warmup phase.
    std::vector<PhaseReport> run_plan();

    /// Single cycle with an explicit context; returns the outcome.
    CycleOutcome step(int context);

    const SimConfig& config() const { return cfg_; }
    const Grid& grid() const { return *grid_; }
    Grid& grid() { return *grid_; }
    const ExpertRouter& router() const { return router_; }
    ExpertRouter& router() { return router_; }
    const DeepMemoryState& memory() const { return dm_; }
    DeepMemoryState& memory() { return dm_; }
    const ContextTask& task() const { return task_; }
    Schedule& schedule() { return *schedule_; }
    const MetricsReport& last_report() const { return last_report_; }

    /// Swap the scheduler (used by the interference phase).
    void set_schedule(const ScheduleParams& params);

private:
    friend MetricsReport run_interference_phase(Simulation& sim, int duration);

    SimConfig cfg_;
    std::uint64_t seed_;
    Rng task_rng_;
    Rng schedule_rng_;
    Rng input_rng_;
    Rng dyn_rng_;
    ContextTask task_;
    std::unique_ptr<Schedule> schedule_;
    std::unique_ptr<Grid> grid_;
    ExpertRouter router_;
    DeepMemoryState dm_;
    RoutingMode configured_mode_ = RoutingMode::Hard;
    MetricsReport last_report_;
};

/// Degrades representations for `duration` cycles: uniform random contexts,
/// per-cycle binding disruption, seeding suspended. Normal operation resumes
/// afterwards. Returns the post-interference report (the previous report when duration == 0).
MetricsReport run_interference_phase(Simulation& sim, int duration);

ScheduleParams schedule_params(const TaskConfig& task);
DeepMemoryState make_memory(const MemoryConfig& cfg, int k, int dim);
ExpertRouter make_router(const RoutingConfig& cfg, int dim, double initial_threshold);

}  // namespace dmgrid
