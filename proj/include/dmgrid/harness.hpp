#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dmgrid/metrics.hpp"
#include "dmgrid/simulation.hpp"

namespace dmgrid {

inline constexpr const char* kArtifactVersion = "0.1.0";

enum class ModelKind { Grid, Hopfield, Esn };

struct Condition {
    std::string name;
    std::vector<std::string> overrides;  ///< dot-path assignments on top of the block base
    ModelKind model = ModelKind::Grid;
    /// Baselines only: reset probability matched to the grid's death rate (same seed,
    /// condition `turnover_source`), or no turnover.
    bool matched_turnover = false;
    std::string turnover_source;
};

/// One verdict predicate. `kind` selects the evaluator, `params` carries every threshold.
struct Check {
    std::string name;
    std::string kind;
    json params;
    bool soft = false;  ///< reported, never counted as a deviation
};

struct CheckResult {
    std::string name;
    bool passed = false;
    bool soft = false;
    std::string detail;
};

struct SweepSpec {
    std::vector<int> k_values;
    std::vector<double> p_values;
    std::vector<std::string> schedulers;
};

struct BlockSpec {
    std::string id;
    std::string purpose;
    std::vector<std::string> base_overrides;
    std::vector<Condition> conditions;
    std::vector<std::uint64_t> seeds;
    /// Condition used as the matched baseline for per-run verdicts (may be empty).
    std::string baseline_condition;
    std::vector<Check> checks;
    /// Non-empty k_values turn the block into a (K, p, scheduler) sweep.
    SweepSpec sweep;

    void validate() const;
};

struct RunRecord {
    std::string block;
    std::string condition;
    std::uint64_t seed = 0;
    std::string config_hash;
    std::vector<PhaseReport> phases;
    Verdict verdict = Verdict::NotApplicable;
    double wall_time = 0.0;  ///< seconds
    std::string version = kArtifactVersion;
    std::string error;  ///< non-empty when the run raised

    const MetricsReport& final_metrics() const;
    /// Report of the named phase ("operate", "interfere", "reconstruct") or the last one ("final").
    const MetricsReport& phase_metrics(const std::string& phase) const;
};

struct SweepRow {
    int k = 0;
    double p = 0.0;
    std::string scheduler;
    std::uint64_t seed = 0;
    double r = 0.0;
    Verdict verdict = Verdict::NotApplicable;
};

struct SweepCell {
    int k = 0;
    double p = 0.0;
    std::string scheduler;
    double median_r = 0.0;
    double baseline_r = 0.0;
    Verdict verdict = Verdict::NotApplicable;
};

struct SweepResult {
    std::vector<SweepRow> rows;
    std::vector<SweepCell> cells;
};

struct BlockResult {
    BlockSpec spec;
    std::vector<RunRecord> records;
    std::vector<CheckResult> checks;
    SweepResult sweep;
    json summary;

    bool deviations() const;
};

/// The thirteen registry ids in canonical order.
const std::vector<std::string>& block_ids();
/// Registry entry for `id` (throws ConfigError for unknown ids).
BlockSpec make_block(const std::string& id);

/// Resolves base config + block base + condition overrides into a concrete config.
SimConfig resolve_config(const json& base, const BlockSpec& spec, const Condition& cond);

/// Runs every (condition, seed) pair and evaluates the block's checks.
BlockResult run_block(const BlockSpec& spec, std::uint64_t master_seed, const json& base = json::object());

/// One verdict per (K, p, scheduler) cell; the DM-off run of the same seed is the baseline.
SweepResult sweep_envelope(const SweepSpec& sweep, const std::vector<std::uint64_t>& seeds,
                           std::uint64_t master_seed, const json& base = json::object());

/// runs.csv, summary.json, plotdata/<block>.csv, manifest.json. Throws IoError.
void emit_outputs(const std::vector<BlockResult>& results, std::uint64_t master_seed,
                  const std::string& out_dir);

/// Long table (k, p, scheduler, seed, R, verdict) and per-cell pivot.
void emit_sweep(const SweepResult& sweep, const std::string& out_dir);

json to_json(const MetricsReport& m);
json to_json(const BlockSpec& spec);
std::string format_number(double v);

}  // namespace dmgrid
