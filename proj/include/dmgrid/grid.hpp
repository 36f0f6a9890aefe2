#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "dmgrid/common.hpp"
#include "dmgrid/deep_memory.hpp"
#include "dmgrid/rng.hpp"
#include "dmgrid/routing.hpp"

namespace dmgrid {

struct UnitState {
    Vec content;
    double energy = 0.0;
    double threshold = 0.0;
    int expert_id = 0;
    long age = 0;
    bool fired = false;
};

struct GridConfig {
    int rows = 16;
    int cols = 16;
    int dim = 16;
    double content_rate = 0.12;
    double energy_income = 0.0;
    double leak_income = 0.0;
    double activation_cost = 0.1;
    double activation_bias = 2.0;
    double e_min = 0.1;
    double e_init = 1.0;
    double target_rate = 0.2;
    double threshold_rate = 0.2;
    double threshold_init = 0.0;
    int neighborhood_radius = 1;
    double neighbor_weight = 0.2;

    int n_units() const { return rows * cols; }
    /// Throws ConfigError on any violated bound.
    void validate() const;
};

struct CycleOutcome {
    struct ExpertMean {
        int expert = 0;
        Vec mean;
        int count = 0;
    };
    std::vector<std::size_t> fired_ids;
    std::vector<std::size_t> replaced_ids;
    std::vector<ExpertMean> fired_means;  ///< one per group that had firing units
    int selected_expert = 0;
    double death_rate_estimate = 0.0;
};

/// N units on a rows x cols torus, partitioned positionally into K groups.
class Grid {
public:
    Grid(const GridConfig& cfg, int k, Rng& rng);

    const GridConfig& config() const { return cfg_; }
    int k() const { return k_; }
    std::size_t size() const { return units_.size(); }

    UnitState& unit(std::size_t i) { return units_[i]; }
    const UnitState& unit(std::size_t i) const { return units_[i]; }
    const std::vector<UnitState>& units() const { return units_; }

    /// Positional group of unit i (contiguous balanced blocks).
    int home_expert(std::size_t i) const { return home_[i]; }
    const std::vector<int>& neighbors(std::size_t i) const { return neighbors_[i]; }

    /// Reassigns unit -> group labels; `labels` must be a permutation of the current multiset.
    void set_labels(const std::vector<int>& labels);
    void restore_home_partition();
    std::vector<int> labels() const;
    std::vector<int> group_sizes() const;

    /// Mean content of units currently labelled `expert`.
    Vec group_mean(int expert) const;
    Vec home_group_mean(int expert) const;

    /// Fresh random content (unit norm), full energy, reset age and threshold.
    void rebirth(std::size_t i, Rng& rng, double threshold);

    long cycle() const { return cycle_; }
    void advance_cycle() { ++cycle_; }
    void count_replacements(std::size_t n) { replaced_total_ += n; }
    /// Cumulative fraction of units replaced per cycle since construction.
    double death_rate_estimate() const;
    void reset_turnover_counter();

private:
    GridConfig cfg_;
    int k_;
    std::vector<UnitState> units_;
    std::vector<int> home_;
    std::vector<std::vector<int>> neighbors_;
    long cycle_ = 0;
    long counted_cycles_start_ = 0;
    std::uint64_t replaced_total_ = 0;
};

/// EMA of content toward the local input: content <- (1 - rate) content + rate local.
void update_content(UnitState& unit, const Vec& local_input, double rate);

/// threshold <- threshold + threshold_rate * (fired - target_rate).
void adapt_threshold(UnitState& unit, bool fired, const GridConfig& cfg);

/// Activation of a unit for a given local input: max(0, <x, z/|z|> + bias);
/// a unit with (near) zero content responds with |x| + bias instead.
double activation(const Vec& content, const Vec& local_input, double bias = 0.0);

/// Replaces every unit with energy below e_min (random rebirth, then the
/// memory seeding hook). Returns the replaced indices.
std::vector<std::size_t> replace_depleted(Grid& grid, const ExpertRouter& router,
                                          const DeepMemoryState& dm, Rng& rng);

/// Rebirths every unit regardless of energy (session restart), seeding hook included.
std::vector<std::size_t> reinitialize_all(Grid& grid, const ExpertRouter& router,
                                          const DeepMemoryState& dm, Rng& rng);

/// One computation cycle. `context` is only consulted by FixedMap routing.
/// Throws ConfigError on a dimension mismatch and NumericFault on non-finite content.
CycleOutcome step_cycle(Grid& grid, const Vec& input, ExpertRouter& router, DeepMemoryState& dm,
                        Rng& rng, int context = -1);

}  // namespace dmgrid
