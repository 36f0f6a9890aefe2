#pragma once

#include <optional>
#include <string_view>
#include <vector>

#include "dmgrid/common.hpp"
#include "dmgrid/rng.hpp"

namespace dmgrid {

class Grid;

enum class WriteMode { Correct, Mismatched, Noise };
enum class SeedMode { Continuous, OneShot, NoiseSeed, WrongExpert, Off };

std::string_view to_string(WriteMode mode);
std::string_view to_string(SeedMode mode);
WriteMode parse_write_mode(std::string_view text);
SeedMode parse_seed_mode(std::string_view text);

/// Per-expert consolidation state: stored centroids m_k plus the switches that
/// the ablation and pathology experiments flip.
struct DeepMemoryState {
    int k = 1;
    int dim = 0;
    std::vector<Vec> centroids;
    std::vector<bool> initialized;

    double record_rate = 0.1;
    double inject_prob = 1.0;
    bool record_on = true;
    bool seed_on = true;
    bool anchor_on = false;
    double anchor_rate = 0.0001;

    WriteMode write_mode = WriteMode::Correct;
    std::vector<int> write_permutation;  ///< expert -> slot, Mismatched only
    double write_noise = 0.3;

    SeedMode seed_mode = SeedMode::Continuous;
    std::vector<int> seed_permutation;  ///< expert -> slot, WrongExpert only
    long one_shot_cycle = 0;

    /// All experts share slot 0 (the "global control": one centroid for every context).
    bool shared_slot = false;

    /// Temporarily blocks seeding without touching the configured mode.
    bool seeding_suspended = false;

    DeepMemoryState() = default;
    DeepMemoryState(int k, int dim);

    void validate() const;
    int slot_for_write(int expert) const;
    int slot_for_seed(int expert) const;
};

/// Cyclic shift e -> (e + 1) mod k.
std::vector<int> cyclic_permutation(int k);

/// EMA recording of the fired-unit mean of `expert` (after the write transform).
void record(DeepMemoryState& dm, int expert, const Vec& fired_mean, Rng& rng);

/// Content for a freshly replaced unit of `expert`, or nothing to keep the
/// random rebirth. `cycle` is the grid cycle index (for one-shot timing).
std::optional<Vec> seed_unit(const DeepMemoryState& dm, int expert, long cycle, Rng& rng);

/// Pulls every living unit toward its group's stored centroid.
void anchor(const DeepMemoryState& dm, Grid& grid);

}  // namespace dmgrid
