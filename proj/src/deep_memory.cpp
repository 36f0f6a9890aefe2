#include "dmgrid/deep_memory.hpp"

#include <cmath>
#include <numeric>

#include "dmgrid/grid.hpp"

namespace dmgrid {

std::string_view to_string(WriteMode mode) {
    switch (mode) {
        case WriteMode::Correct: return "correct";
        case WriteMode::Mismatched: return "mismatched";
        case WriteMode::Noise: return "noise";
    }
    return "correct";
}

std::string_view to_string(SeedMode mode) {
    switch (mode) {
        case SeedMode::Continuous: return "continuous";
        case SeedMode::OneShot: return "one_shot";
        case SeedMode::NoiseSeed: return "noise";
        case SeedMode::WrongExpert: return "wrong_expert";
        case SeedMode::Off: return "off";
    }
    return "off";
}

WriteMode parse_write_mode(std::string_view text) {
    if (text == "correct") return WriteMode::Correct;
    if (text == "mismatched") return WriteMode::Mismatched;
    if (text == "noise") return WriteMode::Noise;
    throw ConfigError("unknown write mode '" + std::string(text) + "'");
}

SeedMode parse_seed_mode(std::string_view text) {
    if (text == "continuous") return SeedMode::Continuous;
    if (text == "one_shot") return SeedMode::OneShot;
    if (text == "noise") return SeedMode::NoiseSeed;
    if (text == "wrong_expert") return SeedMode::WrongExpert;
    if (text == "off") return SeedMode::Off;
    throw ConfigError("unknown seed mode '" + std::string(text) + "'");
}

std::vector<int> cyclic_permutation(int k) {
    std::vector<int> perm(k);
    for (int e = 0; e < k; ++e) perm[e] = (e + 1) % k;
    return perm;
}

DeepMemoryState::DeepMemoryState(int k_, int dim_) : k(k_), dim(dim_) {
    centroids.assign(k, Vec::Zero(dim));
    initialized.assign(k, false);
    write_permutation = cyclic_permutation(k);
    seed_permutation = cyclic_permutation(k);
}

void DeepMemoryState::validate() const {
    if (!(inject_prob >= 0.0 && inject_prob <= 1.0))
        throw ConfigError("inject_prob must lie in [0, 1]");
    if (!(record_rate > 0.0 && record_rate <= 1.0))
        throw ConfigError("record_rate must lie in (0, 1]");
    if (!(anchor_rate >= 0.0 && anchor_rate <= 1.0))
        throw ConfigError("anchor_rate must lie in [0, 1]");
    if (write_noise < 0.0) throw ConfigError("write noise must be non-negative");
    auto is_perm = [this](const std::vector<int>& p) {
        if (static_cast<int>(p.size()) != k) return false;
        std::vector<bool> seen(k, false);
        for (int v : p) {
            if (v < 0 || v >= k || seen[v]) return false;
            seen[v] = true;
        }
        return true;
    };
    if (!is_perm(write_permutation)) throw ConfigError("write permutation is not a permutation of experts");
    if (!is_perm(seed_permutation)) throw ConfigError("seed permutation is not a permutation of experts");
}

int DeepMemoryState::slot_for_write(int expert) const {
    if (shared_slot) return 0;
    if (write_mode == WriteMode::Mismatched) return write_permutation[expert];
    return expert;
}

int DeepMemoryState::slot_for_seed(int expert) const {
    if (shared_slot) return 0;
    if (seed_mode == SeedMode::WrongExpert) return seed_permutation[expert];
    return expert;
}

void record(DeepMemoryState& dm, int expert, const Vec& fired_mean, Rng& rng) {
    if (!dm.record_on) return;
    const int slot = dm.slot_for_write(expert);
    Vec written = fired_mean;
    if (dm.write_mode == WriteMode::Noise && dm.write_noise > 0.0)
        written += dm.write_noise * rng.gaussian(dm.dim) / std::sqrt(static_cast<double>(dm.dim));
    Vec& m = dm.centroids[slot];
    m = (1.0 - dm.record_rate) * m + dm.record_rate * written;
    dm.initialized[slot] = true;
}

std::optional<Vec> seed_unit(const DeepMemoryState& dm, int expert, long cycle, Rng& rng) {
    if (!dm.seed_on || dm.seeding_suspended) return std::nullopt;
    switch (dm.seed_mode) {
        case SeedMode::Off: return std::nullopt;
        case SeedMode::OneShot:
            if (cycle != dm.one_shot_cycle) return std::nullopt;
            break;
        default: break;
    }
    if (!rng.bernoulli(dm.inject_prob)) return std::nullopt;
    if (dm.seed_mode == SeedMode::NoiseSeed) return rng.unit_vector(dm.dim);
    const int slot = dm.slot_for_seed(expert);
    if (!dm.initialized[slot]) return std::nullopt;
    return dm.centroids[slot];
}

void anchor(const DeepMemoryState& dm, Grid& grid) {
    if (!dm.anchor_on || dm.anchor_rate <= 0.0) return;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        UnitState& u = grid.unit(i);
        const int slot = dm.shared_slot ? 0 : u.expert_id;
        if (!dm.initialized[slot]) continue;
        u.content = (1.0 - dm.anchor_rate) * u.content + dm.anchor_rate * dm.centroids[slot];
    }
}

}  // namespace dmgrid
