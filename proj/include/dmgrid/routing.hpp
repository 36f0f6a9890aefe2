#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "dmgrid/common.hpp"
#include "dmgrid/rng.hpp"

namespace dmgrid {

class Grid;

enum class RoutingMode {
    Hard,               ///< winner-take-all over input centroids
    Disabled,           ///< no routing: every group is eligible every cycle
    BindingDisruption,  ///< hard selection, unit->group labels re-permuted each cycle
    Soft,               ///< softmax sample; every group eligible, scaled by its weight
    FixedMap,           ///< ground-truth context label picks the expert
};

std::string_view to_string(RoutingMode mode);
RoutingMode parse_routing_mode(std::string_view text);

struct ExpertRouter {
    int k = 1;
    int dim = 0;
    RoutingMode mode = RoutingMode::Hard;
    double temperature = 0.10;
    double centroid_rate = 0.05;
    /// Similarity an unclaimed expert offers to a new input. Inputs that match no
    /// claimed centroid better than this claim the lowest-index free expert.
    double claim_similarity = 0.5;
    std::vector<Vec> input_centroids;
    std::vector<bool> claimed;
    std::vector<double> group_thresholds;
    std::vector<int> fixed_map;  ///< context -> expert, FixedMap mode only

    ExpertRouter() = default;
    ExpertRouter(int k, int dim, RoutingMode mode, double initial_threshold = 0.0);

    bool selects_single_group() const {
        return mode == RoutingMode::Hard || mode == RoutingMode::BindingDisruption ||
               mode == RoutingMode::FixedMap;
    }
};

struct Selection {
    int expert = 0;
    /// Per-group eligibility weight this cycle (1 for the selected group in the
    /// single-group modes, softmax weights in Soft mode, all ones when Disabled).
    std::vector<double> weights;
};

/// Argmax of cosine similarity over claimed centroids, ties to the lowest index.
/// Unclaimed experts participate with `claim_similarity`. Pure; no update.
int nearest_expert(const ExpertRouter& router, const Vec& input);

/// Softmax over similarities at the router temperature.
std::vector<double> routing_weights(const ExpertRouter& router, const Vec& input);

/// Discrete expert selection. Hard/Disruption: argmax; Soft: softmax sample;
/// FixedMap: `context`; Disabled: expert 0 with every group eligible.
/// The winning centroid moves toward the input by `centroid_rate`.
/// Throws RoutingDegenerate on an all-zero input.
Selection select_expert(ExpertRouter& router, const Vec& input, Rng& rng, int context = -1);

/// Replaces the unit->group assignment by a uniform random permutation of the
/// current labels (group sizes are preserved). Returns the new label vector.
std::vector<int> apply_binding_disruption(ExpertRouter& router, Grid& grid, Rng& rng);

/// Group sizes for a balanced positional partition of n units into k groups.
std::vector<int> balanced_partition(int n, int k);

}  // namespace dmgrid
