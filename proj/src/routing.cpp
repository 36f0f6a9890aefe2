#include "dmgrid/routing.hpp"

#include <algorithm>
#include <cmath>

#include "dmgrid/grid.hpp"

namespace dmgrid {

std::string_view to_string(RoutingMode mode) {
    switch (mode) {
        case RoutingMode::Hard: return "hard";
        case RoutingMode::Disabled: return "disabled";
        case RoutingMode::BindingDisruption: return "disruption";
        case RoutingMode::Soft: return "soft";
        case RoutingMode::FixedMap: return "fixed";
    }
    return "hard";
}

RoutingMode parse_routing_mode(std::string_view text) {
    if (text == "hard") return RoutingMode::Hard;
    if (text == "disabled" || text == "none") return RoutingMode::Disabled;
    if (text == "disruption" || text == "sham") return RoutingMode::BindingDisruption;
    if (text == "soft") return RoutingMode::Soft;
    if (text == "fixed") return RoutingMode::FixedMap;
    throw ConfigError("unknown routing mode '" + std::string(text) + "'");
}

ExpertRouter::ExpertRouter(int k_, int dim_, RoutingMode mode_, double initial_threshold)
    : k(k_), dim(dim_), mode(mode_) {
    if (k < 1) throw ConfigError("router needs k >= 1");
    input_centroids.assign(k, Vec::Zero(dim));
    claimed.assign(k, false);
    group_thresholds.assign(k, initial_threshold);
}

namespace {

std::vector<double> similarities(const ExpertRouter& router, const Vec& input) {
    std::vector<double> sims(router.k);
    for (int e = 0; e < router.k; ++e) {
        sims[e] = router.claimed[e] ? cosine(input, router.input_centroids[e])
                                    : router.claim_similarity;
    }
    return sims;
}

void track_centroid(ExpertRouter& router, int expert, const Vec& input) {
    if (!router.claimed[expert]) {
        router.input_centroids[expert] = input;
        router.claimed[expert] = true;
        return;
    }
    Vec& mu = router.input_centroids[expert];
    mu = (1.0 - router.centroid_rate) * mu + router.centroid_rate * input;
}

}  // namespace

int nearest_expert(const ExpertRouter& router, const Vec& input) {
    const auto sims = similarities(router, input);
    int best = 0;
    for (int e = 1; e < router.k; ++e) {
        if (sims[e] > sims[best]) best = e;
    }
    return best;
}

std::vector<double> routing_weights(const ExpertRouter& router, const Vec& input) {
    auto sims = similarities(router, input);
    const double top = *std::max_element(sims.begin(), sims.end());
    double total = 0.0;
    for (double& s : sims) {
        s = std::exp((s - top) / router.temperature);
        total += s;
    }
    for (double& s : sims) s /= total;
    return sims;
}

Selection select_expert(ExpertRouter& router, const Vec& input, Rng& rng, int context) {
    if (input.size() != router.dim) throw ConfigError("router input dimension mismatch");
    if (input.norm() < 1e-12) throw RoutingDegenerate("all-zero input cannot be routed");

    Selection sel;
    sel.weights.assign(router.k, 0.0);
    switch (router.mode) {
        case RoutingMode::Hard:
        case RoutingMode::BindingDisruption:
            sel.expert = nearest_expert(router, input);
            sel.weights[sel.expert] = 1.0;
            break;
        case RoutingMode::FixedMap: {
            if (context < 0) throw ConfigError("fixed-map routing needs a context label");
            sel.expert = router.fixed_map.empty()
                             ? context % router.k
                             : router.fixed_map.at(static_cast<std::size_t>(context));
            sel.weights[sel.expert] = 1.0;
            break;
        }
        case RoutingMode::Soft:
            sel.weights = routing_weights(router, input);
            sel.expert = static_cast<int>(rng.categorical(sel.weights));
            break;
        case RoutingMode::Disabled:
            sel.expert = -1;
            sel.weights.assign(router.k, 1.0);
            return sel;
    }
    track_centroid(router, sel.expert, input);
    return sel;
}

std::vector<int> apply_binding_disruption(ExpertRouter& router, Grid& grid, Rng& rng) {
    (void)router;
    auto labels = grid.labels();
    if (grid.k() > 1) rng.shuffle(labels);
    grid.set_labels(labels);
    return labels;
}

std::vector<int> balanced_partition(int n, int k) {
    if (k < 1 || n < k) throw ConfigError("cannot partition " + std::to_string(n) + " units into " +
                                          std::to_string(k) + " groups");
    std::vector<int> sizes(k, n / k);
    for (int e = 0; e < n % k; ++e) ++sizes[e];
    return sizes;
}

}  // namespace dmgrid
