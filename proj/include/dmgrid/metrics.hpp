#pragma once

#include <optional>
#include <string_view>
#include <vector>

#include "dmgrid/common.hpp"

namespace dmgrid {

struct MetricsReport {
    std::vector<double> r_per_context;
    double r_mean = 0.0;
    double firing_selectivity = 0.0;
    double mutual_information = 0.0;          ///< context vs. home expert of firing units (nats)
    double content_mutual_information = 0.0;  ///< context vs. content-nearest expert of firing units
    double silhouette = 0.0;                  ///< unit contents labelled by expert
    double context_silhouette = 0.0;          ///< per-cycle representations labelled by context
    std::optional<double> delta_r_vs_baseline;
    double drift_estimate = 0.0;
    double death_rate = 0.0;
    std::vector<int> assignment;  ///< expert -> context used for R
    bool degenerate = false;      ///< some group mean had zero norm
    bool selectivity_undefined = false;
};

struct QualityResult {
    std::vector<double> r_per_context;  ///< indexed by expert
    double r_mean = 0.0;
    bool degenerate = false;
};

/// r_k = cos(group_mean_k, c_assignment[k]); r_mean = average over experts.
QualityResult representation_quality(const std::vector<Vec>& group_means,
                                     const std::vector<Vec>& true_centroids,
                                     const std::vector<int>& assignment);

/// Expert -> context bijection maximising total cosine (exhaustive for K <= 8,
/// greedy refinement beyond). Requires equal counts.
std::vector<int> best_assignment(const std::vector<Vec>& group_means,
                                 const std::vector<Vec>& true_centroids);

struct SelectivityResult {
    double value = 0.0;
    bool undefined = false;
};

/// fire_log[unit][context] = firing count. Fraction of firing units that fired in exactly one context.
SelectivityResult firing_selectivity(const std::vector<std::vector<long>>& fire_log);

/// Plug-in MI (nats) of a contexts x experts count table.
double mutual_information(const std::vector<std::vector<double>>& joint_counts);

struct SilhouetteResult {
    double value = 0.0;
    bool undefined = false;
};

/// Mean silhouette with cosine distance 1 - cos(u, v); singleton clusters score 0.
SilhouetteResult silhouette_cosine(const std::vector<Vec>& points, const std::vector<int>& labels);

enum class Verdict { Pass, Degraded, Fail, NotApplicable };
std::string_view to_string(Verdict v);

struct ClassifierThresholds {
    double pass_r = 0.70;
    double pass_delta = 0.15;
    double pass_mi_fraction = 0.5;
    double pass_selectivity = 0.5;
    double fail_delta = 0.10;
};

/// Pass: R > 0.70, dR >= 0.15, MI >= 0.5 ln K, f_sel >= 0.5. Fail: dR < 0.10. Otherwise Degraded.
Verdict classify_operating_point(const MetricsReport& report, const MetricsReport& baseline, int k,
                                 const ClassifierThresholds& t = {});

}  // namespace dmgrid
