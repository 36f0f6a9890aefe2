#pragma once

#include <memory>
#include <string_view>
#include <vector>

#include "dmgrid/common.hpp"
#include "dmgrid/rng.hpp"

namespace dmgrid {

/// K ground-truth context centroids and the per-cycle input noise.
struct ContextTask {
    int k_contexts = 3;
    int dim = 16;
    std::vector<Vec> true_centroids;
    double input_noise = 0.1;
    double min_separation = 0.0;
};

/// Rejection-samples k unit vectors with every pairwise cosine <= min_separation.
/// With min_separation <= 0 and k <= dim an orthonormal set is produced directly.
/// Throws InfeasibleSeparation after `max_attempts` failed draws.
std::vector<Vec> generate_centroids(int k, int dim, double min_separation, Rng& rng,
                                    int max_attempts = 10000);

ContextTask make_task(int k, int dim, double min_separation, double input_noise, Rng& rng);

/// normalize(c_context + input_noise * g), g standard normal.
Vec sample_input(const ContextTask& task, int context, Rng& rng);

enum class ScheduleKind { UniformBlock, MarkovSticky, IIDRandom, BurstyZipf, SessionRestart };

std::string_view to_string(ScheduleKind kind);
ScheduleKind parse_schedule_kind(std::string_view text);

struct ScheduleParams {
    ScheduleKind kind = ScheduleKind::UniformBlock;
    int block_size = 10;
    double p_stay = 0.9;
    double zipf_exponent = 1.0;
    int session_period = 1000;
    ScheduleKind session_inner = ScheduleKind::UniformBlock;
};

struct ContextStep {
    int context = 0;
    bool reset = false;  ///< session boundary: the grid is reinitialised before this cycle
};

/// Stateful context scheduler.
class Schedule {
public:
    Schedule(const ScheduleParams& params, int k_contexts, Rng& rng);

    ContextStep next(Rng& rng);
    const ScheduleParams& params() const { return params_; }
    /// Context order used by the Zipf variant (rank r -> context).
    const std::vector<int>& zipf_order() const { return zipf_order_; }

private:
    int draw(ScheduleKind kind, Rng& rng);

    ScheduleParams params_;
    int k_;
    long t_ = 0;
    int current_ = 0;
    std::vector<int> zipf_order_;
    std::vector<double> zipf_weights_;
};

/// Free-function form used by the harness.
inline ContextStep next_context(Schedule& schedule, Rng& rng) { return schedule.next(rng); }

}  // namespace dmgrid
