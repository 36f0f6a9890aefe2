#pragma once

#include <vector>

#include "dmgrid/common.hpp"
#include "dmgrid/rng.hpp"
#include "dmgrid/task.hpp"

namespace dmgrid {

/// Modern Hopfield memory: softmax retrieval over M slots, EMA storage on the
/// closest slot, per-slot random reset.
struct HopfieldMemory {
    std::vector<Vec> slots;
    double beta = 1.0;
    double store_rate = 0.01;
    double turnover_prob = 0.0;
    /// Queries and slots are compared at this norm (sqrt(D) by default) so that
    /// beta = 1 acts on unit-variance components.
    double similarity_scale = 1.0;

    HopfieldMemory(int m, int dim, double beta, double store_rate, double turnover_prob, Rng& rng);
};

/// Softmax weights over slots for a query.
std::vector<double> hopfield_weights(const HopfieldMemory& mem, const Vec& query);
Vec hopfield_retrieve(const HopfieldMemory& mem, const Vec& query);
/// Retrieve, then store into the closest slot, then apply slot turnover.
Vec hopfield_step(HopfieldMemory& mem, const Vec& query, Rng& rng);

struct EchoStateNetwork {
    Eigen::MatrixXd reservoir;  ///< N_res x N_res, scaled to the target spectral radius
    Eigen::MatrixXd input_weights;  ///< N_res x D
    Eigen::MatrixXd readout;        ///< D x N_res
    Vec state;
    double readout_rate = 0.01;
    double turnover_prob = 0.0;

    EchoStateNetwork(int reservoir_size, int dim, double spectral_radius, double sparsity,
                     double input_scale, double readout_rate, double turnover_prob, Rng& rng);
};

/// Largest eigenvalue magnitude (dense eigen-decomposition).
double spectral_radius(const Eigen::MatrixXd& m);

/// state <- tanh(W state + W_in input); prediction = readout state; LMS readout
/// update toward target; then per-neuron reset (state entry and readout column).
Vec esn_step(EchoStateNetwork& esn, const Vec& input, const Vec& target, Rng& rng);

/// Identity mapping from the grid's measured death rate; rejects rates outside (0, 1).
double calibrate_turnover(double grid_death_rate);

struct BaselineScore {
    double r_mean = 0.0;
    std::vector<double> r_per_context;
    double context_silhouette = 0.0;
};

enum class BaselineKind { Hopfield, Esn };

struct BaselineRunSpec {
    BaselineKind kind = BaselineKind::Hopfield;
    int hopfield_slots = 32;
    double hopfield_beta = 1.0;
    double hopfield_rate = 0.01;
    int esn_reservoir = 128;
    double esn_spectral_radius = 0.95;
    double esn_rate = 0.01;
    double esn_sparsity = 0.1;
    double esn_input_scale = 1.0;
    double turnover_prob = 0.0;
    int train_cycles = 2500;
    int eval_window = 500;
};

/// Drives a baseline with the same context stream the grid would see and scores the
/// retrieved / predicted vectors: R = per-context mean cosine to the true centroid,
/// S_ctx = silhouette of those vectors labelled by context, both over the final window.
BaselineScore run_baseline(const BaselineRunSpec& spec, const ContextTask& task, Schedule& schedule,
                           Rng& schedule_rng, Rng& input_rng, Rng& model_rng);

}  // namespace dmgrid
