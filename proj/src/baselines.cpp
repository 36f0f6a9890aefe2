#include "dmgrid/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Eigenvalues>

#include "dmgrid/metrics.hpp"

namespace dmgrid {

HopfieldMemory::HopfieldMemory(int m, int dim, double beta_, double store_rate_, double turnover_prob_,
                               Rng& rng)
    : beta(beta_), store_rate(store_rate_), turnover_prob(turnover_prob_) {
    if (m < 1 || dim < 1) throw ConfigError("hopfield memory needs at least one slot and dimension");
    if (!(beta > 0.0)) throw ConfigError("hopfield beta must be positive");
    if (turnover_prob < 0.0 || turnover_prob >= 1.0) throw ConfigError("turnover_prob must lie in [0, 1)");
    slots.reserve(m);
    for (int j = 0; j < m; ++j) slots.push_back(rng.unit_vector(dim));
    similarity_scale = std::sqrt(static_cast<double>(dim));
}

std::vector<double> hopfield_weights(const HopfieldMemory& mem, const Vec& query) {
    const double qn = query.norm();
    const Vec q = qn > 1e-12 ? Vec(query * (mem.similarity_scale / qn)) : query;
    std::vector<double> logits(mem.slots.size());
    for (std::size_t j = 0; j < mem.slots.size(); ++j) {
        const double sn = mem.slots[j].norm();
        const double s = sn > 1e-12 ? mem.slots[j].dot(q) * (mem.similarity_scale / sn) : 0.0;
        logits[j] = mem.beta * s;
    }
    const double mx = *std::max_element(logits.begin(), logits.end());
    double total = 0.0;
    for (double& l : logits) {
        l = std::exp(l - mx);
        total += l;
    }
    for (double& l : logits) l /= total;
    return logits;
}

Vec hopfield_retrieve(const HopfieldMemory& mem, const Vec& query) {
    const auto w = hopfield_weights(mem, query);
    Vec out = Vec::Zero(query.size());
    for (std::size_t j = 0; j < mem.slots.size(); ++j) out += w[j] * mem.slots[j];
    return out;
}

Vec hopfield_step(HopfieldMemory& mem, const Vec& query, Rng& rng) {
    const Vec retrieved = hopfield_retrieve(mem, query);
    std::size_t best = 0;
    double best_sim = -2.0;
    for (std::size_t j = 0; j < mem.slots.size(); ++j) {
        const double s = cosine(mem.slots[j], query);
        if (s > best_sim) {
            best_sim = s;
            best = j;
        }
    }
    mem.slots[best] = (1.0 - mem.store_rate) * mem.slots[best] + mem.store_rate * query;
    for (auto& slot : mem.slots)
        if (rng.bernoulli(mem.turnover_prob)) slot = rng.unit_vector(static_cast<int>(slot.size()));
    return retrieved;
}

double spectral_radius(const Eigen::MatrixXd& m) {
    if (m.rows() == 0) return 0.0;
    Eigen::EigenSolver<Eigen::MatrixXd> solver(m, false);
    return solver.eigenvalues().cwiseAbs().maxCoeff();
}

EchoStateNetwork::EchoStateNetwork(int reservoir_size, int dim, double rho, double sparsity,
                                   double input_scale, double readout_rate_, double turnover_prob_,
                                   Rng& rng)
    : readout_rate(readout_rate_), turnover_prob(turnover_prob_) {
    if (reservoir_size < 1 || dim < 1) throw ConfigError("reservoir and input sizes must be positive");
    if (!(rho > 0.0)) throw ConfigError("spectral radius must be positive");
    if (!(sparsity > 0.0 && sparsity <= 1.0)) throw ConfigError("sparsity must lie in (0, 1]");
    if (turnover_prob < 0.0 || turnover_prob >= 1.0) throw ConfigError("turnover_prob must lie in [0, 1)");

    reservoir = Eigen::MatrixXd::Zero(reservoir_size, reservoir_size);
    for (int i = 0; i < reservoir_size; ++i)
        for (int j = 0; j < reservoir_size; ++j)
            if (rng.uniform() < sparsity) reservoir(i, j) = rng.normal();
    double current = spectral_radius(reservoir);
    if (current < 1e-12) {
        // Degenerate draw (possible for tiny reservoirs): fall back to a scaled cycle.
        for (int i = 0; i < reservoir_size; ++i) reservoir((i + 1) % reservoir_size, i) = 1.0;
        current = spectral_radius(reservoir);
    }
    reservoir *= rho / current;

    input_weights.resize(reservoir_size, dim);
    for (int i = 0; i < reservoir_size; ++i)
        for (int j = 0; j < dim; ++j) input_weights(i, j) = input_scale * (2.0 * rng.uniform() - 1.0);
    readout = Eigen::MatrixXd::Zero(dim, reservoir_size);
    state = Vec::Zero(reservoir_size);
}

Vec esn_step(EchoStateNetwork& esn, const Vec& input, const Vec& target, Rng& rng) {
    esn.state = (esn.reservoir * esn.state + esn.input_weights * input).array().tanh().matrix();
    const Vec prediction = esn.readout * esn.state;
    esn.readout += esn.readout_rate * (target - prediction) * esn.state.transpose();
    for (Eigen::Index i = 0; i < esn.state.size(); ++i) {
        if (rng.bernoulli(esn.turnover_prob)) {
            esn.state[i] = 0.0;
            esn.readout.col(i).setZero();
        }
    }
    return prediction;
}

double calibrate_turnover(double grid_death_rate) {
    if (!(grid_death_rate > 0.0 && grid_death_rate < 1.0))
        throw CalibrationError("grid death rate " + std::to_string(grid_death_rate) +
                               " is outside (0, 1); nothing to match");
    return grid_death_rate;
}

BaselineScore run_baseline(const BaselineRunSpec& spec, const ContextTask& task, Schedule& schedule,
                           Rng& schedule_rng, Rng& input_rng, Rng& model_rng) {
    const int k = task.k_contexts;
    std::vector<Vec> outputs;
    std::vector<int> labels;
    std::vector<double> r_sum(k, 0.0);
    std::vector<int> r_count(k, 0);
    const int window_start = std::max(0, spec.train_cycles - spec.eval_window);

    auto observe = [&](int t, int ctx, const Vec& out) {
        if (t < window_start) return;
        r_sum[ctx] += cosine(out, task.true_centroids[ctx]);
        ++r_count[ctx];
        outputs.push_back(out);
        labels.push_back(ctx);
    };

    if (spec.kind == BaselineKind::Hopfield) {
        HopfieldMemory mem(spec.hopfield_slots, task.dim, spec.hopfield_beta, spec.hopfield_rate,
                           spec.turnover_prob, model_rng);
        for (int t = 0; t < spec.train_cycles; ++t) {
            const int ctx = schedule.next(schedule_rng).context;
            const Vec x = sample_input(task, ctx, input_rng);
            observe(t, ctx, hopfield_step(mem, x, model_rng));
        }
    } else {
        EchoStateNetwork esn(spec.esn_reservoir, task.dim, spec.esn_spectral_radius, spec.esn_sparsity,
                             spec.esn_input_scale, spec.esn_rate, spec.turnover_prob, model_rng);
        for (int t = 0; t < spec.train_cycles; ++t) {
            const int ctx = schedule.next(schedule_rng).context;
            const Vec x = sample_input(task, ctx, input_rng);
            observe(t, ctx, esn_step(esn, x, task.true_centroids[ctx], model_rng));
        }
    }

    BaselineScore score;
    score.r_per_context.assign(k, 0.0);
    double total = 0.0;
    int present = 0;
    for (int c = 0; c < k; ++c) {
        if (r_count[c] == 0) continue;
        score.r_per_context[c] = r_sum[c] / r_count[c];
        total += score.r_per_context[c];
        ++present;
    }
    score.r_mean = present ? total / present : 0.0;
    const auto sil = silhouette_cosine(outputs, labels);
    score.context_silhouette = sil.undefined ? 0.0 : sil.value;
    return score;
}

}  // namespace dmgrid
