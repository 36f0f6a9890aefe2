#include "dmgrid/task.hpp"

#include <cmath>
#include <numeric>
#include <string>

namespace dmgrid {

std::vector<Vec> generate_centroids(int k, int dim, double min_separation, Rng& rng,
                                    int max_attempts) {
    if (k < 1 || dim < 1) throw ConfigError("centroid generation needs k >= 1 and dim >= 1");
    if (!(min_separation > -1.0 && min_separation < 1.0))
        throw ConfigError("min_separation must lie in (-1, 1)");

    if (min_separation <= 0.0 && k <= dim) {
        // Gram-Schmidt on random draws; exact pairwise cosine 0.
        std::vector<Vec> basis;
        while (static_cast<int>(basis.size()) < k) {
            Vec v = rng.gaussian(dim);
            for (const Vec& b : basis) v -= v.dot(b) * b;
            const double n = v.norm();
            if (n > 1e-8) basis.push_back(v / n);
        }
        return basis;
    }
    if (min_separation <= 0.0) throw InfeasibleSeparation("orthogonal centroids need k <= dim");

    std::vector<Vec> out;
    out.reserve(k);
    int attempts = 0;
    while (static_cast<int>(out.size()) < k) {
        if (++attempts > max_attempts)
            throw InfeasibleSeparation("could not place " + std::to_string(k) +
                                       " centroids with pairwise cosine <= " +
                                       std::to_string(min_separation));
        Vec v = rng.unit_vector(dim);
        bool ok = true;
        for (const Vec& c : out) {
            if (v.dot(c) > min_separation) {
                ok = false;
                break;
            }
        }
        if (ok) out.push_back(std::move(v));
    }
    return out;
}

ContextTask make_task(int k, int dim, double min_separation, double input_noise, Rng& rng) {
    ContextTask task;
    task.k_contexts = k;
    task.dim = dim;
    task.min_separation = min_separation;
    task.input_noise = input_noise;
    task.true_centroids = generate_centroids(k, dim, min_separation, rng);
    return task;
}

Vec sample_input(const ContextTask& task, int context, Rng& rng) {
    const Vec& c = task.true_centroids.at(static_cast<std::size_t>(context));
    if (task.input_noise <= 0.0) return c;
    Vec x = c + task.input_noise * rng.gaussian(task.dim);
    const double n = x.norm();
    return n > 1e-12 ? Vec(x / n) : c;
}

std::string_view to_string(ScheduleKind kind) {
    switch (kind) {
        case ScheduleKind::UniformBlock: return "block";
        case ScheduleKind::MarkovSticky: return "sticky";
        case ScheduleKind::IIDRandom: return "iid";
        case ScheduleKind::BurstyZipf: return "zipf";
        case ScheduleKind::SessionRestart: return "session";
    }
    return "block";
}

ScheduleKind parse_schedule_kind(std::string_view text) {
    if (text == "block") return ScheduleKind::UniformBlock;
    if (text == "sticky" || text == "markov") return ScheduleKind::MarkovSticky;
    if (text == "iid" || text == "random") return ScheduleKind::IIDRandom;
    if (text == "zipf") return ScheduleKind::BurstyZipf;
    if (text == "session") return ScheduleKind::SessionRestart;
    throw ConfigError("unknown scheduler '" + std::string(text) + "'");
}

Schedule::Schedule(const ScheduleParams& params, int k_contexts, Rng& rng)
    : params_(params), k_(k_contexts) {
    if (k_ < 1) throw ConfigError("scheduler needs at least one context");
    if (params_.block_size < 1) throw ConfigError("block_size must be positive");
    if (!(params_.p_stay >= 0.0 && params_.p_stay <= 1.0)) throw ConfigError("p_stay must lie in [0, 1]");
    if (params_.session_period < 1) throw ConfigError("session period must be positive");
    if (params_.kind == ScheduleKind::SessionRestart &&
        params_.session_inner == ScheduleKind::SessionRestart)
        throw ConfigError("session scheduler cannot wrap itself");

    zipf_order_.resize(k_);
    std::iota(zipf_order_.begin(), zipf_order_.end(), 0);
    const bool uses_zipf = params_.kind == ScheduleKind::BurstyZipf ||
                           (params_.kind == ScheduleKind::SessionRestart &&
                            params_.session_inner == ScheduleKind::BurstyZipf);
    if (uses_zipf) rng.shuffle(zipf_order_);
    zipf_weights_.resize(k_);
    for (int r = 0; r < k_; ++r) zipf_weights_[r] = 1.0 / std::pow(r + 1.0, params_.zipf_exponent);
}

int Schedule::draw(ScheduleKind kind, Rng& rng) {
    switch (kind) {
        case ScheduleKind::UniformBlock:
            return static_cast<int>((t_ / params_.block_size) % k_);
        case ScheduleKind::MarkovSticky: {
            if (t_ == 0) return static_cast<int>(rng.index(k_));
            if (k_ == 1 || rng.bernoulli(params_.p_stay)) return current_;
            const int jump = static_cast<int>(rng.index(k_ - 1));
            return jump >= current_ ? jump + 1 : jump;
        }
        case ScheduleKind::IIDRandom:
            return static_cast<int>(rng.index(k_));
        case ScheduleKind::BurstyZipf:
            return zipf_order_[rng.categorical(zipf_weights_)];
        case ScheduleKind::SessionRestart:
            break;
    }
    throw ConfigError("invalid scheduler variant");
}

ContextStep Schedule::next(Rng& rng) {
    ContextStep step;
    if (params_.kind == ScheduleKind::SessionRestart) {
        step.reset = t_ > 0 && t_ % params_.session_period == 0;
        step.context = draw(params_.session_inner, rng);
    } else {
        step.context = draw(params_.kind, rng);
    }
    current_ = step.context;
    ++t_;
    return step;
}

}  // namespace dmgrid
