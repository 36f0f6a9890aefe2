#include "dmgrid/simulation.hpp"

#include <cmath>
#include <cstdio>

namespace dmgrid {

// ---------------------------------------------------------------------------
// Configuration

json to_json(const SimConfig& c) {
    json j;
    j["grid"] = {
        {"rows", c.grid.rows},
        {"cols", c.grid.cols},
        {"dim", c.grid.dim},
        {"content_rate", c.grid.content_rate},
        {"energy_income", c.grid.energy_income},
        {"leak_income", c.grid.leak_income},
        {"activation_cost", c.grid.activation_cost},
        {"activation_bias", c.grid.activation_bias},
        {"e_min", c.grid.e_min},
        {"e_init", c.grid.e_init},
        {"target_rate", c.grid.target_rate},
        {"threshold_rate", c.grid.threshold_rate},
        {"threshold_init", c.grid.threshold_init},
        {"neighborhood_radius", c.grid.neighborhood_radius},
        {"neighbor_weight", c.grid.neighbor_weight},
    };
    j["routing"] = {
        {"k", c.routing.k},
        {"mode", c.routing.mode},
        {"temperature", c.routing.temperature},
        {"centroid_rate", c.routing.centroid_rate},
        {"claim_similarity", c.routing.claim_similarity},
    };
    j["memory"] = {
        {"record", c.memory.record},
        {"seed", c.memory.seed},
        {"anchor", c.memory.anchor},
        {"record_rate", c.memory.record_rate},
        {"inject_prob", c.memory.inject_prob},
        {"anchor_rate", c.memory.anchor_rate},
        {"write_mode", c.memory.write_mode},
        {"write_noise", c.memory.write_noise},
        {"seed_mode", c.memory.seed_mode},
        {"shared_slot", c.memory.shared_slot},
    };
    j["task"] = {
        {"input_noise", c.task.input_noise},
        {"min_separation", c.task.min_separation},
        {"scheduler", c.task.scheduler},
        {"block_size", c.task.block_size},
        {"p_stay", c.task.p_stay},
        {"zipf_exponent", c.task.zipf_exponent},
        {"session_period", c.task.session_period},
        {"session_inner", c.task.session_inner},
    };
    j["phases"] = {
        {"warmup", c.phases.warmup},
        {"operate", c.phases.operate},
        {"interfere", c.phases.interfere},
        {"reconstruct", c.phases.reconstruct},
        {"eval_window", c.phases.eval_window},
        {"snapshot_every", c.phases.snapshot_every},
    };
    j["baselines"] = {
        {"hopfield_slots", c.baselines.hopfield_slots},
        {"hopfield_beta", c.baselines.hopfield_beta},
        {"hopfield_rate", c.baselines.hopfield_rate},
        {"esn_reservoir", c.baselines.esn_reservoir},
        {"esn_spectral_radius", c.baselines.esn_spectral_radius},
        {"esn_rate", c.baselines.esn_rate},
        {"esn_sparsity", c.baselines.esn_sparsity},
        {"esn_input_scale", c.baselines.esn_input_scale},
        {"turnover_prob", c.baselines.turnover_prob},
    };
    return j;
}

namespace {

template <class T>
void take(const json& section, const char* key, T& dst, const std::string& where) {
    if (!section.contains(key)) return;
    try {
        section.at(key).get_to(dst);
    } catch (const json::exception& e) {
        throw ConfigError("bad value for " + where + "." + key + ": " + e.what());
    }
}

void reject_unknown(const json& given, const json& known, const std::string& prefix) {
    if (!given.is_object()) throw ConfigError("'" + prefix + "' must be an object");
    for (auto it = given.begin(); it != given.end(); ++it) {
        const std::string path = prefix.empty() ? it.key() : prefix + "." + it.key();
        if (!known.contains(it.key())) throw ConfigError("unknown config key '" + path + "'");
        if (known.at(it.key()).is_object()) reject_unknown(it.value(), known.at(it.key()), path);
    }
}

}  // namespace

SimConfig config_from_json(const json& j) {
    SimConfig c;
    reject_unknown(j, to_json(c), "");
    if (j.contains("grid")) {
        const auto& s = j["grid"];
        take(s, "rows", c.grid.rows, "grid");
        take(s, "cols", c.grid.cols, "grid");
        take(s, "dim", c.grid.dim, "grid");
        take(s, "content_rate", c.grid.content_rate, "grid");
        take(s, "energy_income", c.grid.energy_income, "grid");
        take(s, "leak_income", c.grid.leak_income, "grid");
        take(s, "activation_cost", c.grid.activation_cost, "grid");
        take(s, "activation_bias", c.grid.activation_bias, "grid");
        take(s, "e_min", c.grid.e_min, "grid");
        take(s, "e_init", c.grid.e_init, "grid");
        take(s, "target_rate", c.grid.target_rate, "grid");
        take(s, "threshold_rate", c.grid.threshold_rate, "grid");
        take(s, "threshold_init", c.grid.threshold_init, "grid");
        take(s, "neighborhood_radius", c.grid.neighborhood_radius, "grid");
        take(s, "neighbor_weight", c.grid.neighbor_weight, "grid");
    }
    if (j.contains("routing")) {
        const auto& s = j["routing"];
        take(s, "k", c.routing.k, "routing");
        take(s, "mode", c.routing.mode, "routing");
        take(s, "temperature", c.routing.temperature, "routing");
        take(s, "centroid_rate", c.routing.centroid_rate, "routing");
        take(s, "claim_similarity", c.routing.claim_similarity, "routing");
    }
    if (j.contains("memory")) {
        const auto& s = j["memory"];
        take(s, "record", c.memory.record, "memory");
        take(s, "seed", c.memory.seed, "memory");
        take(s, "anchor", c.memory.anchor, "memory");
        take(s, "record_rate", c.memory.record_rate, "memory");
        take(s, "inject_prob", c.memory.inject_prob, "memory");
        take(s, "anchor_rate", c.memory.anchor_rate, "memory");
        take(s, "write_mode", c.memory.write_mode, "memory");
        take(s, "write_noise", c.memory.write_noise, "memory");
        take(s, "seed_mode", c.memory.seed_mode, "memory");
        take(s, "shared_slot", c.memory.shared_slot, "memory");
    }
    if (j.contains("task")) {
        const auto& s = j["task"];
        take(s, "input_noise", c.task.input_noise, "task");
        take(s, "min_separation", c.task.min_separation, "task");
        take(s, "scheduler", c.task.scheduler, "task");
        take(s, "block_size", c.task.block_size, "task");
        take(s, "p_stay", c.task.p_stay, "task");
        take(s, "zipf_exponent", c.task.zipf_exponent, "task");
        take(s, "session_period", c.task.session_period, "task");
        take(s, "session_inner", c.task.session_inner, "task");
    }
    if (j.contains("phases")) {
        const auto& s = j["phases"];
        take(s, "warmup", c.phases.warmup, "phases");
        take(s, "operate", c.phases.operate, "phases");
        take(s, "interfere", c.phases.interfere, "phases");
        take(s, "reconstruct", c.phases.reconstruct, "phases");
        take(s, "eval_window", c.phases.eval_window, "phases");
        take(s, "snapshot_every", c.phases.snapshot_every, "phases");
    }
    if (j.contains("baselines")) {
        const auto& s = j["baselines"];
        take(s, "hopfield_slots", c.baselines.hopfield_slots, "baselines");
        take(s, "hopfield_beta", c.baselines.hopfield_beta, "baselines");
        take(s, "hopfield_rate", c.baselines.hopfield_rate, "baselines");
        take(s, "esn_reservoir", c.baselines.esn_reservoir, "baselines");
        take(s, "esn_spectral_radius", c.baselines.esn_spectral_radius, "baselines");
        take(s, "esn_rate", c.baselines.esn_rate, "baselines");
        take(s, "esn_sparsity", c.baselines.esn_sparsity, "baselines");
        take(s, "esn_input_scale", c.baselines.esn_input_scale, "baselines");
        take(s, "turnover_prob", c.baselines.turnover_prob, "baselines");
    }
    return c;
}

void apply_override(json& j, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0)
        throw ConfigError("override must look like key=value, got '" + assignment + "'");
    const std::string path = assignment.substr(0, eq);
    const std::string text = assignment.substr(eq + 1);

    json value;
    try {
        value = json::parse(text);
    } catch (const json::parse_error&) {
        value = text;  // bare strings such as mode names
    }

    json* node = &j;
    std::size_t start = 0;
    for (;;) {
        const auto dot = path.find('.', start);
        const std::string key = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
        if (key.empty()) throw ConfigError("malformed override path '" + path + "'");
        if (dot == std::string::npos) {
            (*node)[key] = value;
            return;
        }
        node = &(*node)[key];
        start = dot + 1;
    }
}

std::string config_hash(const SimConfig& cfg) {
    const nlohmann::json canonical = nlohmann::json::parse(to_json(cfg).dump());
    const std::string text = canonical.dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

void SimConfig::validate() const {
    grid.validate();
    if (routing.k < 1) throw ConfigError("routing.k must be >= 1");
    if (routing.k > grid.n_units()) throw ConfigError("more experts than units");
    parse_routing_mode(routing.mode);
    if (!(routing.temperature > 0.0)) throw ConfigError("routing.temperature must be positive");
    if (!(routing.centroid_rate > 0.0 && routing.centroid_rate <= 1.0))
        throw ConfigError("routing.centroid_rate must lie in (0, 1]");
    parse_write_mode(memory.write_mode);
    parse_seed_mode(memory.seed_mode);
    make_memory(memory, routing.k, grid.dim).validate();
    if (task.input_noise < 0.0) throw ConfigError("task.input_noise must be non-negative");
    if (!(task.min_separation > -1.0 && task.min_separation < 1.0))
        throw ConfigError("task.min_separation must lie in (-1, 1)");
    const ScheduleParams sp = schedule_params(task);
    if (sp.block_size < 1 || sp.session_period < 1) throw ConfigError("scheduler periods must be positive");
    if (sp.kind == ScheduleKind::SessionRestart && sp.session_inner == ScheduleKind::SessionRestart)
        throw ConfigError("session scheduler cannot wrap itself");
    if (phases.warmup < 0 || phases.operate < 0 || phases.interfere < 0 || phases.reconstruct < 0)
        throw ConfigError("phase durations must be non-negative");
    if (phases.eval_window < 1 || phases.snapshot_every < 1)
        throw ConfigError("eval_window and snapshot_every must be positive");
    if (baselines.hopfield_slots < 1 || !(baselines.hopfield_beta > 0.0))
        throw ConfigError("hopfield needs at least one slot and positive beta");
    if (baselines.esn_reservoir < 1 || !(baselines.esn_spectral_radius > 0.0))
        throw ConfigError("esn needs a positive reservoir size and spectral radius");
    if (!(baselines.esn_sparsity > 0.0 && baselines.esn_sparsity <= 1.0))
        throw ConfigError("esn_sparsity must lie in (0, 1]");
    if (baselines.turnover_prob >= 1.0) throw ConfigError("turnover_prob must be below 1");
}

ScheduleParams schedule_params(const TaskConfig& task) {
    ScheduleParams p;
    p.kind = parse_schedule_kind(task.scheduler);
    p.block_size = task.block_size;
    p.p_stay = task.p_stay;
    p.zipf_exponent = task.zipf_exponent;
    p.session_period = task.session_period;
    p.session_inner = parse_schedule_kind(task.session_inner);
    return p;
}

DeepMemoryState make_memory(const MemoryConfig& cfg, int k, int dim) {
    DeepMemoryState dm(k, dim);
    dm.record_on = cfg.record;
    dm.seed_on = cfg.seed;
    dm.anchor_on = cfg.anchor;
    dm.record_rate = cfg.record_rate;
    dm.inject_prob = cfg.inject_prob;
    dm.anchor_rate = cfg.anchor_rate;
    dm.write_mode = parse_write_mode(cfg.write_mode);
    dm.write_noise = cfg.write_noise;
    dm.seed_mode = parse_seed_mode(cfg.seed_mode);
    dm.shared_slot = cfg.shared_slot;
    return dm;
}

ExpertRouter make_router(const RoutingConfig& cfg, int dim, double initial_threshold) {
    ExpertRouter r(cfg.k, dim, parse_routing_mode(cfg.mode), initial_threshold);
    r.temperature = cfg.temperature;
    r.centroid_rate = cfg.centroid_rate;
    r.claim_similarity = cfg.claim_similarity;
    return r;
}

// ---------------------------------------------------------------------------
// Evaluation window

MetricsWindow::MetricsWindow(int n_units, int k_experts, int k_contexts, int dim)
    : n_(n_units), k_(k_experts), kc_(k_contexts), dim_(dim) {
    fire_log_.assign(n_, std::vector<long>(kc_, 0));
    joint_.assign(kc_, std::vector<double>(k_, 0.0));
    content_joint_.assign(kc_, std::vector<double>(k_, 0.0));
}

void MetricsWindow::observe_cycle(const Simulation& sim, int context, const CycleOutcome& outcome,
                                  double displacement) {
    ++cycles_;
    replaced_ += static_cast<long>(outcome.replaced_ids.size());
    displacement_sum_ += displacement;
    const Grid& grid = sim.grid();
    const ExpertRouter& router = sim.router();
    if (outcome.fired_ids.empty()) return;

    for (std::size_t i : outcome.fired_ids) {
        ++fire_log_[i][context];
        joint_[context][grid.home_expert(i)] += 1.0;
        const Vec& z = grid.unit(i).content;
        int best = -1;
        double best_sim = -2.0;
        for (int e = 0; e < k_; ++e) {
            if (!router.claimed[e]) continue;
            const double s = cosine(z, router.input_centroids[e]);
            if (s > best_sim) {
                best_sim = s;
                best = e;
            }
        }
        if (best >= 0) content_joint_[context][best] += 1.0;
    }
    // Firing-time contents (replacement may already have overwritten some units).
    Vec rep = Vec::Zero(dim_);
    int count = 0;
    for (const auto& fm : outcome.fired_means) {
        rep += fm.count * fm.mean;
        count += fm.count;
    }
    representations_.push_back(rep / static_cast<double>(count));
    representation_labels_.push_back(context);
}

void MetricsWindow::observe_snapshot(const Simulation& sim) {
    std::vector<Vec> means(k_);
    for (int e = 0; e < k_; ++e) means[e] = sim.grid().home_group_mean(e);
    snapshots_.push_back(std::move(means));
}

MetricsReport MetricsWindow::finish(const Simulation& sim) const {
    MetricsReport r;
    const auto& centroids = sim.task().true_centroids;

    if (!snapshots_.empty() && static_cast<int>(centroids.size()) == k_) {
        std::vector<Vec> avg(k_, Vec::Zero(dim_));
        for (const auto& snap : snapshots_)
            for (int e = 0; e < k_; ++e) avg[e] += snap[e];
        r.assignment = best_assignment(avg, centroids);
        std::vector<double> per(k_, 0.0);
        for (const auto& snap : snapshots_) {
            const auto q = representation_quality(snap, centroids, r.assignment);
            r.degenerate = r.degenerate || q.degenerate;
            for (int e = 0; e < k_; ++e) per[e] += q.r_per_context[e];
        }
        // Report per context (index = context id).
        r.r_per_context.assign(k_, 0.0);
        double total = 0.0;
        for (int e = 0; e < k_; ++e) {
            const double v = per[e] / static_cast<double>(snapshots_.size());
            r.r_per_context[r.assignment[e]] = v;
            total += v;
        }
        r.r_mean = total / k_;
    }

    const auto sel = firing_selectivity(fire_log_);
    r.firing_selectivity = sel.value;
    r.selectivity_undefined = sel.undefined;

    auto total = [](const std::vector<std::vector<double>>& t) {
        double s = 0.0;
        for (const auto& row : t)
            for (double v : row) s += v;
        return s;
    };
    if (total(joint_) > 0.0) r.mutual_information = mutual_information(joint_);
    if (total(content_joint_) > 0.0) r.content_mutual_information = mutual_information(content_joint_);

    std::vector<Vec> contents;
    std::vector<int> labels;
    contents.reserve(sim.grid().size());
    for (const auto& u : sim.grid().units()) {
        contents.push_back(u.content);
        labels.push_back(u.expert_id);
    }
    const auto s = silhouette_cosine(contents, labels);
    r.silhouette = s.undefined ? 0.0 : s.value;
    const auto sc = silhouette_cosine(representations_, representation_labels_);
    r.context_silhouette = sc.undefined ? 0.0 : sc.value;

    if (cycles_ > 0) {
        r.drift_estimate = displacement_sum_ / static_cast<double>(cycles_);
        r.death_rate = static_cast<double>(replaced_) / (static_cast<double>(cycles_) * n_);
    }
    return r;
}

// ---------------------------------------------------------------------------
// Simulation

std::string_view to_string(PhaseKind kind) {
    switch (kind) {
        case PhaseKind::Warmup: return "warmup";
        case PhaseKind::Operate: return "operate";
        case PhaseKind::Interfere: return "interfere";
        case PhaseKind::Reconstruct: return "reconstruct";
    }
    return "operate";
}

Simulation::Simulation(const SimConfig& cfg, std::uint64_t seed)
    : cfg_(cfg),
      seed_(seed),
      task_rng_(derive_seed(seed, 0)),
      schedule_rng_(derive_seed(seed, 1)),
      input_rng_(derive_seed(seed, 2)),
      dyn_rng_(derive_seed(seed, 3)) {
    cfg_.validate();
    const int k = cfg_.routing.k;
    task_ = make_task(k, cfg_.grid.dim, cfg_.task.min_separation, cfg_.task.input_noise, task_rng_);
    schedule_ = std::make_unique<Schedule>(schedule_params(cfg_.task), k, schedule_rng_);
    Rng init_rng(derive_seed(seed, 4));
    grid_ = std::make_unique<Grid>(cfg_.grid, k, init_rng);
    router_ = make_router(cfg_.routing, cfg_.grid.dim, cfg_.grid.threshold_init);
    configured_mode_ = router_.mode;
    dm_ = make_memory(cfg_.memory, k, cfg_.grid.dim);
}

void Simulation::set_schedule(const ScheduleParams& params) {
    schedule_ = std::make_unique<Schedule>(params, cfg_.routing.k, schedule_rng_);
}

CycleOutcome Simulation::step(int context) {
    const Vec x = sample_input(task_, context, input_rng_);
    return step_cycle(*grid_, x, router_, dm_, dyn_rng_, context);
}

MetricsReport Simulation::run_phase(PhaseKind kind, int duration) {
    if (kind == PhaseKind::Reconstruct) dm_.one_shot_cycle = grid_->cycle();
    const int window_start = std::max(0, duration - cfg_.phases.eval_window);
    MetricsWindow window(static_cast<int>(grid_->size()), cfg_.routing.k, task_.k_contexts, cfg_.grid.dim);
    const std::size_t n = grid_->size();
    std::vector<Vec> before(n);

    for (int t = 0; t < duration; ++t) {
        const ContextStep step_info = schedule_->next(schedule_rng_);
        if (step_info.reset) reinitialize_all(*grid_, router_, dm_, dyn_rng_);
        const bool in_window = t >= window_start;
        if (in_window)
            for (std::size_t i = 0; i < n; ++i) before[i] = grid_->unit(i).content;

        const CycleOutcome outcome = step(step_info.context);

        if (in_window) {
            double disp = 0.0;
            std::size_t counted = 0;
            std::vector<char> replaced(n, 0);
            for (std::size_t i : outcome.replaced_ids) replaced[i] = 1;
            for (std::size_t i = 0; i < n; ++i) {
                if (replaced[i]) continue;
                disp += (grid_->unit(i).content - before[i]).norm();
                ++counted;
            }
            window.observe_cycle(*this, step_info.context, outcome, counted ? disp / counted : 0.0);
            if ((duration - 1 - t) % cfg_.phases.snapshot_every == 0) window.observe_snapshot(*this);
        }
    }
    if (window.cycles() == 0) return last_report_;
    last_report_ = window.finish(*this);
    return last_report_;
}

MetricsReport run_interference_phase(Simulation& sim, int duration) {
    if (duration <= 0) return sim.last_report();
    const ScheduleParams saved = sim.schedule().params();
    ScheduleParams mixing;
    mixing.kind = ScheduleKind::IIDRandom;
    sim.set_schedule(mixing);
    sim.router().mode = RoutingMode::BindingDisruption;
    sim.memory().seeding_suspended = true;

    MetricsReport report = sim.run_phase(PhaseKind::Interfere, duration);

    sim.router().mode = sim.configured_mode_;
    sim.memory().seeding_suspended = false;
    sim.grid().restore_home_partition();
    sim.set_schedule(saved);
    return report;
}

std::vector<PhaseReport> Simulation::run_plan() {
    std::vector<PhaseReport> out;
    if (cfg_.phases.warmup > 0) run_phase(PhaseKind::Warmup, cfg_.phases.warmup);
    if (cfg_.phases.operate > 0)
        out.push_back({PhaseKind::Operate, cfg_.phases.operate, run_phase(PhaseKind::Operate, cfg_.phases.operate)});
    if (cfg_.phases.interfere > 0)
        out.push_back({PhaseKind::Interfere, cfg_.phases.interfere,
                       run_interference_phase(*this, cfg_.phases.interfere)});
    if (cfg_.phases.reconstruct > 0)
        out.push_back({PhaseKind::Reconstruct, cfg_.phases.reconstruct,
                       run_phase(PhaseKind::Reconstruct, cfg_.phases.reconstruct)});
    return out;
}

}  // namespace dmgrid
