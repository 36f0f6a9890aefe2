#include "dmgrid/grid.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace dmgrid {

void GridConfig::validate() const {
    if (rows < 1 || cols < 1) throw ConfigError("lattice shape must be positive");
    if (dim < 1) throw ConfigError("content dimension must be positive");
    if (!(content_rate > 0.0 && content_rate <= 1.0))
        throw ConfigError("content_rate must lie in (0, 1]");
    if (!(target_rate > 0.0 && target_rate < 1.0))
        throw ConfigError("target_rate must lie in (0, 1)");
    if (!(e_min >= 0.0)) throw ConfigError("e_min must be non-negative");
    if (!(e_init > e_min)) throw ConfigError("e_init must exceed e_min");
    if (activation_cost < 0.0 || energy_income < 0.0 || leak_income < 0.0)
        throw ConfigError("energy rates must be non-negative");
    if (threshold_rate < 0.0) throw ConfigError("threshold_rate must be non-negative");
    if (neighborhood_radius < 0) throw ConfigError("neighborhood_radius must be non-negative");
    if (!(neighbor_weight >= 0.0 && neighbor_weight <= 1.0))
        throw ConfigError("neighbor_weight must lie in [0, 1]");
}

Grid::Grid(const GridConfig& cfg, int k, Rng& rng) : cfg_(cfg), k_(k) {
    cfg_.validate();
    const int n = cfg_.n_units();
    const auto sizes = balanced_partition(n, k);
    home_.reserve(n);
    for (int e = 0; e < k; ++e) home_.insert(home_.end(), sizes[e], e);

    units_.resize(n);
    for (int i = 0; i < n; ++i) {
        UnitState& u = units_[i];
        u.content = rng.unit_vector(cfg_.dim);
        u.energy = cfg_.e_init;
        u.threshold = cfg_.threshold_init;
        u.expert_id = home_[i];
    }

    // Moore neighbourhood on a torus, excluding the unit itself.
    const int r = cfg_.neighborhood_radius;
    neighbors_.resize(n);
    for (int row = 0; row < cfg_.rows; ++row) {
        for (int col = 0; col < cfg_.cols; ++col) {
            auto& list = neighbors_[row * cfg_.cols + col];
            for (int dr = -r; dr <= r; ++dr) {
                for (int dc = -r; dc <= r; ++dc) {
                    if (dr == 0 && dc == 0) continue;
                    const int nr = ((row + dr) % cfg_.rows + cfg_.rows) % cfg_.rows;
                    const int nc = ((col + dc) % cfg_.cols + cfg_.cols) % cfg_.cols;
                    const int j = nr * cfg_.cols + nc;
                    if (j != row * cfg_.cols + col &&
                        std::find(list.begin(), list.end(), j) == list.end())
                        list.push_back(j);
                }
            }
        }
    }
}

void Grid::set_labels(const std::vector<int>& labels) {
    if (labels.size() != units_.size()) throw ConfigError("label vector size mismatch");
    for (std::size_t i = 0; i < units_.size(); ++i) units_[i].expert_id = labels[i];
}

void Grid::restore_home_partition() {
    for (std::size_t i = 0; i < units_.size(); ++i) units_[i].expert_id = home_[i];
}

std::vector<int> Grid::labels() const {
    std::vector<int> out(units_.size());
    for (std::size_t i = 0; i < units_.size(); ++i) out[i] = units_[i].expert_id;
    return out;
}

std::vector<int> Grid::group_sizes() const {
    std::vector<int> sizes(k_, 0);
    for (const auto& u : units_) ++sizes[u.expert_id];
    return sizes;
}

Vec Grid::group_mean(int expert) const {
    Vec sum = Vec::Zero(cfg_.dim);
    int count = 0;
    for (const auto& u : units_) {
        if (u.expert_id != expert) continue;
        sum += u.content;
        ++count;
    }
    return count > 0 ? Vec(sum / count) : sum;
}

Vec Grid::home_group_mean(int expert) const {
    Vec sum = Vec::Zero(cfg_.dim);
    int count = 0;
    for (std::size_t i = 0; i < units_.size(); ++i) {
        if (home_[i] != expert) continue;
        sum += units_[i].content;
        ++count;
    }
    return count > 0 ? Vec(sum / count) : sum;
}

void Grid::rebirth(std::size_t i, Rng& rng, double threshold) {
    UnitState& u = units_[i];
    u.content = rng.unit_vector(cfg_.dim);
    u.energy = cfg_.e_init;
    u.age = 0;
    u.threshold = threshold;
}

double Grid::death_rate_estimate() const {
    const long cycles = cycle_ - counted_cycles_start_;
    if (cycles <= 0) return 0.0;
    return static_cast<double>(replaced_total_) /
           (static_cast<double>(cycles) * static_cast<double>(units_.size()));
}

void Grid::reset_turnover_counter() {
    counted_cycles_start_ = cycle_;
    replaced_total_ = 0;
}

void update_content(UnitState& unit, const Vec& local_input, double rate) {
    unit.content = (1.0 - rate) * unit.content + rate * local_input;
}

void adapt_threshold(UnitState& unit, bool fired, const GridConfig& cfg) {
    unit.threshold += cfg.threshold_rate * ((fired ? 1.0 : 0.0) - cfg.target_rate);
}

double activation(const Vec& content, const Vec& local_input, double bias) {
    const double norm = content.norm();
    if (norm < 1e-12) return std::max(0.0, local_input.norm() + bias);
    return std::max(0.0, local_input.dot(content) / norm + bias);
}

namespace {

void rebirth_and_seed(Grid& grid, std::size_t i, const ExpertRouter& router,
                      const DeepMemoryState& dm, Rng& rng) {
    const int expert = grid.unit(i).expert_id;
    grid.rebirth(i, rng, router.group_thresholds[expert]);
    if (auto seeded = seed_unit(dm, expert, grid.cycle(), rng)) grid.unit(i).content = *seeded;
}

}  // namespace

std::vector<std::size_t> replace_depleted(Grid& grid, const ExpertRouter& router,
                                          const DeepMemoryState& dm, Rng& rng) {
    std::vector<std::size_t> replaced;
    const double e_min = grid.config().e_min;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (grid.unit(i).energy < e_min) {
            rebirth_and_seed(grid, i, router, dm, rng);
            replaced.push_back(i);
        }
    }
    return replaced;
}

std::vector<std::size_t> reinitialize_all(Grid& grid, const ExpertRouter& router,
                                          const DeepMemoryState& dm, Rng& rng) {
    std::vector<std::size_t> replaced(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        rebirth_and_seed(grid, i, router, dm, rng);
        replaced[i] = i;
    }
    return replaced;
}

CycleOutcome step_cycle(Grid& grid, const Vec& input, ExpertRouter& router, DeepMemoryState& dm,
                        Rng& rng, int context) {
    const GridConfig& cfg = grid.config();
    if (input.size() != cfg.dim)
        throw ConfigError("input has dimension " + std::to_string(input.size()) + ", grid expects " +
                          std::to_string(cfg.dim));
    if (!input.allFinite()) throw ConfigError("input contains non-finite values");
    if (router.k != grid.k() || dm.k != grid.k())
        throw ConfigError("router, memory and grid disagree on the expert count");

    if (router.mode == RoutingMode::BindingDisruption) apply_binding_disruption(router, grid, rng);

    CycleOutcome out;
    const Selection sel = select_expert(router, input, rng, context);
    out.selected_expert = sel.expert;

    const std::size_t n = grid.size();
    const int dim = cfg.dim;

    // Synchronous update: neighbourhood reads use contents from the start of the cycle.
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> snapshot(n, dim);
    for (std::size_t i = 0; i < n; ++i) snapshot.row(i) = grid.unit(i).content.transpose();

    std::vector<char> eligible(n, 0);
    std::vector<Vec> group_sum(grid.k(), Vec::Zero(dim));
    std::vector<int> group_fired(grid.k(), 0);
    std::vector<int> group_eligible(grid.k(), 0);
    Vec local(dim);

    for (std::size_t i = 0; i < n; ++i) {
        UnitState& u = grid.unit(i);
        u.fired = false;
        const double weight = sel.weights[u.expert_id];
        if (weight <= 0.0) {
            u.energy = std::min(cfg.e_init, u.energy + cfg.leak_income);
            continue;
        }
        eligible[i] = 1;
        ++group_eligible[u.expert_id];
        if (u.energy <= cfg.e_min) continue;

        local = (1.0 - cfg.neighbor_weight) * input;
        const auto& nbrs = grid.neighbors(i);
        if (!nbrs.empty() && cfg.neighbor_weight > 0.0) {
            Vec nsum = Vec::Zero(dim);
            for (int j : nbrs) nsum += snapshot.row(j).transpose();
            local += (cfg.neighbor_weight / static_cast<double>(nbrs.size())) * nsum;
        }

        const double a = activation(u.content, local, cfg.activation_bias);
        if (weight * a <= u.threshold) {
            u.energy = std::min(cfg.e_init, u.energy + cfg.leak_income);
            continue;
        }
        u.fired = true;
        update_content(u, local, cfg.content_rate);
        if (!u.content.allFinite())
            throw NumericFault(i, "non-finite content in unit " + std::to_string(i));
        u.energy = std::clamp(u.energy - cfg.activation_cost * a + cfg.energy_income, 0.0, cfg.e_init);
        out.fired_ids.push_back(i);
        group_sum[u.expert_id] += u.content;
        ++group_fired[u.expert_id];
    }

    for (int e = 0; e < grid.k(); ++e) {
        if (group_fired[e] == 0) continue;
        Vec mean = group_sum[e] / static_cast<double>(group_fired[e]);
        record(dm, e, mean, rng);
        out.fired_means.push_back({e, std::move(mean), group_fired[e]});
    }

    out.replaced_ids = replace_depleted(grid, router, dm, rng);
    std::vector<char> replaced(n, 0);
    for (std::size_t i : out.replaced_ids) replaced[i] = 1;

    if (dm.anchor_on) {
        anchor(dm, grid);
        for (std::size_t i = 0; i < n; ++i)
            if (!grid.unit(i).content.allFinite())
                throw NumericFault(i, "non-finite content in unit " + std::to_string(i) + " after anchoring");
    }

    for (int e = 0; e < grid.k(); ++e) {
        if (group_eligible[e] == 0) continue;
        const double frac = static_cast<double>(group_fired[e]) / group_eligible[e];
        router.group_thresholds[e] += cfg.threshold_rate * (frac - cfg.target_rate);
    }
    for (std::size_t i = 0; i < n; ++i) {
        UnitState& u = grid.unit(i);
        if (eligible[i] && !replaced[i]) adapt_threshold(u, u.fired, cfg);
        ++u.age;
    }

    grid.count_replacements(out.replaced_ids.size());
    grid.advance_cycle();
    out.death_rate_estimate = grid.death_rate_estimate();
    return out;
}

}  // namespace dmgrid
