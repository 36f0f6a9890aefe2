#include "dmgrid/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "dmgrid/baselines.hpp"
#include "dmgrid/stats.hpp"

namespace dmgrid {

namespace fs = std::filesystem;

namespace {

const std::vector<std::string> kNoDm = {"memory.record=false", "memory.seed=false"};

std::vector<std::string> cat(std::vector<std::string> a, const std::vector<std::string>& b) {
    a.insert(a.end(), b.begin(), b.end());
    return a;
}

std::vector<std::uint64_t> default_seeds() { return {0, 1, 2, 3, 4, 5}; }

Condition grid(std::string name, std::vector<std::string> overrides) {
    Condition c;
    c.name = std::move(name);
    c.overrides = std::move(overrides);
    return c;
}

Check check(std::string name, std::string kind, json params, bool soft = false) {
    return Check{std::move(name), std::move(kind), std::move(params), soft};
}

std::string fmt_num(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.3f", v);
    return buf;
}

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

// ---- registry -------------------------------------------------------------

BlockSpec block_g1() {
    BlockSpec b;
    b.id = "G1";
    b.purpose = "MoE causality: routing binds contexts to experts";
    b.conditions = {grid("full", cat({"routing.mode=hard"}, kNoDm)),
                    grid("baseline", cat({"routing.mode=disabled"}, kNoDm)),
                    grid("disrupted", cat({"routing.mode=disruption"}, kNoDm))};
    b.baseline_condition = "baseline";
    const double ln3 = std::log(3.0);
    b.checks = {
        check("full_mi_ge", "median_cmp", {{"cond", "full"}, {"metric", "mi"}, {"op", ">="}, {"value", 0.9 * ln3}}),
        check("disrupted_mi_le", "median_cmp",
              {{"cond", "disrupted"}, {"metric", "mi"}, {"op", "<="}, {"value", 0.05}}),
        check("full_fsel_ge", "median_cmp", {{"cond", "full"}, {"metric", "fsel"}, {"op", ">="}, {"value", 0.9}}),
        check("disrupted_fsel_le", "median_cmp",
              {{"cond", "disrupted"}, {"metric", "fsel"}, {"op", "<="}, {"value", 0.15}}),
        check("sham_silhouette_equivalent", "equivalent",
              {{"a", "disrupted"}, {"b", "baseline"}, {"metric", "sil"}, {"margin", 0.02}}),
        check("mi_full_gt_baseline", "median_diff",
              {{"a", "full"}, {"b", "baseline"}, {"metric", "mi"}, {"op", ">"}, {"value", 0.0}}),
        check("mi_baseline_ge_disrupted", "median_diff",
              {{"a", "baseline"}, {"b", "disrupted"}, {"metric", "mi"}, {"op", ">="}, {"value", 0.0}}, true),
    };
    return b;
}

BlockSpec block_sham() {
    BlockSpec b;
    b.id = "SHAM";
    b.purpose = "Binding disruption control: sham preserves structure, destroys binding";
    b.conditions = {grid("baseline", cat({"routing.mode=disabled"}, kNoDm)),
                    grid("sham", cat({"routing.mode=disruption"}, kNoDm)),
                    grid("sham_dm", {"routing.mode=disruption"})};
    b.baseline_condition = "baseline";
    b.checks = {
        check("sham_silhouette_equivalent", "equivalent",
              {{"a", "sham"}, {"b", "baseline"}, {"metric", "sil"}, {"margin", 0.009}}),
        check("sham_mi_le", "median_cmp", {{"cond", "sham"}, {"metric", "mi"}, {"op", "<="}, {"value", 0.05}}),
        check("sham_dm_mi_le", "median_cmp",
              {{"cond", "sham_dm"}, {"metric", "mi"}, {"op", "<="}, {"value", 0.05}}),
    };
    return b;
}

BlockSpec block_dm1() {
    BlockSpec b;
    b.id = "DM1";
    b.purpose = "Persistent representations under turnover";
    b.conditions = {grid("full", {}), grid("noise_write", {"memory.write_mode=noise"}),
                    grid("global", {"routing.mode=disabled", "memory.shared_slot=true"}),
                    grid("mismatched", {"memory.write_mode=mismatched"})};
    b.checks = {
        check("r_order", "median_order",
              {{"conds", {"full", "noise_write", "global", "mismatched"}}, {"metric", "r"}}),
        check("full_r_ge", "median_cmp", {{"cond", "full"}, {"metric", "r"}, {"op", ">="}, {"value", 0.95}}),
        check("global_r_le", "median_cmp", {{"cond", "global"}, {"metric", "r"}, {"op", "<="}, {"value", 0.55}}),
        check("mismatched_r_le", "median_cmp",
              {{"cond", "mismatched"}, {"metric", "r"}, {"op", "<="}, {"value", 0.1}}),
    };
    return b;
}

BlockSpec block_dm2() {
    BlockSpec b;
    b.id = "DM2";
    b.purpose = "Functional reconstruction after interference";
    b.base_overrides = {"phases.interfere=500", "phases.reconstruct=2000"};
    b.conditions = {grid("continuous", {}), grid("one_shot", {"memory.seed_mode=one_shot"}),
                    grid("noise_seed", {"memory.seed_mode=noise"}),
                    grid("wrong_expert", {"memory.seed_mode=wrong_expert"}), grid("nodm", kNoDm)};
    b.baseline_condition = "nodm";
    b.checks = {
        check("post_interference_r_in_range", "median_between",
              {{"cond", "continuous"}, {"metric", "r"}, {"phase", "interfere"}, {"lo", 0.2}, {"hi", 0.4}}),
        check("continuous_reconstruction_ge", "median_cmp",
              {{"cond", "continuous"}, {"metric", "r"}, {"op", ">="}, {"value", 0.9}}),
        check("one_shot_near_baseline", "median_diff",
              {{"a", "one_shot"}, {"b", "nodm"}, {"metric", "r"}, {"abs", true}, {"op", "<="}, {"value", 0.1}}),
        check("noise_seed_strictly_between", "strictly_between",
              {{"cond", "noise_seed"}, {"lo", "nodm"}, {"hi", "continuous"}, {"metric", "r"}}),
        check("wrong_expert_below_baseline", "median_diff",
              {{"a", "nodm"}, {"b", "wrong_expert"}, {"metric", "r"}, {"op", ">"}, {"value", 0.0}}),
    };
    return b;
}

BlockSpec block_dm3() {
    BlockSpec b;
    b.id = "DM3";
    b.purpose = "(K, p) operating envelope and phase diagram";
    b.sweep.k_values = {3, 5, 8};
    b.sweep.p_values = {0.05, 0.1, 0.2, 0.3, 0.4, 0.5, 0.75, 1.0};
    b.sweep.schedulers = {"block", "zipf"};
    b.checks = {
        check("pass_at_high_p", "envelope_pass", {{"p_min", 0.5}}),
        check("monotone_in_p", "envelope_monotone", {{"tolerance", 0.01}}),
        check("large_k_degrades_first", "envelope_k_order", {{"k_small", 3}, {"k_large", 8}}),
    };
    return b;
}

BlockSpec block_g2b() {
    BlockSpec b;
    b.id = "G2B";
    b.purpose = "Scheduling invariance under full DM";
    b.base_overrides = {"phases.interfere=500", "phases.reconstruct=2000"};
    json pairs = json::array();
    json dm = json::array(), base = json::array();
    for (const char* s : {"block", "sticky", "iid", "zipf", "session"}) {
        const std::string sched = std::string("task.scheduler=") + s;
        b.conditions.push_back(grid(std::string(s) + "_dm", {sched}));
        b.conditions.push_back(grid(std::string(s) + "_nodm", cat({sched}, kNoDm)));
        pairs.push_back({std::string(s) + "_dm", std::string(s) + "_nodm"});
        dm.push_back(std::string(s) + "_dm");
        base.push_back(std::string(s) + "_nodm");
    }
    b.checks = {
        check("all_schedulers_pass", "verdict_all", {{"pairs", pairs}, {"want", "Pass"}}),
        check("baseline_spread_ratio", "spread_ratio",
              {{"numer", base}, {"denom", dm}, {"metric", "r"}, {"ratio", 2.0}}),
    };
    return b;
}

BlockSpec block_dmf() {
    BlockSpec b;
    b.id = "DMF";
    b.purpose = "2x2x2 factorial over record, seed, anchor";
    for (int r = 0; r < 2; ++r)
        for (int s = 0; s < 2; ++s)
            for (int a = 0; a < 2; ++a) {
                const std::string name = "r" + std::to_string(r) + "_s" + std::to_string(s) + "_a" + std::to_string(a);
                b.conditions.push_back(grid(name, {std::string("memory.record=") + (r ? "true" : "false"),
                                                   std::string("memory.seed=") + (s ? "true" : "false"),
                                                   std::string("memory.anchor=") + (a ? "true" : "false")}));
            }
    b.baseline_condition = "r0_s0_a0";
    for (const auto& c : b.conditions) {
        if (c.name == b.baseline_condition) continue;
        const bool active = c.name[1] == '1' && c.name[4] == '1';
        if (active)
            b.checks.push_back(check(c.name + "_exceeds_baseline", "median_diff",
                                     {{"a", c.name}, {"b", "r0_s0_a0"}, {"metric", "r"}, {"op", ">="}, {"value", 0.3}}));
        else
            b.checks.push_back(check(c.name + "_near_baseline", "median_diff",
                                     {{"a", c.name},
                                      {"b", "r0_s0_a0"},
                                      {"metric", "r"},
                                      {"abs", true},
                                      {"op", "<="},
                                      {"value", 0.05}}));
    }
    return b;
}

BlockSpec block_e1() {
    BlockSpec b;
    b.id = "E1";
    b.purpose = "Single-factor ablation at K = 8";
    b.base_overrides = {"routing.k=8"};
    b.conditions = {grid("full", {"memory.anchor=true"}),
                    grid("nodm", kNoDm),
                    grid("seed_off", {"memory.seed=false", "memory.anchor=true"}),
                    grid("dm_wrong", {"memory.seed_mode=wrong_expert", "memory.anchor=true"}),
                    grid("nomoe_fixed", {"routing.mode=fixed", "memory.anchor=true"}),
                    grid("anchor_off", {"memory.anchor=false"}),
                    grid("record_off", {"memory.record=false", "memory.anchor=true"}),
                    grid("seed_anchor", {"memory.seed=true", "memory.anchor=true"})};
    b.baseline_condition = "nodm";
    b.checks = {
        check("seed_off_equiv_nodm", "wilcoxon_p",
              {{"a", "seed_off"}, {"b", "nodm"}, {"metric", "r"}, {"op", ">"}, {"value", 0.05}}),
        check("dm_wrong_between", "strictly_between",
              {{"cond", "dm_wrong"}, {"lo", "nodm"}, {"hi", "full"}, {"metric", "r"}}),
        check("anchor_off_near_full", "median_diff",
              {{"a", "anchor_off"}, {"b", "full"}, {"metric", "r"}, {"abs", true}, {"op", "<="}, {"value", 0.05}}),
        check("full_sctx_ge", "median_cmp", {{"cond", "full"}, {"metric", "sctx"}, {"op", ">="}, {"value", 0.9}},
              true),
        check("nodm_sctx_le", "median_cmp", {{"cond", "nodm"}, {"metric", "sctx"}, {"op", "<="}, {"value", 0.65}},
              true),
        check("nomoe_between", "strictly_between",
              {{"cond", "nomoe_fixed"}, {"lo", "nodm"}, {"hi", "full"}, {"metric", "r"}}, true),
    };
    return b;
}

BlockSpec block_e2() {
    BlockSpec b;
    b.id = "E2";
    b.purpose = "Dose-response mediation through context separability";
    b.base_overrides = {"routing.k=8"};
    json conds = json::array(), doses = json::array();
    for (int i = 0; i <= 5; ++i) {
        const double dose = i / 5.0;
        const std::string name = "dose_" + std::to_string(i * 20);
        char buf[64];
        std::snprintf(buf, sizeof buf, "memory.inject_prob=%.1f", dose);
        b.conditions.push_back(grid(name, {buf}));
        conds.push_back(name);
        doses.push_back(dose);
    }
    b.conditions.push_back(grid("noise", {"memory.seed_mode=noise", "memory.inject_prob=1.0"}));
    b.baseline_condition = "dose_0";
    b.checks = {
        check("dose_rank_correlation", "spearman_per_seed",
              {{"conds", conds}, {"doses", doses}, {"metric", "r"}, {"value", 1.0}}),
        check("mediation_indirect", "mediation",
              {{"conds", conds}, {"doses", doses}, {"mediator", "sctx"}, {"outcome", "r"}, {"min_beta", 0.7},
               {"min_t", 4.0}}),
        check("mediation_r_squared", "mediation",
              {{"conds", conds}, {"doses", doses}, {"mediator", "sctx"}, {"outcome", "r"}, {"min_r2", 0.9}}, true),
        check("noise_matches_zero_dose", "ci_contains_zero", {{"a", "noise"}, {"b", "dose_0"}, {"metric", "r"}}),
    };
    return b;
}

BlockSpec block_e3() {
    BlockSpec b;
    b.id = "E3";
    b.purpose = "K-scaling of the DM advantage";
    for (int k : {5, 8}) {
        const std::string ks = "routing.k=" + std::to_string(k);
        b.conditions.push_back(grid("k" + std::to_string(k) + "_dm", {ks}));
        b.conditions.push_back(grid("k" + std::to_string(k) + "_nodm", cat({ks}, kNoDm)));
        const std::string dm = "k" + std::to_string(k) + "_dm", nodm = "k" + std::to_string(k) + "_nodm";
        b.checks.push_back(check(dm + "_beats_nodm", "sign_p",
                                 {{"a", dm}, {"b", nodm}, {"metric", "r"}, {"op", "<="}, {"value", 0.016}}));
        b.checks.push_back(check(dm + "_sctx_ge", "median_cmp",
                                 {{"cond", dm}, {"metric", "sctx"}, {"op", ">="}, {"value", 0.9}}, true));
    }
    return b;
}

BlockSpec block_e4() {
    BlockSpec b;
    b.id = "E4";
    b.purpose = "Turnover dose x DM interaction";
    b.base_overrides = {"routing.k=8"};
    const GridConfig g;
    const std::pair<const char*, double> levels[] = {{"low", 0.5}, {"normal", 1.0}, {"high", 2.0}};
    for (const auto& [name, scale] : levels) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "grid.activation_cost=%.4f", g.activation_cost * scale);
        const std::string dm = std::string(name) + "_dm", nodm = std::string(name) + "_nodm";
        b.conditions.push_back(grid(dm, {buf}));
        b.conditions.push_back(grid(nodm, cat({buf}, kNoDm)));
        b.checks.push_back(check(std::string(name) + "_dm_effect", "median_diff",
                                 {{"a", dm}, {"b", nodm}, {"metric", "r"}, {"op", ">="}, {"value", 0.15}}));
        b.checks.push_back(check(std::string(name) + "_dm_sctx_effect", "median_diff",
                                 {{"a", dm}, {"b", nodm}, {"metric", "sctx"}, {"op", ">"}, {"value", 0.0}}, true));
    }
    return b;
}

BlockSpec block_e5() {
    BlockSpec b;
    b.id = "E5";
    b.purpose = "Soft vs hard routing";
    b.base_overrides = {"routing.k=8"};
    for (const char* m : {"hard", "soft", "disabled"}) {
        const std::string mode = std::string("routing.mode=") + m;
        b.conditions.push_back(grid(std::string(m) + "_dm", {mode}));
        b.conditions.push_back(grid(std::string(m) + "_nodm", cat({mode}, kNoDm)));
    }
    b.checks = {
        check("hard_sctx_gt_soft", "median_diff",
              {{"a", "hard_dm"}, {"b", "soft_dm"}, {"metric", "sctx"}, {"op", ">"}, {"value", 0.0}}),
        check("hard_sctx_gt_unrouted", "median_diff",
              {{"a", "hard_dm"}, {"b", "disabled_dm"}, {"metric", "sctx"}, {"op", ">"}, {"value", 0.0}}),
        check("dm_gain_larger_under_hard", "delta_order",
              {{"a1", "hard_dm"}, {"b1", "hard_nodm"}, {"a2", "soft_dm"}, {"b2", "soft_nodm"}, {"metric", "r"}},
              true),
        check("soft_turnover_higher", "median_diff",
              {{"a", "soft_nodm"}, {"b", "hard_nodm"}, {"metric", "death"}, {"op", ">"}, {"value", 0.0}}, true),
    };
    return b;
}

BlockSpec block_e6() {
    BlockSpec b;
    b.id = "E6";
    b.purpose = "Non-gradient baselines under matched turnover";
    b.conditions.push_back(grid("grid_dm", {}));
    Condition h;
    h.name = "hopfield";
    h.model = ModelKind::Hopfield;
    h.overrides = {"baselines.turnover_prob=0"};
    Condition ht = h;
    ht.name = "hopfield_turnover";
    ht.overrides = {};
    ht.matched_turnover = true;
    ht.turnover_source = "grid_dm";
    Condition e = h;
    e.name = "esn";
    e.model = ModelKind::Esn;
    Condition et = ht;
    et.name = "esn_turnover";
    et.model = ModelKind::Esn;
    b.conditions.push_back(h);
    b.conditions.push_back(ht);
    b.conditions.push_back(e);
    b.conditions.push_back(et);
    b.checks = {
        check("hopfield_turnover_drop", "median_diff",
              {{"a", "hopfield"}, {"b", "hopfield_turnover"}, {"metric", "r"}, {"op", ">="}, {"value", 0.3}}),
        check("dm_beats_hopfield_turnover", "median_diff",
              {{"a", "grid_dm"}, {"b", "hopfield_turnover"}, {"metric", "r"}, {"op", ">="}, {"value", 0.2}}),
        check("dm_sctx_ge_esn", "median_diff",
              {{"a", "grid_dm"}, {"b", "esn_turnover"}, {"metric", "sctx"}, {"op", ">="}, {"value", 0.0}}),
        check("esn_turnover_gt_no_turnover", "median_diff",
              {{"a", "esn_turnover"}, {"b", "esn"}, {"metric", "r"}, {"op", ">"}, {"value", 0.0}}, true),
    };
    return b;
}

// ---- evaluation helpers -----------------------------------------------------

double metric_of(const MetricsReport& m, const std::string& name) {
    if (name == "r") return m.r_mean;
    if (name == "mi") return m.mutual_information;
    if (name == "cmi") return m.content_mutual_information;
    if (name == "fsel") return m.firing_selectivity;
    if (name == "sil") return m.silhouette;
    if (name == "sctx") return m.context_silhouette;
    if (name == "death") return m.death_rate;
    if (name == "drift") return m.drift_estimate;
    throw ConfigError("unknown metric '" + name + "'");
}

const std::vector<std::string> kSummaryMetrics = {"r", "mi", "fsel", "sil", "sctx", "death"};

bool compare(double lhs, const std::string& op, double rhs) {
    if (op == ">=") return lhs >= rhs;
    if (op == "<=") return lhs <= rhs;
    if (op == ">") return lhs > rhs;
    if (op == "<") return lhs < rhs;
    throw ConfigError("unknown comparison '" + op + "'");
}

class Evaluator {
public:
    Evaluator(const BlockSpec& spec, const std::vector<RunRecord>& records, const json& base,
              std::uint64_t master_seed)
        : spec_(spec), base_(base), rng_(derive_seed(master_seed, fnv1a(spec.id))) {
        for (const auto& r : records) by_cond_[r.condition].push_back(&r);
        for (auto& [name, v] : by_cond_)
            std::sort(v.begin(), v.end(), [](const RunRecord* a, const RunRecord* b) { return a->seed < b->seed; });
    }

    // Values per seed; NaN for failed runs.
    std::vector<double> values(const std::string& cond, const std::string& metric,
                               const std::string& phase = "final") const {
        auto it = by_cond_.find(cond);
        if (it == by_cond_.end()) throw ConfigError("check references unknown condition '" + cond + "'");
        std::vector<double> out;
        for (const RunRecord* r : it->second)
            out.push_back(r->error.empty() ? metric_of(r->phase_metrics(phase), metric) : std::nan(""));
        return out;
    }

    static bool complete(const std::vector<double>& v) {
        return !v.empty() && std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
    }

    double med(const std::string& cond, const std::string& metric, const std::string& phase = "final") const {
        const auto v = values(cond, metric, phase);
        if (!complete(v)) throw Error(ErrorCode::NumericFault, "condition '" + cond + "' has failed runs");
        return stats::median(v);
    }

    int k_of(const std::string& cond) const {
        for (const auto& c : spec_.conditions)
            if (c.name == cond) return resolve_config(base_, spec_, c).routing.k;
        return 3;
    }

    MetricsReport median_report(const std::string& cond, const std::string& phase) const {
        MetricsReport m;
        m.r_mean = med(cond, "r", phase);
        m.mutual_information = med(cond, "mi", phase);
        m.firing_selectivity = med(cond, "fsel", phase);
        return m;
    }

    CheckResult eval(const Check& c) const {
        CheckResult res{c.name, false, c.soft, ""};
        try {
            res.passed = dispatch(c, res.detail);
        } catch (const Error& e) {
            res.passed = false;
            res.detail = std::string("not evaluable: ") + e.what();
        }
        return res;
    }

    Rng& rng() { return rng_; }

private:
    bool dispatch(const Check& c, std::string& detail) const {
        const json& p = c.params;
        const std::string phase = p.value("phase", std::string("final"));
        const std::string metric = p.value("metric", std::string("r"));
        if (c.kind == "median_cmp") {
            const double v = med(p.at("cond"), metric, phase);
            const double t = p.at("value");
            detail = metric + "(" + p.at("cond").get<std::string>() + ") = " + fmt_num(v) + " " +
                     p.at("op").get<std::string>() + " " + fmt_num(t);
            return compare(v, p.at("op"), t);
        }
        if (c.kind == "median_between") {
            const double v = med(p.at("cond"), metric, phase);
            detail = metric + " = " + fmt_num(v) + " in [" + fmt_num(p.at("lo")) + ", " + fmt_num(p.at("hi")) + "]";
            return v >= p.at("lo").get<double>() && v <= p.at("hi").get<double>();
        }
        if (c.kind == "median_order") {
            bool ok = true;
            double prev = 0.0;
            std::string sep;
            for (std::size_t i = 0; i < p.at("conds").size(); ++i) {
                const std::string cond = p.at("conds")[i];
                const double v = med(cond, metric, phase);
                if (i > 0 && !(prev > v)) ok = false;
                detail += sep + cond + "=" + fmt_num(v);
                sep = " > ";
                prev = v;
            }
            return ok;
        }
        if (c.kind == "median_diff") {
            double d = med(p.at("a"), metric, phase) - med(p.at("b"), metric, phase);
            const bool use_abs = p.value("abs", false);
            if (use_abs) d = std::fabs(d);
            detail = std::string(use_abs ? "|" : "") + metric + "(" + p.at("a").get<std::string>() + ") - " + metric +
                     "(" + p.at("b").get<std::string>() + ")" + (use_abs ? "|" : "") + " = " + fmt_num(d) + " " +
                     p.at("op").get<std::string>() + " " + fmt_num(p.at("value"));
            return compare(d, p.at("op"), p.at("value"));
        }
        if (c.kind == "strictly_between") {
            const double lo = med(p.at("lo"), metric, phase), v = med(p.at("cond"), metric, phase),
                         hi = med(p.at("hi"), metric, phase);
            detail = fmt_num(lo) + " < " + fmt_num(v) + " < " + fmt_num(hi);
            return lo < v && v < hi;
        }
        if (c.kind == "delta_order") {
            const double d1 = med(p.at("a1"), metric, phase) - med(p.at("b1"), metric, phase);
            const double d2 = med(p.at("a2"), metric, phase) - med(p.at("b2"), metric, phase);
            detail = "delta " + fmt_num(d1) + " > " + fmt_num(d2);
            return d1 > d2;
        }
        if (c.kind == "equivalent") {
            const auto a = values(p.at("a"), metric, phase), b = values(p.at("b"), metric, phase);
            if (!complete(a) || !complete(b)) throw Error(ErrorCode::NumericFault, "failed runs");
            Rng r = rng_;
            const double margin = p.at("margin");
            const bool ok = stats::equivalence_check(a, b, margin, r);
            detail = "median diff " + fmt_num(stats::median(a) - stats::median(b)) + ", CI within +/-" + fmt_num(margin) +
                     ": " + (ok ? "yes" : "no");
            return ok;
        }
        if (c.kind == "ci_contains_zero") {
            const auto a = values(p.at("a"), metric, phase), b = values(p.at("b"), metric, phase);
            if (!complete(a) || !complete(b) || a.size() != b.size()) throw Error(ErrorCode::NumericFault, "failed runs");
            std::vector<double> d(a.size());
            for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
            Rng r = rng_;
            const auto ci = stats::bootstrap_ci(d, stats::Statistic::Median, 2000, 0.95, r);
            detail = "paired median diff CI [" + fmt_num(ci.lo) + ", " + fmt_num(ci.hi) + "]";
            return ci.lo <= 0.0 && ci.hi >= 0.0;
        }
        if (c.kind == "wilcoxon_p" || c.kind == "sign_p") {
            const auto a = values(p.at("a"), metric, phase), b = values(p.at("b"), metric, phase);
            if (!complete(a) || !complete(b) || a.size() != b.size()) throw Error(ErrorCode::NumericFault, "failed runs");
            std::vector<double> d(a.size());
            for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
            const auto t = c.kind == "sign_p" ? stats::sign_test(d) : stats::wilcoxon_signed_rank(d);
            const double pv = c.kind == "sign_p" ? t.p_one_sided : t.p_two_sided;
            detail = "p = " + fmt_num(pv) + " (n = " + std::to_string(t.n) + ") " + p.at("op").get<std::string>() + " " +
                     fmt_num(p.at("value"));
            return compare(pv, p.at("op"), p.at("value"));
        }
        if (c.kind == "spearman_per_seed") {
            const auto& conds = p.at("conds");
            std::vector<std::vector<double>> cols;
            for (const auto& cn : conds) cols.push_back(values(cn, metric, phase));
            const std::vector<double> doses = p.at("doses").get<std::vector<double>>();
            double worst = 1.0;
            for (std::size_t s = 0; s < cols[0].size(); ++s) {
                std::vector<double> y;
                for (const auto& col : cols) y.push_back(col[s]);
                if (!complete(y)) throw Error(ErrorCode::NumericFault, "failed runs");
                const auto rho = stats::spearman_rho(doses, y);
                worst = std::min(worst, rho.undefined ? 0.0 : rho.rho);
            }
            detail = "min per-seed rho = " + fmt_num(worst);
            return worst >= p.at("value").get<double>() - 1e-12;
        }
        if (c.kind == "mediation") {
            std::vector<double> x, m, y;
            const std::vector<double> doses = p.at("doses").get<std::vector<double>>();
            for (std::size_t i = 0; i < p.at("conds").size(); ++i) {
                const auto mv = values(p.at("conds")[i], p.at("mediator"), phase);
                const auto yv = values(p.at("conds")[i], p.at("outcome"), phase);
                if (!complete(mv) || !complete(yv)) throw Error(ErrorCode::NumericFault, "failed runs");
                for (std::size_t s = 0; s < mv.size(); ++s) {
                    x.push_back(doses[i]);
                    m.push_back(mv[s]);
                    y.push_back(yv[s]);
                }
            }
            const auto med_res = stats::mediation_indirect(x, m, y);
            detail = "indirect = " + fmt_num(med_res.indirect) + ", t = " + fmt_num(med_res.sobel_t) +
                     ", R2 = " + fmt_num(med_res.r_squared);
            bool ok = true;
            if (p.contains("min_beta")) ok = ok && med_res.indirect > p.at("min_beta").get<double>();
            if (p.contains("min_t")) ok = ok && med_res.sobel_t > p.at("min_t").get<double>();
            if (p.contains("min_r2")) ok = ok && med_res.r_squared >= p.at("min_r2").get<double>();
            return ok;
        }
        if (c.kind == "verdict_all") {
            bool ok = true;
            std::string sep;
            for (const auto& pair : p.at("pairs")) {
                const std::string cond = pair[0], base = pair[1];
                const Verdict v = classify_operating_point(median_report(cond, phase), median_report(base, phase),
                                                           k_of(cond));
                detail += sep + cond + "=" + std::string(to_string(v));
                sep = ", ";
                if (std::string(to_string(v)) != p.at("want").get<std::string>()) ok = false;
            }
            return ok;
        }
        if (c.kind == "spread_ratio") {
            auto spread = [&](const json& conds) {
                double lo = 1e300, hi = -1e300;
                for (const auto& cn : conds) {
                    const double v = med(cn, metric, phase);
                    lo = std::min(lo, v);
                    hi = std::max(hi, v);
                }
                return hi - lo;
            };
            const double num = spread(p.at("numer")), den = spread(p.at("denom"));
            const double ratio = p.at("ratio");
            detail = "spread " + fmt_num(num) + " vs " + fmt_num(den) + " (need >= " + fmt_num(ratio) + "x)";
            return num >= ratio * den;
        }
        throw ConfigError("unknown check kind '" + c.kind + "'");
    }

    const BlockSpec& spec_;
    const json& base_;
    std::map<std::string, std::vector<const RunRecord*>> by_cond_;
    Rng rng_;
};

// Envelope checks operate on sweep cells.
CheckResult eval_envelope(const Check& c, const SweepResult& sw) {
    CheckResult res{c.name, true, c.soft, ""};
    std::map<std::pair<int, std::string>, std::vector<const SweepCell*>> lines;
    for (const auto& cell : sw.cells) lines[{cell.k, cell.scheduler}].push_back(&cell);
    for (auto& [key, v] : lines)
        std::sort(v.begin(), v.end(), [](const SweepCell* a, const SweepCell* b) { return a->p < b->p; });
    const json& p = c.params;

    if (c.kind == "envelope_pass") {
        const double p_min = p.at("p_min");
        int bad = 0, total = 0;
        for (const auto& cell : sw.cells) {
            if (cell.p < p_min - 1e-12) continue;
            ++total;
            if (cell.verdict != Verdict::Pass) {
                ++bad;
                res.detail += "K=" + std::to_string(cell.k) + " p=" + fmt_num(cell.p) + " " + cell.scheduler + " " +
                              std::string(to_string(cell.verdict)) + "; ";
            }
        }
        res.passed = total > 0 && bad == 0;
        res.detail += std::to_string(total - bad) + "/" + std::to_string(total) + " cells Pass";
        return res;
    }
    if (c.kind == "envelope_monotone") {
        const double tol = p.value("tolerance", 0.0);
        int violations = 0;
        for (const auto& [key, v] : lines)
            for (std::size_t i = 1; i < v.size(); ++i)
                if (v[i]->median_r < v[i - 1]->median_r - tol) {
                    ++violations;
                    res.detail += "K=" + std::to_string(key.first) + " " + key.second + " p " + fmt_num(v[i - 1]->p) +
                                  "->" + fmt_num(v[i]->p) + ": " + fmt_num(v[i - 1]->median_r) + "->" +
                                  fmt_num(v[i]->median_r) + "; ";
                }
        res.passed = violations == 0;
        res.detail += std::to_string(violations) + " violations";
        return res;
    }
    if (c.kind == "envelope_k_order") {
        // Lowest p from which every larger p passes; 0 if the whole line passes.
        auto boundary = [](const std::vector<const SweepCell*>& v) {
            double b = 0.0;
            for (const auto* cell : v)
                if (cell->verdict != Verdict::Pass) b = cell->p;
            return b;
        };
        const int ks = p.at("k_small"), kl = p.at("k_large");
        std::set<std::string> scheds;
        for (const auto& cell : sw.cells) scheds.insert(cell.scheduler);
        res.passed = !scheds.empty();
        for (const auto& s : scheds) {
            auto a = lines.find({ks, s}), b = lines.find({kl, s});
            if (a == lines.end() || b == lines.end()) {
                res.passed = false;
                res.detail += s + ": missing line; ";
                continue;
            }
            const double bs = boundary(a->second), bl = boundary(b->second);
            res.detail += s + ": last non-Pass p K=" + std::to_string(ks) + " " + fmt_num(bs) + ", K=" +
                          std::to_string(kl) + " " + fmt_num(bl) + "; ";
            if (!(bl > bs)) res.passed = false;
        }
        return res;
    }
    res.passed = false;
    res.detail = "unknown envelope check '" + c.kind + "'";
    return res;
}


// ---- running ---------------------------------------------------------------

RunRecord run_grid(const std::string& block, const std::string& cond, std::uint64_t seed, const SimConfig& cfg,
                   std::uint64_t master_seed) {
    RunRecord rec;
    rec.block = block;
    rec.condition = cond;
    rec.seed = seed;
    rec.config_hash = config_hash(cfg);
    const auto t0 = std::chrono::steady_clock::now();
    try {
        Simulation sim(cfg, derive_seed(master_seed, seed));
        rec.phases = sim.run_plan();
    } catch (const Error& e) {
        rec.error = e.what();
        rec.phases.clear();
    }
    rec.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return rec;
}

RunRecord run_model(const std::string& block, const Condition& cond, std::uint64_t seed, SimConfig cfg,
                    std::uint64_t master_seed, double turnover) {
    RunRecord rec;
    rec.block = block;
    rec.condition = cond.name;
    rec.seed = seed;
    cfg.baselines.turnover_prob = turnover;
    rec.config_hash = config_hash(cfg);
    const auto t0 = std::chrono::steady_clock::now();
    try {
        const std::uint64_t s = derive_seed(master_seed, seed);
        Rng task_rng(derive_seed(s, 0)), schedule_rng(derive_seed(s, 1)), input_rng(derive_seed(s, 2)),
            model_rng(derive_seed(s, 5));
        const int k = cfg.routing.k;
        const ContextTask task = make_task(k, cfg.grid.dim, cfg.task.min_separation, cfg.task.input_noise, task_rng);
        Schedule schedule(schedule_params(cfg.task), k, schedule_rng);
        BaselineRunSpec spec;
        spec.kind = cond.model == ModelKind::Esn ? BaselineKind::Esn : BaselineKind::Hopfield;
        spec.hopfield_slots = cfg.baselines.hopfield_slots;
        spec.hopfield_beta = cfg.baselines.hopfield_beta;
        spec.hopfield_rate = cfg.baselines.hopfield_rate;
        spec.esn_reservoir = cfg.baselines.esn_reservoir;
        spec.esn_spectral_radius = cfg.baselines.esn_spectral_radius;
        spec.esn_rate = cfg.baselines.esn_rate;
        spec.esn_sparsity = cfg.baselines.esn_sparsity;
        spec.esn_input_scale = cfg.baselines.esn_input_scale;
        spec.turnover_prob = turnover;
        spec.train_cycles = cfg.phases.warmup + cfg.phases.operate;
        spec.eval_window = cfg.phases.eval_window;
        const BaselineScore score = run_baseline(spec, task, schedule, schedule_rng, input_rng, model_rng);
        PhaseReport pr;
        pr.kind = PhaseKind::Operate;
        pr.cycles = cfg.phases.operate;
        pr.metrics.r_mean = score.r_mean;
        pr.metrics.r_per_context = score.r_per_context;
        pr.metrics.context_silhouette = score.context_silhouette;
        pr.metrics.death_rate = turnover;
        rec.phases.push_back(pr);
    } catch (const Error& e) {
        rec.error = e.what();
        rec.phases.clear();
    }
    rec.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return rec;
}

json interval_json(const std::vector<double>& v, Rng& rng) {
    json j;
    std::vector<double> finite;
    for (double x : v)
        if (std::isfinite(x)) finite.push_back(x);
    j["n"] = finite.size();
    if (finite.empty()) {
        j["median"] = nullptr;
        j["ci95"] = nullptr;
        return j;
    }
    j["median"] = stats::median(finite);
    const auto ci = stats::bootstrap_ci(finite, stats::Statistic::Median, 2000, 0.95, rng);
    j["ci95"] = {ci.lo, ci.hi};
    return j;
}

json summarize(const BlockResult& br, const json& base, std::uint64_t master_seed) {
    (void)base;
    Rng rng(derive_seed(master_seed, fnv1a(br.spec.id + "/summary")));
    json s;
    s["block"] = br.spec.id;
    s["purpose"] = br.spec.purpose;
    s["runs"] = br.records.size();
    int errors = 0;
    for (const auto& r : br.records)
        if (!r.error.empty()) ++errors;
    s["failed_runs"] = errors;

    if (br.spec.sweep.k_values.empty()) {
        json conds = json::object();
        for (const auto& c : br.spec.conditions) {
            std::vector<const RunRecord*> recs;
            for (const auto& r : br.records)
                if (r.condition == c.name) recs.push_back(&r);
            std::sort(recs.begin(), recs.end(),
                      [](const RunRecord* a, const RunRecord* b) { return a->seed < b->seed; });
            json cj;
            cj["n"] = recs.size();
            std::vector<std::string> phases;
            for (const auto* r : recs)
                if (r->error.empty()) {
                    for (const auto& ph : r->phases) phases.emplace_back(to_string(ph.kind));
                    break;
                }
            json pj = json::object();
            for (const auto& ph : phases) {
                json mj = json::object();
                for (const auto& m : kSummaryMetrics) {
                    std::vector<double> v;
                    for (const auto* r : recs)
                        v.push_back(r->error.empty() ? metric_of(r->phase_metrics(ph), m) : std::nan(""));
                    mj[m] = interval_json(v, rng);
                }
                pj[ph] = mj;
            }
            cj["phases"] = pj;
            std::map<std::string, int> verdicts;
            for (const auto* r : recs) ++verdicts[std::string(to_string(r->verdict))];
            cj["verdicts"] = verdicts;
            conds[c.name] = cj;
        }
        s["conditions"] = conds;

        // Paired tests of every condition against the baseline, when there is one.
        if (!br.spec.baseline_condition.empty()) {
            Evaluator ev(br.spec, br.records, base, master_seed);
            json tests = json::object();
            for (const auto& c : br.spec.conditions) {
                if (c.name == br.spec.baseline_condition) continue;
                try {
                    const auto a = ev.values(c.name, "r"), b = ev.values(br.spec.baseline_condition, "r");
                    if (!Evaluator::complete(a) || !Evaluator::complete(b)) continue;
                    std::vector<double> d(a.size());
                    for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
                    const auto w = stats::wilcoxon_signed_rank(d);
                    const auto sg = stats::sign_test(d);
                    tests[c.name] = {{"delta_r_median", stats::median(d)},
                                     {"wilcoxon_p", w.p_two_sided},
                                     {"sign_p_one_sided", sg.p_one_sided}};
                } catch (const Error&) {
                }
            }
            s["vs_baseline"] = tests;
        }
    } else {
        json cells = json::array();
        for (const auto& c : br.sweep.cells)
            cells.push_back({{"k", c.k},
                             {"p", c.p},
                             {"scheduler", c.scheduler},
                             {"median_r", c.median_r},
                             {"baseline_r", c.baseline_r},
                             {"verdict", std::string(to_string(c.verdict))}});
        s["cells"] = cells;
    }

    json checks = json::array();
    bool deviation = errors > 0;
    for (const auto& c : br.checks) {
        checks.push_back({{"name", c.name}, {"passed", c.passed}, {"soft", c.soft}, {"detail", c.detail}});
        if (!c.passed && !c.soft) deviation = true;
    }
    s["checks"] = checks;
    s["deviations"] = deviation;
    return s;
}

struct SweepRun {
    SweepResult result;
    std::vector<RunRecord> records;
};

SweepRun sweep_impl(const std::string& block, const SweepSpec& sw, const std::vector<std::uint64_t>& seeds,
                    std::uint64_t master_seed, const json& base) {
    if (sw.k_values.empty() || sw.p_values.empty() || sw.schedulers.empty())
        throw ConfigError("sweep needs non-empty k, p and scheduler lists");
    if (seeds.empty()) throw ConfigError("sweep needs at least one seed");
    SweepRun out;
    BlockSpec shell;
    shell.id = block;
    for (int k : sw.k_values)
        for (const auto& sched : sw.schedulers) {
            const std::vector<std::string> common = {"routing.k=" + std::to_string(k), "task.scheduler=" + sched};
            const std::string line = "k" + std::to_string(k) + "_" + sched;
            const SimConfig base_cfg = resolve_config(base, shell, grid(line + "_nodm", cat(common, kNoDm)));
            std::vector<RunRecord> base_recs;
            for (auto s : seeds) base_recs.push_back(run_grid(block, line + "_nodm", s, base_cfg, master_seed));
            std::vector<double> base_r;
            for (const auto& r : base_recs)
                if (r.error.empty()) base_r.push_back(r.final_metrics().r_mean);

            for (double p : sw.p_values) {
                char buf[64];
                std::snprintf(buf, sizeof buf, "memory.inject_prob=%.17g", p);
                char name[64];
                std::snprintf(name, sizeof name, "_p%g", p);
                const SimConfig cfg = resolve_config(base, shell, grid(line + name, cat(common, {buf})));
                std::vector<double> rs;
                std::vector<MetricsReport> reps;
                for (std::size_t i = 0; i < seeds.size(); ++i) {
                    RunRecord rec = run_grid(block, line + name, seeds[i], cfg, master_seed);
                    SweepRow row{k, p, sched, seeds[i], std::nan(""), Verdict::NotApplicable};
                    if (rec.error.empty() && base_recs[i].error.empty()) {
                        rec.verdict = classify_operating_point(rec.final_metrics(), base_recs[i].final_metrics(), k);
                        row.r = rec.final_metrics().r_mean;
                        row.verdict = rec.verdict;
                        rs.push_back(row.r);
                        reps.push_back(rec.final_metrics());
                    }
                    out.result.rows.push_back(row);
                    out.records.push_back(std::move(rec));
                }
                SweepCell cell{k, p, sched, std::nan(""), std::nan(""), Verdict::NotApplicable};
                if (!rs.empty() && !base_r.empty()) {
                    // Cell verdict on per-cell medians.
                    auto med_of = [&](auto get) {
                        std::vector<double> v;
                        for (const auto& m : reps) v.push_back(get(m));
                        return stats::median(v);
                    };
                    MetricsReport m, b;
                    m.r_mean = cell.median_r = stats::median(rs);
                    m.mutual_information = med_of([](const MetricsReport& x) { return x.mutual_information; });
                    m.firing_selectivity = med_of([](const MetricsReport& x) { return x.firing_selectivity; });
                    b.r_mean = cell.baseline_r = stats::median(base_r);
                    cell.verdict = classify_operating_point(m, b, k);
                }
                out.result.cells.push_back(cell);
            }
            for (auto& r : base_recs) out.records.push_back(std::move(r));
        }
    return out;
}

std::string csv_escape(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open '" + path.string() + "' for writing");
    f << content;
    if (!f) throw IoError("write failed for '" + path.string() + "'");
}

std::string sweep_long_csv(const SweepResult& sw) {
    std::ostringstream pd;
    pd << "k,p,scheduler,seed,r,verdict\n";
    for (const auto& row : sw.rows)
        pd << row.k << "," << format_number(row.p) << "," << row.scheduler << "," << row.seed << ","
           << format_number(row.r) << "," << to_string(row.verdict) << "\n";
    return pd.str();
}

std::string sweep_pivot_csv(const SweepResult& sw) {
    std::ostringstream pivot;
    pivot << "k,p,scheduler,median_r,baseline_r,verdict\n";
    for (const auto& c : sw.cells)
        pivot << c.k << "," << format_number(c.p) << "," << c.scheduler << "," << format_number(c.median_r) << ","
              << format_number(c.baseline_r) << "," << to_string(c.verdict) << "\n";
    return pivot.str();
}

}  // namespace

void emit_sweep(const SweepResult& sweep, const std::string& out_dir) {
    const fs::path root(out_dir);
    std::error_code ec;
    fs::create_directories(root, ec);
    if (ec) throw IoError("cannot create '" + root.string() + "': " + ec.message());
    write_file(root / "sweep.csv", sweep_long_csv(sweep));
    write_file(root / "sweep_pivot.csv", sweep_pivot_csv(sweep));
}

// ---- public API --------------------------------------------------------------

std::string format_number(double v) {
    if (!std::isfinite(v)) return "nan";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

json to_json(const MetricsReport& m) {
    json j;
    j["r_mean"] = m.r_mean;
    j["r_per_context"] = m.r_per_context;
    j["firing_selectivity"] = m.firing_selectivity;
    j["mutual_information"] = m.mutual_information;
    j["content_mutual_information"] = m.content_mutual_information;
    j["silhouette"] = m.silhouette;
    j["context_silhouette"] = m.context_silhouette;
    j["delta_r_vs_baseline"] = m.delta_r_vs_baseline ? json(*m.delta_r_vs_baseline) : json(nullptr);
    j["drift_estimate"] = m.drift_estimate;
    j["death_rate"] = m.death_rate;
    j["degenerate"] = m.degenerate;
    return j;
}

json to_json(const BlockSpec& spec) {
    json j;
    j["id"] = spec.id;
    j["purpose"] = spec.purpose;
    j["seeds"] = spec.seeds;
    j["base_overrides"] = spec.base_overrides;
    json conds = json::array();
    for (const auto& c : spec.conditions) {
        json cj;
        cj["name"] = c.name;
        cj["model"] = c.model == ModelKind::Grid ? "grid" : c.model == ModelKind::Hopfield ? "hopfield" : "esn";
        cj["overrides"] = c.overrides;
        if (c.matched_turnover) cj["turnover_source"] = c.turnover_source;
        conds.push_back(cj);
    }
    j["conditions"] = conds;
    if (!spec.baseline_condition.empty()) j["baseline_condition"] = spec.baseline_condition;
    if (!spec.sweep.k_values.empty())
        j["sweep"] = {{"k", spec.sweep.k_values}, {"p", spec.sweep.p_values}, {"schedulers", spec.sweep.schedulers}};
    json checks = json::array();
    for (const auto& c : spec.checks)
        checks.push_back({{"name", c.name}, {"kind", c.kind}, {"params", c.params}, {"soft", c.soft}});
    j["checks"] = checks;
    return j;
}

const MetricsReport& RunRecord::final_metrics() const {
    if (phases.empty()) throw Error(ErrorCode::InvalidArgument, "run has no phase reports");
    return phases.back().metrics;
}

const MetricsReport& RunRecord::phase_metrics(const std::string& phase) const {
    if (phase == "final") return final_metrics();
    for (const auto& p : phases)
        if (to_string(p.kind) == phase) return p.metrics;
    throw Error(ErrorCode::InvalidArgument, "run has no '" + phase + "' phase");
}

bool BlockResult::deviations() const { return summary.value("deviations", true); }

void BlockSpec::validate() const {
    if (id.empty()) throw ConfigError("block id is empty");
    if (seeds.empty()) throw ConfigError("block " + id + ": seeds list is empty");
    if (sweep.k_values.empty() && conditions.empty()) throw ConfigError("block " + id + ": no conditions");
    std::set<std::string> names;
    for (const auto& c : conditions) {
        if (!names.insert(c.name).second) throw ConfigError("block " + id + ": duplicate condition " + c.name);
        if (c.matched_turnover && c.turnover_source.empty())
            throw ConfigError("block " + id + ": " + c.name + " needs a turnover source");
    }
    for (const auto& c : conditions)
        if (c.matched_turnover && !names.count(c.turnover_source))
            throw ConfigError("block " + id + ": unknown turnover source " + c.turnover_source);
    if (!baseline_condition.empty() && !names.count(baseline_condition))
        throw ConfigError("block " + id + ": unknown baseline condition " + baseline_condition);
    std::set<std::uint64_t> uniq(seeds.begin(), seeds.end());
    if (uniq.size() != seeds.size()) throw ConfigError("block " + id + ": duplicate seeds");
}

const std::vector<std::string>& block_ids() {
    static const std::vector<std::string> ids = {"G1",  "DM1", "DM2", "DM3", "G2B", "DMF", "SHAM",
                                                 "E1",  "E2",  "E3",  "E4",  "E5",  "E6"};
    return ids;
}

BlockSpec make_block(const std::string& id) {
    BlockSpec b;
    if (id == "G1") b = block_g1();
    else if (id == "SHAM") b = block_sham();
    else if (id == "DM1") b = block_dm1();
    else if (id == "DM2") b = block_dm2();
    else if (id == "DM3") b = block_dm3();
    else if (id == "G2B") b = block_g2b();
    else if (id == "DMF") b = block_dmf();
    else if (id == "E1") b = block_e1();
    else if (id == "E2") b = block_e2();
    else if (id == "E3") b = block_e3();
    else if (id == "E4") b = block_e4();
    else if (id == "E5") b = block_e5();
    else if (id == "E6") b = block_e6();
    else throw ConfigError("unknown block id '" + id + "'");
    b.seeds = default_seeds();
    return b;
}

SimConfig resolve_config(const json& base, const BlockSpec& spec, const Condition& cond) {
    json j = to_json(config_from_json(base.is_null() ? json::object() : base));
    for (const auto& o : spec.base_overrides) apply_override(j, o);
    for (const auto& o : cond.overrides) apply_override(j, o);
    SimConfig cfg = config_from_json(j);
    cfg.validate();
    return cfg;
}

SweepResult sweep_envelope(const SweepSpec& sweep, const std::vector<std::uint64_t>& seeds,
                           std::uint64_t master_seed, const json& base) {
    return sweep_impl("sweep", sweep, seeds, master_seed, base).result;
}

BlockResult run_block(const BlockSpec& spec, std::uint64_t master_seed, const json& base) {
    spec.validate();
    BlockResult br;
    br.spec = spec;

    if (!spec.sweep.k_values.empty()) {
        auto sw = sweep_impl(spec.id, spec.sweep, spec.seeds, master_seed, base);
        br.sweep = std::move(sw.result);
        br.records = std::move(sw.records);
        for (const auto& c : spec.checks) br.checks.push_back(eval_envelope(c, br.sweep));
        br.summary = summarize(br, base, master_seed);
        return br;
    }

    // Every condition must resolve before any run starts.
    std::vector<SimConfig> cfgs;
    for (const auto& c : spec.conditions) cfgs.push_back(resolve_config(base, spec, c));

    std::map<std::pair<std::string, std::uint64_t>, std::size_t> index;
    // Grid conditions first: baselines draw their turnover from them.
    for (int pass = 0; pass < 2; ++pass)
        for (std::size_t ci = 0; ci < spec.conditions.size(); ++ci) {
            const auto& c = spec.conditions[ci];
            if ((c.model == ModelKind::Grid) != (pass == 0)) continue;
            for (auto seed : spec.seeds) {
                RunRecord rec;
                if (c.model == ModelKind::Grid) {
                    rec = run_grid(spec.id, c.name, seed, cfgs[ci], master_seed);
                } else {
                    double turnover = std::max(0.0, cfgs[ci].baselines.turnover_prob);
                    bool ok = true;
                    if (c.matched_turnover || cfgs[ci].baselines.turnover_prob < 0.0) {
                        const std::string src = c.turnover_source;
                        auto it = index.find({src, seed});
                        ok = it != index.end() && br.records[it->second].error.empty();
                        if (ok) {
                            try {
                                turnover = calibrate_turnover(br.records[it->second].phase_metrics("operate").death_rate);
                            } catch (const Error& e) {
                                rec.error = e.what();
                                ok = false;
                            }
                        } else if (rec.error.empty()) {
                            rec.error = "turnover source '" + src + "' unavailable";
                        }
                    }
                    if (ok) {
                        rec = run_model(spec.id, c, seed, cfgs[ci], master_seed, turnover);
                    } else {
                        rec.block = spec.id;
                        rec.condition = c.name;
                        rec.seed = seed;
                        rec.config_hash = config_hash(cfgs[ci]);
                    }
                }
                index[{c.name, seed}] = br.records.size();
                br.records.push_back(std::move(rec));
            }
        }

    if (!spec.baseline_condition.empty()) {
        for (auto& rec : br.records) {
            if (rec.condition == spec.baseline_condition || !rec.error.empty()) continue;
            auto it = index.find({spec.baseline_condition, rec.seed});
            if (it == index.end() || !br.records[it->second].error.empty()) continue;
            const RunRecord& base_rec = br.records[it->second];
            int kk = cfgs[0].routing.k;
            for (std::size_t ci = 0; ci < spec.conditions.size(); ++ci)
                if (spec.conditions[ci].name == rec.condition) kk = cfgs[ci].routing.k;
            for (std::size_t p = 0; p < rec.phases.size() && p < base_rec.phases.size(); ++p)
                rec.phases[p].metrics.delta_r_vs_baseline =
                    rec.phases[p].metrics.r_mean - base_rec.phases[p].metrics.r_mean;
            rec.verdict = classify_operating_point(rec.final_metrics(), base_rec.final_metrics(), kk);
        }
    }

    // Canonical record order regardless of execution order.
    std::map<std::string, std::size_t> cond_pos;
    for (std::size_t i = 0; i < spec.conditions.size(); ++i) cond_pos[spec.conditions[i].name] = i;
    std::stable_sort(br.records.begin(), br.records.end(), [&](const RunRecord& a, const RunRecord& b) {
        if (cond_pos[a.condition] != cond_pos[b.condition]) return cond_pos[a.condition] < cond_pos[b.condition];
        return a.seed < b.seed;
    });

    Evaluator ev(spec, br.records, base, master_seed);
    for (const auto& c : spec.checks) br.checks.push_back(ev.eval(c));
    br.summary = summarize(br, base, master_seed);
    return br;
}

void emit_outputs(const std::vector<BlockResult>& results, std::uint64_t master_seed, const std::string& out_dir) {
    const fs::path root(out_dir);
    std::error_code ec;
    fs::create_directories(root / "plotdata", ec);
    if (ec) throw IoError("cannot create '" + (root / "plotdata").string() + "': " + ec.message());

    std::ostringstream runs;
    runs << "block,condition,seed,config_hash,phase,cycles,r_mean,mutual_information,content_mutual_information,"
            "firing_selectivity,silhouette,context_silhouette,delta_r,drift,death_rate,r_per_context,verdict,"
            "version,error\n";
    for (const auto& br : results)
        for (const auto& r : br.records) {
            auto prefix = [&]() {
                return csv_escape(r.block) + "," + csv_escape(r.condition) + "," + std::to_string(r.seed) + "," +
                       r.config_hash + ",";
            };
            if (!r.error.empty()) {
                runs << prefix() << ",,,,,,,,,,,," << to_string(r.verdict) << "," << r.version << ","
                     << csv_escape(r.error) << "\n";
                continue;
            }
            for (const auto& ph : r.phases) {
                const auto& m = ph.metrics;
                std::string per;
                for (std::size_t i = 0; i < m.r_per_context.size(); ++i)
                    per += (i ? ";" : "") + format_number(m.r_per_context[i]);
                runs << prefix() << to_string(ph.kind) << "," << ph.cycles << "," << format_number(m.r_mean) << ","
                     << format_number(m.mutual_information) << "," << format_number(m.content_mutual_information)
                     << "," << format_number(m.firing_selectivity) << "," << format_number(m.silhouette) << ","
                     << format_number(m.context_silhouette) << ","
                     << (m.delta_r_vs_baseline ? format_number(*m.delta_r_vs_baseline) : "") << ","
                     << format_number(m.drift_estimate) << "," << format_number(m.death_rate) << "," << per << ","
                     << to_string(r.verdict) << "," << r.version << ",\n";
            }
        }
    write_file(root / "runs.csv", runs.str());

    json summary = json::object();
    summary["version"] = kArtifactVersion;
    summary["master_seed"] = master_seed;
    json blocks = json::object();
    for (const auto& br : results) blocks[br.spec.id] = br.summary;
    summary["blocks"] = blocks;
    write_file(root / "summary.json", summary.dump(2) + "\n");

    for (const auto& br : results) {
        std::ostringstream pd;
        if (!br.spec.sweep.k_values.empty()) {
            pd << sweep_long_csv(br.sweep);
            write_file(root / "plotdata" / (br.spec.id + "_pivot.csv"), sweep_pivot_csv(br.sweep));
        } else {
            pd << "condition,seed,phase,metric,value\n";
            for (const auto& r : br.records) {
                if (!r.error.empty()) continue;
                for (const auto& ph : r.phases)
                    for (const auto& m : kSummaryMetrics)
                        pd << csv_escape(r.condition) << "," << r.seed << "," << to_string(ph.kind) << "," << m << ","
                           << format_number(metric_of(ph.metrics, m)) << "\n";
            }
        }
        write_file(root / "plotdata" / (br.spec.id + ".csv"), pd.str());
    }

    json manifest;
    manifest["version"] = kArtifactVersion;
    manifest["master_seed"] = master_seed;
    json blocks_m = json::object();
    std::size_t total = 0;
    for (const auto& br : results) {
        std::set<std::string> hashes;
        double wall = 0.0;
        for (const auto& r : br.records) {
            hashes.insert(r.config_hash);
            wall += r.wall_time;
        }
        std::vector<std::uint64_t> seeds = br.spec.seeds;
        blocks_m[br.spec.id] = {{"runs", br.records.size()},
                                {"seeds", seeds},
                                {"config_hashes", std::vector<std::string>(hashes.begin(), hashes.end())},
                                {"wall_time_s", wall}};
        total += br.records.size();
    }
    manifest["blocks"] = blocks_m;
    manifest["total_runs"] = total;
    write_file(root / "manifest.json", manifest.dump(2) + "\n");
}

}  // namespace dmgrid
