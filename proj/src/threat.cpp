#include "backtime/threat.hpp"

#include <algorithm>
#include <cmath>

#include "backtime/error.hpp"
#include "backtime/rng.hpp"

namespace backtime {

double eta_apply(EtaKind kind, double x) {
    switch (kind) {
        case EtaKind::identity:
            return x;
    }
    throw Error(ErrorKind::config, "eta_apply: unknown eta kind");
}

PatternShape pattern_shape_from_string(const std::string& s) {
    if (s == "cone") return PatternShape::cone;
    if (s == "upward_trend") return PatternShape::upward_trend;
    if (s == "up_and_down") return PatternShape::up_and_down;
    if (s == "custom") return PatternShape::custom;
    throw Error(ErrorKind::config, "unknown pattern shape '" + s + "'");
}

std::string pattern_shape_to_string(PatternShape shape) {
    switch (shape) {
        case PatternShape::cone: return "cone";
        case PatternShape::upward_trend: return "upward_trend";
        case PatternShape::up_and_down: return "up_and_down";
        case PatternShape::custom: return "custom";
    }
    return "custom";
}

void AttackConfig::validate(const WindowSpec& window) const {
    window.validate();
    if (trigger_len < 1 || pattern_len < 1 || pre_window < 0)
        throw Error(ErrorKind::config, "attack config: trigger_len/pattern_len >= 1, pre_window >= 0");
    if (trigger_budget <= 0.0 || pattern_budget <= 0.0)
        throw Error(ErrorKind::config, "attack config: budgets must be positive");
    if (temporal_rate <= 0.0 || temporal_rate >= 1.0)
        throw Error(ErrorKind::config, "attack config: temporal_rate must lie in (0,1)");
    if (spatial_rate <= 0.0 || spatial_rate > 1.0)
        throw Error(ErrorKind::config, "attack config: spatial_rate must lie in (0,1]");
    if (norm_weight < 0.0)
        throw Error(ErrorKind::config, "attack config: norm_weight must be >= 0");
    if (freq_keep < 1)
        throw Error(ErrorKind::config, "attack config: freq_keep must be >= 1");
    if (window.input_len - trigger_len < 0)
        throw Error(ErrorKind::config, "attack config: trigger does not fit inside input windows");
}

TargetPattern TargetPattern::checked(std::vector<double> values, PatternShape shape,
                                     const AttackConfig& cfg) {
    if (static_cast<int>(values.size()) != cfg.pattern_len)
        throw Error(ErrorKind::shape, "target pattern: length " + std::to_string(values.size()) +
                                          " != pattern_len " + std::to_string(cfg.pattern_len));
    for (size_t i = 0; i < values.size(); ++i)
        if (std::abs(values[i]) > cfg.pattern_budget)
            throw Error(ErrorKind::config,
                        "target pattern: |p[" + std::to_string(i) + "]| exceeds the budget");
    TargetPattern p;
    p.values = std::move(values);
    p.shape = shape;
    return p;
}

TargetPattern make_pattern(PatternShape shape, const AttackConfig& cfg) {
    const int n = cfg.pattern_len;
    const double amp = cfg.pattern_budget;
    std::vector<double> v(n);
    switch (shape) {
        case PatternShape::cone:
            // Rises to the budget mid-way and returns to the start level.
            for (int i = 0; i < n; ++i) {
                const double x = n == 1 ? 0.0 : static_cast<double>(i) / (n - 1);
                v[i] = amp * std::sin(3.14159265358979323846 * x);
            }
            break;
        case PatternShape::upward_trend:
            for (int i = 0; i < n; ++i)
                v[i] = n == 1 ? amp : amp * (static_cast<double>(i) / (n - 1));
            break;
        case PatternShape::up_and_down:
            // Peaks early, ends below the start level.
            for (int i = 0; i < n; ++i) {
                const double x = n == 1 ? 0.0 : static_cast<double>(i) / (n - 1);
                v[i] = amp * std::sin(4.71238898038468986 * x) * (x < 2.0 / 3.0 ? 1.0 : 0.75);
            }
            break;
        case PatternShape::custom:
            throw Error(ErrorKind::config, "make_pattern: custom patterns need explicit values");
    }
    return TargetPattern::checked(std::move(v), shape, cfg);
}

int min_poison_timestamp(const AttackConfig& cfg) {
    return std::max(cfg.pre_window + cfg.trigger_len, cfg.trigger_len + 1);
}

void PoisonPlan::validate(const AttackConfig& cfg, int train_end, int num_variables) const {
    const int lo = min_poison_timestamp(cfg);
    const int hi = train_end - cfg.pattern_len;
    int prev = -1;
    for (size_t i = 0; i < timestamps.size(); ++i) {
        const int t = timestamps[i];
        if (t < lo || t > hi)
            throw Error(ErrorKind::boundary, "poison plan: timestamp " + std::to_string(t) +
                                                 " outside [" + std::to_string(lo) + ", " +
                                                 std::to_string(hi) + "]");
        if (prev >= 0 && t - prev < cfg.spacing())
            throw Error(ErrorKind::boundary,
                        "poison plan: timestamps " + std::to_string(prev) + " and " +
                            std::to_string(t) + " closer than spacing " +
                            std::to_string(cfg.spacing()));
        prev = t;
    }
    if (target_variables.empty())
        throw Error(ErrorKind::config, "poison plan: no target variables");
    for (int v : target_variables)
        if (v < 0 || v >= num_variables)
            throw Error(ErrorKind::boundary,
                        "poison plan: variable index " + std::to_string(v) + " out of range");
    for (size_t i = 1; i < target_variables.size(); ++i)
        if (target_variables[i] <= target_variables[i - 1])
            throw Error(ErrorKind::config, "poison plan: variables must be sorted and unique");
    const double ratio = static_cast<double>(target_variables.size()) / num_variables;
    if (ratio + 1e-12 < cfg.spatial_rate)
        throw Error(ErrorKind::config, "poison plan: |S|/N = " + std::to_string(ratio) +
                                           " below spatial rate " + std::to_string(cfg.spatial_rate));
}

std::string BudgetReport::describe() const {
    std::string s = "trigger max|.|=" + std::to_string(trigger_max_abs) +
                    (trigger_ok ? " (ok)" : " (violates budget at [" +
                                                std::to_string(trigger_offender_row) + "," +
                                                std::to_string(trigger_offender_col) + "])");
    s += "; pattern max|.|=" + std::to_string(pattern_max_abs) +
         (pattern_ok ? " (ok)" : " (violates budget at [" + std::to_string(pattern_offender) + "])");
    return s;
}

TimestampSelection select_timestamps(const std::map<int, double>& surrogate_errors,
                                     const AttackConfig& cfg, const Range& train) {
    const int lo = std::max(train.begin + min_poison_timestamp(cfg), min_poison_timestamp(cfg));
    const int hi = train.end - cfg.pattern_len;

    // Candidates: map keys that can legally host an injection.
    std::vector<std::pair<int, double>> candidates;
    for (const auto& [t, err] : surrogate_errors)
        if (t >= lo && t <= hi) candidates.emplace_back(t, err);
    if (candidates.empty())
        throw Error(ErrorKind::boundary, "select_timestamps: no candidate timestamps in range");

    const int quota = static_cast<int>(
        std::ceil(cfg.temporal_rate * static_cast<double>(candidates.size())));

    // Descending error; ties toward the smaller timestamp.
    std::stable_sort(candidates.begin(), candidates.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });

    std::vector<int> accepted;
    for (const auto& [t, err] : candidates) {
        if (static_cast<int>(accepted.size()) >= quota) break;
        bool feasible = true;
        for (int a : accepted)
            if (std::abs(t - a) < cfg.spacing()) {
                feasible = false;
                break;
            }
        if (feasible) accepted.push_back(t);
    }

    TimestampSelection sel;
    sel.timestamps = std::move(accepted);
    std::sort(sel.timestamps.begin(), sel.timestamps.end());
    sel.shortfall = static_cast<int>(sel.timestamps.size()) < quota;
    if (sel.shortfall)
        log::notice("select_timestamps: spacing allows only " +
                    std::to_string(sel.timestamps.size()) + " of " + std::to_string(quota) +
                    " requested timestamps");
    return sel;
}

std::vector<int> select_variables(const MtsDataset& ds, const AttackConfig& cfg,
                                  VariableMode mode, std::uint64_t seed,
                                  const std::vector<int>& given) {
    const int N = ds.num_variables();
    const int need = static_cast<int>(std::ceil(cfg.spatial_rate * N));
    if (need > N)
        throw Error(ErrorKind::config, "select_variables: quota exceeds variable count");

    if (mode == VariableMode::given) {
        std::vector<int> s = given;
        std::sort(s.begin(), s.end());
        s.erase(std::unique(s.begin(), s.end()), s.end());
        if (s.size() != given.size())
            throw Error(ErrorKind::config, "select_variables: duplicate variable indices");
        for (int v : s)
            if (v < 0 || v >= N)
                throw Error(ErrorKind::boundary,
                            "select_variables: index " + std::to_string(v) + " out of range");
        if (static_cast<double>(s.size()) / N + 1e-12 < cfg.spatial_rate)
            throw Error(ErrorKind::config,
                        "select_variables: " + std::to_string(s.size()) + "/" + std::to_string(N) +
                            " variables violates spatial rate " + std::to_string(cfg.spatial_rate));
        return s;
    }

    // Seeded Fisher-Yates prefix.
    std::vector<int> all(N);
    for (int i = 0; i < N; ++i) all[i] = i;
    Rng rng(seed);
    for (int i = 0; i < need; ++i) {
        const int j = i + rng.uniform_int(N - i);
        std::swap(all[i], all[j]);
    }
    std::vector<int> s(all.begin(), all.begin() + need);
    std::sort(s.begin(), s.end());
    return s;
}

void inject(Mat& values, Mat& mask, int t, const std::vector<int>& target_variables,
            const Trigger& trigger, const TargetPattern& pattern, const AttackConfig& cfg) {
    const int S = static_cast<int>(target_variables.size());
    if (trigger.values.rows() != cfg.trigger_len || trigger.values.cols() != S)
        throw Error(ErrorKind::shape, "inject: trigger shape does not match trigger_len x |S|");
    if (static_cast<int>(pattern.values.size()) != cfg.pattern_len)
        throw Error(ErrorKind::shape, "inject: pattern length does not match pattern_len");
    if (t - cfg.trigger_len - 1 < 0 || t + cfg.pattern_len > values.rows())
        throw Error(ErrorKind::boundary,
                    "inject: timestamp " + std::to_string(t) + " leaves the value matrix");
    if (!mask.same_shape(values))
        throw Error(ErrorKind::shape, "inject: mask shape does not match values");
    for (int v : target_variables)
        if (v < 0 || v >= values.cols())
            throw Error(ErrorKind::boundary,
                        "inject: variable index " + std::to_string(v) + " out of range");

    for (int c = 0; c < S; ++c) {
        const int var = target_variables[c];
        const double base = values(t - cfg.trigger_len - 1, var);
        for (int j = 0; j < cfg.trigger_len; ++j) {
            values(t - cfg.trigger_len + j, var) = base + trigger.values(j, c);
            mask(t - cfg.trigger_len + j, var) = 1.0;
        }
        for (int j = 0; j < cfg.pattern_len; ++j) {
            values(t + j, var) = base + pattern.values[j];
            mask(t + j, var) = 1.0;
        }
    }
}

double soft_identification(int t_i, const PoisonPlan& plan, const AttackConfig& cfg,
                           const WindowSpec& spec) {
    // At most one trigger fits fully inside a history window because planned
    // timestamps are spaced by trigger_len + pattern_len.
    for (int t : plan.timestamps) {
        const bool full_trigger = (t - cfg.trigger_len >= t_i - spec.input_len) && (t <= t_i);
        if (!full_trigger) continue;
        const int future_end = t_i + spec.output_len;
        const int overlap =
            std::min(t + cfg.pattern_len, future_end) - std::max(t, t_i);
        const int steps = std::clamp(overlap, 0, cfg.pattern_len);
        return eta_apply(cfg.eta, static_cast<double>(steps) / cfg.pattern_len);
    }
    return 0.0;
}

BudgetReport check_budgets(const Mat& trigger, const std::vector<double>& pattern,
                           const AttackConfig& cfg) {
    BudgetReport rep;
    for (int r = 0; r < trigger.rows(); ++r)
        for (int c = 0; c < trigger.cols(); ++c) {
            const double a = std::abs(trigger(r, c));
            if (a > rep.trigger_max_abs) {
                rep.trigger_max_abs = a;
                if (a > cfg.trigger_budget) {
                    rep.trigger_offender_row = r;
                    rep.trigger_offender_col = c;
                }
            }
        }
    rep.trigger_ok = rep.trigger_max_abs <= cfg.trigger_budget;
    for (size_t i = 0; i < pattern.size(); ++i) {
        const double a = std::abs(pattern[i]);
        if (a > rep.pattern_max_abs) {
            rep.pattern_max_abs = a;
            if (a > cfg.pattern_budget) rep.pattern_offender = static_cast<int>(i);
        }
    }
    rep.pattern_ok = rep.pattern_max_abs <= cfg.pattern_budget;
    return rep;
}

PoisonedDataset build_poisoned_dataset(const MtsDataset& clean, const PoisonPlan& plan,
                                       const std::map<int, Trigger>& triggers,
                                       const TargetPattern& pattern, const AttackConfig& cfg) {
    for (int t : plan.timestamps)
        if (!triggers.count(t))
            throw Error(ErrorKind::config,
                        "build_poisoned_dataset: no trigger for timestamp " + std::to_string(t));

    PoisonedDataset out;
    out.data = clean;
    out.mask = Mat(clean.time_span(), clean.num_variables());
    out.plan = plan;
    for (int t : plan.timestamps)
        inject(out.data.values, out.mask, t, plan.target_variables, triggers.at(t), pattern, cfg);
    return out;
}

}  // namespace backtime
