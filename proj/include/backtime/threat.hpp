#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "backtime/dataset.hpp"
#include "backtime/matrix.hpp"

namespace backtime {

enum class EtaKind { identity };

/// The weighting function applied to the pattern proportion in the soft
/// identification weight. Must be monotone with eta(0)=0 and eta(1)=1.
double eta_apply(EtaKind kind, double x);

enum class PatternShape { cone, upward_trend, up_and_down, custom };

PatternShape pattern_shape_from_string(const std::string& s);
std::string pattern_shape_to_string(PatternShape shape);

/// All attacker hyperparameters. Budgets are in standardized units.
struct AttackConfig {
    int trigger_len = 4;      // history steps rewritten per poisoned timestamp
    int pattern_len = 7;      // future steps rewritten per poisoned timestamp
    int pre_window = 6;       // history slab length fed to the trigger generator
    double temporal_rate = 0.03;
    double spatial_rate = 0.3;
    double trigger_budget = 0.2;
    double pattern_budget = 0.4;
    double norm_weight = 2000.0;
    int freq_keep = 200;
    EtaKind eta = EtaKind::identity;

    /// Minimum gap between poisoned timestamps so trigger/pattern regions
    /// never overlap.
    int spacing() const { return trigger_len + pattern_len; }
    void validate(const WindowSpec& window) const;
};

/// Length-pattern_len relative offsets added on top of the base value.
struct TargetPattern {
    std::vector<double> values;
    PatternShape shape = PatternShape::custom;

    /// Throws when ||p||_inf exceeds the pattern budget.
    static TargetPattern checked(std::vector<double> values, PatternShape shape,
                                 const AttackConfig& cfg);
};

/// Builds one of the named shapes scaled to the configured pattern budget.
TargetPattern make_pattern(PatternShape shape, const AttackConfig& cfg);

/// trigger_len x |S| relative offsets.
struct Trigger {
    Mat values;
};

struct PoisonPlan {
    std::vector<int> timestamps;        // sorted ascending
    std::vector<int> target_variables;  // sorted ascending
    bool shortfall = false;             // spacing made the quota unreachable

    void validate(const AttackConfig& cfg, int train_end, int num_variables) const;
};

struct PoisonedDataset {
    MtsDataset data;
    Mat mask;  // 1.0 exactly on rewritten cells
    PoisonPlan plan;
};

struct BudgetReport {
    double trigger_max_abs = 0.0;
    double pattern_max_abs = 0.0;
    bool trigger_ok = true;
    bool pattern_ok = true;
    int trigger_offender_row = -1;
    int trigger_offender_col = -1;
    int pattern_offender = -1;
    bool ok() const { return trigger_ok && pattern_ok; }
    std::string describe() const;
};

struct TimestampSelection {
    std::vector<int> timestamps;
    bool shortfall = false;
};

/// Greedy pick of the ceil(temporal_rate * |candidates|) highest-error
/// timestamps, skipping any candidate closer than cfg.spacing() to an
/// accepted one. Ties break toward the smaller timestamp. Candidates are the
/// map keys that can legally host an injection inside [train.begin, train.end).
TimestampSelection select_timestamps(const std::map<int, double>& surrogate_errors,
                                     const AttackConfig& cfg, const Range& train);

enum class VariableMode { given, random };

/// mode=given validates `given` against the spatial rate; mode=random samples
/// ceil(spatial_rate * N) variables uniformly without replacement.
std::vector<int> select_variables(const MtsDataset& ds, const AttackConfig& cfg,
                                  VariableMode mode, std::uint64_t seed,
                                  const std::vector<int>& given = {});

/// Lowest timestamp at which an injection is legal: the base row
/// t - trigger_len - 1 and the generator slab must exist.
int min_poison_timestamp(const AttackConfig& cfg);

/// In-place broadcast injection at timestamp t:
///   b            = values[t - trigger_len - 1, S]
///   history rows [t - trigger_len, t)   at S <- b + g
///   future  rows [t, t + pattern_len)   at S <- b + p
/// mask is set to 1 on every rewritten cell.
void inject(Mat& values, Mat& mask, int t, const std::vector<int>& target_variables,
            const Trigger& trigger, const TargetPattern& pattern, const AttackConfig& cfg);

/// Soft identification weight of the window at t_i against the plan:
/// eta(pattern steps in future / pattern_len) when some planted trigger lies
/// fully inside the history window, else 0.
double soft_identification(int t_i, const PoisonPlan& plan, const AttackConfig& cfg,
                           const WindowSpec& spec);

BudgetReport check_budgets(const Mat& trigger, const std::vector<double>& pattern,
                           const AttackConfig& cfg);

/// Applies inject at every planned timestamp (ascending) on a copy of the
/// clean values. `triggers` must hold one entry per planned timestamp.
PoisonedDataset build_poisoned_dataset(const MtsDataset& clean, const PoisonPlan& plan,
                                       const std::map<int, Trigger>& triggers,
                                       const TargetPattern& pattern, const AttackConfig& cfg);

}  // namespace backtime
