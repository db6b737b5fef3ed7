#pragma once

#include <string>
#include <vector>

#include "backtime/baselines.hpp"
#include "backtime/bilevel.hpp"
#include "backtime/config.hpp"
#include "backtime/eval.hpp"

namespace backtime {

/// Everything the poison stage produces: the standardized dataset, the split
/// geometry, and the finished attack.
struct AttackRun {
    MtsDataset clean_std;
    StandardizationStats stats;
    SplitRanges splits;
    std::vector<int> targets;
    TargetPattern pattern;
    BilevelResult attack;
};

/// Dataset construction, split, standardization, variable selection, and the
/// bi-level attack. Pure function of the config.
AttackRun run_poison_stage(const RunConfig& rc);

struct EvalRun {
    MetricsReport report;          // rows: clean, backtime, then any baselines
    StealthReport stealth;
    std::vector<int> attack_points;
    ForecastModel victim_backtime;
    Mat attacked_values;           // eval series with the learned triggers planted
};

/// Trains the victim pair (clean twin and poisoned twin from one init),
/// optionally the baseline victims, and evaluates MAE_C/RMSE_C on the clean
/// test split and MAE_A/RMSE_A on triggered inputs. The clean victim's
/// attack metrics use the BackTime inputs so the pair is comparable.
EvalRun run_eval_stage(const RunConfig& rc, const AttackRun& run, bool with_baselines);

ForecastModel train_victim(const RunConfig& rc, const Mat& values,
                           const std::vector<int>& train_ts, uint64_t seed,
                           Adam* opt_out = nullptr);

enum class SweepAxis { temporal_rate, spatial_rate };

SweepAxis sweep_axis_from_string(const std::string& s);
std::string sweep_axis_to_string(SweepAxis axis);

struct SweepRow {
    double value = 0.0;
    bool ok = false;
    std::string error;
    MetricsReport report;
};

struct SweepResult {
    SweepAxis axis = SweepAxis::temporal_rate;
    std::vector<SweepRow> rows;

    std::string table() const;
};

/// Runs the full pipeline once per axis value; failures are recorded in the
/// row and the sweep continues.
SweepResult ablation_sweep(SweepAxis axis, const std::vector<double>& values,
                           const RunConfig& base);

}  // namespace backtime
