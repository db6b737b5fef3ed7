#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "backtime/dataset.hpp"
#include "backtime/forecaster.hpp"
#include "backtime/threat.hpp"

namespace backtime {

/// Mean absolute error of predictions against the stored future rows over
/// the given windows, all variables.
double windows_mae(const ForecastModel& model, const Mat& values, const std::vector<int>& ts);

/// (MAE, RMSE) against ground truth over clean test windows, all variables.
std::pair<double, double> evaluate_clean(const ForecastModel& model, const Mat& values,
                                         const std::vector<int>& test_ts);

/// Produces the trigger to plant at timestamp t given the generator history
/// slab (pre_window x |S|) read from the current poisoned-input view.
using TriggerSource = std::function<Trigger(int t, const Mat& slab)>;

struct AttackEvalInputs {
    std::vector<int> points;  // ascending attack timestamps in the test range
    Mat values;               // copy of the series with triggers in history only
};

/// Chooses spaced attack points in the test range and plants a trigger in
/// each point's history. Futures stay clean; predictions are judged against
/// base + pattern instead.
AttackEvalInputs prepare_attack_inputs(const Mat& values, Range test,
                                       const std::vector<int>& targets, const AttackConfig& cfg,
                                       const WindowSpec& window, const TriggerSource& source,
                                       int num_points, uint64_t seed);

/// (MAE_A, RMSE_A): prediction rows [t, t + pattern_len) at the target
/// variables against base + pattern, averaged over attack points.
std::pair<double, double> evaluate_attack(const ForecastModel& model,
                                          const AttackEvalInputs& inputs,
                                          const std::vector<int>& targets,
                                          const TargetPattern& pattern, const AttackConfig& cfg,
                                          const WindowSpec& window);

struct MetricsRow {
    std::string model;
    double mae_c = 0.0;
    double rmse_c = 0.0;
    double mae_a = 0.0;
    double rmse_a = 0.0;
};

struct MetricsReport {
    std::vector<MetricsRow> rows;
    uint64_t seed = 0;
    std::string config_hash;

    MetricsRow averaged() const;
    std::string table() const;
};

void save_metrics_jsonl(const MetricsReport& report, const std::string& path);
MetricsReport load_metrics_jsonl(const std::string& path);

/// Rank-statistic AUC (average ranks on ties). Labels are 0/1; both classes
/// must be present.
double auc_score(const std::vector<double>& scores, const std::vector<int>& labels);

struct F1Result {
    double f1 = 0.0;
    double threshold = 0.0;
};

/// Best F1 over thresholds of the form "score >= threshold is positive".
F1Result best_f1(const std::vector<double>& scores, const std::vector<int>& labels);

/// Spearman rank correlation (average ranks on ties); 0 when either side has
/// no rank variance.
double spearman(const std::vector<double>& a, const std::vector<double>& b);

struct StealthReport {
    double auc = 0.0;
    double f1 = 0.0;
    double threshold = 0.0;
    std::string detector;
};

/// Residual detector: a small forecaster fit on the clean test split scores
/// every training timestep by its one-step prediction error; AUC/F1 against
/// the per-timestep any-poisoned mask label.
StealthReport stealth_eval(const Mat& poisoned_values, const Mat& mask, Range train, Range test,
                           const WindowSpec& window, int hidden, int epochs, uint64_t seed);

struct VulnerabilityGroup {
    double percentile = 0.0;
    double mae_clean = 0.0;     // mean clean-model MAE of the group's windows
    double mae_attacked = 0.0;  // attacked model on the group's poisoned windows
    double mae_reference = 0.0; // clean model on the same poisoned windows
    double mae_diff = 0.0;      // attacked - reference
    int group_size = 0;
};

struct VulnerabilityResult {
    std::vector<VulnerabilityGroup> groups;
    double spearman_corr = 0.0;
};

struct VulnerabilityConfig {
    int num_groups = 10;
    int epochs = 8;
    int hidden = 32;
    Arch arch = Arch::mlp;
    double lr = 2e-3;
    int batch_size = 64;
    std::vector<double> trigger_profile = {-0.05, 0.05, -0.05, 0.05};
    bool reuse_clean_model = false;  // score groups with the clean model instead of retraining
};

/// Orders training windows by clean-model MAE, poisons each percentile group
/// with the fixed trigger profile on every variable, retrains per group, and
/// reports the fit gap on poisoned windows per group.
VulnerabilityResult vulnerability_experiment(const Mat& values, Range train,
                                             const WindowSpec& window, const AttackConfig& cfg,
                                             const TargetPattern& pattern,
                                             const VulnerabilityConfig& vcfg, uint64_t seed);

}  // namespace backtime
