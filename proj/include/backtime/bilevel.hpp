#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "backtime/dataset.hpp"
#include "backtime/forecaster.hpp"
#include "backtime/generator.hpp"
#include "backtime/threat.hpp"

namespace backtime {

struct BilevelSchedule {
    int warmup_epochs = 5;
    int train_epochs = 10;
    double surrogate_lr = 2e-4;
    double generator_lr = 0.01;
    int batch_size = 64;
    uint64_t seed = 1;
    std::string checkpoint_dir;  // per-epoch surrogate/generator snapshots when set

    void validate() const;
};

/// Per-offset weights for the attack loss: (pattern_len - j) / pattern_len
/// for offset j past the planted timestamp. Offsets stop at
/// min(pattern_len, input_len - trigger_len) so every summed window still
/// contains the whole trigger; the zero-weight endpoint is dropped.
std::vector<double> attack_loss_weights(const AttackConfig& atk, const WindowSpec& window);

/// Plain recomputation of the attack loss on an already-poisoned matrix:
/// per planted timestamp, weighted MSE of the surrogate prediction against
/// the poisoned future, restricted to the target variables, averaged over
/// planted timestamps. Reference implementation for the tape path.
double attack_loss_value(const ForecastModel& surrogate, const Mat& poisoned_values,
                         const PoisonPlan& plan, const AttackConfig& atk,
                         const WindowSpec& window);

/// One surrogate epoch over every training window of the poisoned matrix.
/// Returns the epoch loss; never touches generator state.
double surrogate_step(ForecastModel& surrogate, Adam& opt, const Mat& poisoned_values,
                      const std::vector<int>& train_timestamps, const BilevelSchedule& sched,
                      Rng& rng);

struct GeneratorStepLosses {
    double l_atk = 0.0;
    double l_norm = 0.0;
    double l_tgr = 0.0;
};

/// Regenerates triggers with gradient tracking, re-injects them into the
/// clean matrix on-tape, evaluates l_tgr = l_atk + lambda * l_norm through
/// the frozen surrogate, and applies one optimizer step to the generator.
GeneratorStepLosses generator_step(TriggerGenerator& gen, Adam& gen_opt,
                                   const ForecastModel& surrogate, const Mat& clean_values,
                                   const PoisonPlan& plan, const TargetPattern& pattern,
                                   const AttackConfig& atk, const WindowSpec& window);

struct RegeneratedPoison {
    Mat values;
    Mat mask;
    std::map<int, Trigger> triggers;
};

/// Detached regeneration: walks the planted timestamps in ascending order,
/// generating each trigger from the evolving poisoned matrix and injecting
/// it in place.
RegeneratedPoison regenerate_poisoned(const TriggerGenerator& gen, const Mat& clean_values,
                                      const PoisonPlan& plan, const TargetPattern& pattern,
                                      const AttackConfig& atk);

struct BilevelLogEntry {
    int epoch = 0;
    double l_cln = 0.0;
    double l_atk = 0.0;
    double l_norm = 0.0;
    double l_tgr = 0.0;
};

struct BilevelResult {
    PoisonedDataset poisoned;
    TriggerGenerator generator;
    ForecastModel surrogate;
    std::map<int, double> surrogate_scores;
    std::vector<BilevelLogEntry> log;
};

/// The full attack pipeline: warm up the surrogate on clean data, score and
/// select timestamps, then alternate surrogate and generator epochs before a
/// final trigger regeneration. Deterministic given the schedule seed.
BilevelResult run_backtime(const MtsDataset& clean, Range train,
                           const std::vector<int>& targets, const AttackConfig& atk,
                           const GeneratorConfig& gcfg, const BilevelSchedule& sched,
                           const WindowSpec& window, const TargetPattern& pattern,
                           Arch surrogate_arch, int surrogate_hidden);

void save_bilevel_log(const std::vector<BilevelLogEntry>& log, const std::string& path);

}  // namespace backtime
