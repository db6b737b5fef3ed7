#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "backtime/dataset.hpp"
#include "backtime/forecaster.hpp"
#include "backtime/threat.hpp"

namespace backtime {

enum class BaselineKind { random, inverse, manhattan };

BaselineKind baseline_from_string(const std::string& s);
std::string baseline_to_string(BaselineKind k);

struct RandomBaseline {
    Trigger trigger;                // one draw, reused at every timestamp
    std::vector<int> timestamps;    // uniformly chosen, spacing respected
    bool shortfall = false;
};

/// Uniform(-trigger_budget, trigger_budget) trigger plus a random timestamp
/// selection under the same quota/spacing rules as the learned attack.
RandomBaseline random_baseline(const AttackConfig& cfg, int num_targets, Range train,
                               const WindowSpec& window, uint64_t seed);

/// Trains a forecaster on the time-reversed training series and asks it to
/// "predict" the steps that precede the target pattern; those steps, flipped
/// back, are the trigger. May exceed the trigger budget (reported upstream,
/// not enforced).
Trigger inverse_trigger(const Mat& train_values, const std::vector<int>& targets,
                        const TargetPattern& pattern, const AttackConfig& cfg,
                        const WindowSpec& window, uint64_t seed, int epochs = 15);

struct ManhattanResult {
    Trigger trigger;
    std::vector<int> segment_starts;  // chosen pattern-segment start per target variable
    std::vector<double> distances;    // winning Manhattan distance per target variable
};

/// Per-variable scan of the training range for the length-pattern_len segment
/// closest (L1) to base + pattern; the steps preceding the winning segment,
/// taken relative to its base value, become that variable's trigger column.
/// Ties break toward the earliest segment. Budget violations are reported,
/// not enforced.
ManhattanResult manhattan_trigger(const Mat& train_values, const std::vector<int>& targets,
                                  const TargetPattern& pattern, const AttackConfig& cfg,
                                  Range train);

}  // namespace backtime
