#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "backtime/baselines.hpp"
#include "backtime/bilevel.hpp"
#include "backtime/dataset.hpp"
#include "backtime/forecaster.hpp"
#include "backtime/generator.hpp"
#include "backtime/threat.hpp"

namespace backtime {

struct DatasetConfig {
    std::string kind = "synthetic";  // synthetic | csv
    std::string path;                // csv only
    SyntheticSpec synthetic;
    uint64_t seed = 7;
};

struct VictimConfig {
    Arch arch = Arch::mlp;
    int hidden = 64;
    int epochs = 30;
    double lr = 2e-4;
    int batch_size = 64;
};

struct EvalConfig {
    int num_attack_points = 20;
    int stealth_hidden = 32;
    int stealth_epochs = 10;
};

struct ScheduleConfig {
    BilevelSchedule bilevel;
    Arch surrogate_arch = Arch::tiny_attention;
    int surrogate_hidden = 64;
};

/// Everything one run needs, mirroring the JSON config file section for
/// section. CLI --set overrides edit the JSON before parsing.
struct RunConfig {
    DatasetConfig dataset;
    WindowSpec window;
    SplitSpec split;
    AttackConfig attack;
    PatternShape pattern_shape = PatternShape::cone;
    VariableMode variable_mode = VariableMode::random;
    std::vector<int> variables;  // used when variable_mode == given
    GeneratorConfig generator;
    ScheduleConfig schedule;
    VictimConfig victim;
    EvalConfig eval;
    uint64_t seed = 1;
};

RunConfig config_from_json(const std::string& text);
RunConfig load_config(const std::string& path);
std::string config_to_json(const RunConfig& rc);

/// Applies one dotted-path override (e.g. "attack.temporal_rate=0.05") to a
/// JSON config text. Values parse as JSON when possible, else as strings.
std::string apply_override(const std::string& json_text, const std::string& assignment);

/// FNV-1a hash of the canonical config serialization, as fixed-width hex.
std::string config_hash(const RunConfig& rc);

}  // namespace backtime
