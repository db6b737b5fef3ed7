#include "backtime/config.hpp"

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

#include "backtime/error.hpp"

namespace backtime {

namespace {

using nlohmann::json;

/// Collects every complaint before failing, so a bad config reports all of
/// its problems at once.
class Checker {
public:
    explicit Checker(const json& root) : root_(root) {}

    const json* section(const std::string& name, std::initializer_list<const char*> allowed) {
        if (!root_.contains(name)) return nullptr;
        const json& s = root_.at(name);
        if (!s.is_object()) {
            complain(name + ": must be an object");
            return nullptr;
        }
        std::set<std::string> ok(allowed.begin(), allowed.end());
        for (auto it = s.begin(); it != s.end(); ++it) {
            if (!ok.count(it.key())) complain(name + "." + it.key() + ": unknown key");
        }
        return &s;
    }

    void check_top_level(std::initializer_list<const char*> allowed) {
        std::set<std::string> ok(allowed.begin(), allowed.end());
        for (auto it = root_.begin(); it != root_.end(); ++it) {
            if (!ok.count(it.key())) complain(it.key() + ": unknown section");
        }
    }

    template <typename T>
    void read(const json* s, const std::string& section, const char* key, T& out) {
        if (s == nullptr || !s->contains(key)) return;
        try {
            out = s->at(key).get<T>();
        } catch (const std::exception&) {
            complain(section + "." + std::string(key) + ": wrong type");
        }
    }

    void complain(const std::string& msg) { complaints_.push_back(msg); }

    void require(bool ok, const std::string& msg) {
        if (!ok) complain(msg);
    }

    void finish() const {
        if (complaints_.empty()) return;
        std::string joined = "invalid config:";
        for (const std::string& c : complaints_) joined += "\n  - " + c;
        throw Error(ErrorKind::config, joined);
    }

private:
    const json& root_;
    std::vector<std::string> complaints_;
};

}  // namespace

RunConfig config_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const std::exception& e) {
        throw Error(ErrorKind::parse, std::string("config is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw Error(ErrorKind::parse, "config root must be a JSON object");

    RunConfig rc;
    Checker ck(j);
    ck.check_top_level({"dataset", "window", "split", "attack", "generator", "schedule",
                        "victim", "eval", "seed"});

    const json* ds = ck.section("dataset", {"kind", "path", "num_variables", "time_span",
                                            "period_a", "period_b", "amplitude_a", "amplitude_b",
                                            "mixing", "noise", "seed"});
    ck.read(ds, "dataset", "kind", rc.dataset.kind);
    ck.read(ds, "dataset", "path", rc.dataset.path);
    ck.read(ds, "dataset", "num_variables", rc.dataset.synthetic.num_variables);
    ck.read(ds, "dataset", "time_span", rc.dataset.synthetic.time_span);
    ck.read(ds, "dataset", "period_a", rc.dataset.synthetic.period_a);
    ck.read(ds, "dataset", "period_b", rc.dataset.synthetic.period_b);
    ck.read(ds, "dataset", "amplitude_a", rc.dataset.synthetic.amplitude_a);
    ck.read(ds, "dataset", "amplitude_b", rc.dataset.synthetic.amplitude_b);
    ck.read(ds, "dataset", "mixing", rc.dataset.synthetic.mixing);
    ck.read(ds, "dataset", "noise", rc.dataset.synthetic.noise);
    ck.read(ds, "dataset", "seed", rc.dataset.seed);
    ck.require(rc.dataset.kind == "synthetic" || rc.dataset.kind == "csv",
               "dataset.kind: must be 'synthetic' or 'csv'");
    ck.require(rc.dataset.kind != "csv" || !rc.dataset.path.empty(),
               "dataset.path: required when dataset.kind is 'csv'");
    ck.require(rc.dataset.synthetic.num_variables >= 2,
               "dataset.num_variables: must be at least 2");
    ck.require(rc.dataset.synthetic.time_span >= 32, "dataset.time_span: must be at least 32");
    ck.require(rc.dataset.synthetic.noise >= 0.0, "dataset.noise: must be nonnegative");
    ck.require(rc.dataset.synthetic.mixing >= 0.0 && rc.dataset.synthetic.mixing < 1.0,
               "dataset.mixing: must lie in [0, 1)");
    ck.require(rc.dataset.synthetic.period_a > 1.0 && rc.dataset.synthetic.period_b > 1.0,
               "dataset.period_a/period_b: must exceed 1");

    const json* win = ck.section("window", {"input_len", "output_len"});
    ck.read(win, "window", "input_len", rc.window.input_len);
    ck.read(win, "window", "output_len", rc.window.output_len);
    ck.require(rc.window.input_len >= 1, "window.input_len: must be positive");
    ck.require(rc.window.output_len >= 1, "window.output_len: must be positive");

    const json* sp = ck.section("split", {"train", "val", "test"});
    ck.read(sp, "split", "train", rc.split.train_frac);
    ck.read(sp, "split", "val", rc.split.val_frac);
    ck.read(sp, "split", "test", rc.split.test_frac);
    ck.require(rc.split.train_frac > 0.0 && rc.split.val_frac > 0.0 && rc.split.test_frac > 0.0,
               "split: all fractions must be positive");
    double frac_sum = rc.split.train_frac + rc.split.val_frac + rc.split.test_frac;
    ck.require(std::fabs(frac_sum - 1.0) < 1e-9, "split: fractions must sum to 1");

    const json* atk = ck.section("attack", {"trigger_len", "pattern_len", "pre_window",
                                            "temporal_rate", "spatial_rate", "trigger_budget",
                                            "pattern_budget", "norm_weight", "freq_keep",
                                            "pattern_shape", "variable_mode", "variables"});
    ck.read(atk, "attack", "trigger_len", rc.attack.trigger_len);
    ck.read(atk, "attack", "pattern_len", rc.attack.pattern_len);
    ck.read(atk, "attack", "pre_window", rc.attack.pre_window);
    ck.read(atk, "attack", "temporal_rate", rc.attack.temporal_rate);
    ck.read(atk, "attack", "spatial_rate", rc.attack.spatial_rate);
    ck.read(atk, "attack", "trigger_budget", rc.attack.trigger_budget);
    ck.read(atk, "attack", "pattern_budget", rc.attack.pattern_budget);
    ck.read(atk, "attack", "norm_weight", rc.attack.norm_weight);
    ck.read(atk, "attack", "freq_keep", rc.attack.freq_keep);
    std::string shape = pattern_shape_to_string(rc.pattern_shape);
    ck.read(atk, "attack", "pattern_shape", shape);
    try {
        rc.pattern_shape = pattern_shape_from_string(shape);
    } catch (const Error&) {
        ck.complain("attack.pattern_shape: unknown shape '" + shape + "'");
    }
    std::string vmode = rc.variable_mode == VariableMode::given ? "given" : "random";
    ck.read(atk, "attack", "variable_mode", vmode);
    if (vmode == "given") rc.variable_mode = VariableMode::given;
    else if (vmode == "random") rc.variable_mode = VariableMode::random;
    else ck.complain("attack.variable_mode: must be 'given' or 'random'");
    ck.read(atk, "attack", "variables", rc.variables);
    ck.require(rc.attack.trigger_len >= 1, "attack.trigger_len: must be positive");
    ck.require(rc.attack.pattern_len >= 1, "attack.pattern_len: must be positive");
    ck.require(rc.attack.pre_window >= 1, "attack.pre_window: must be positive");
    ck.require(rc.attack.temporal_rate > 0.0 && rc.attack.temporal_rate <= 1.0,
               "attack.temporal_rate: must lie in (0, 1]");
    ck.require(rc.attack.spatial_rate > 0.0 && rc.attack.spatial_rate <= 1.0,
               "attack.spatial_rate: must lie in (0, 1]");
    ck.require(rc.attack.trigger_budget > 0.0, "attack.trigger_budget: must be positive");
    ck.require(rc.attack.pattern_budget > 0.0, "attack.pattern_budget: must be positive");
    ck.require(rc.attack.norm_weight >= 0.0, "attack.norm_weight: must be nonnegative");
    ck.require(rc.attack.freq_keep >= 1, "attack.freq_keep: must be positive");
    ck.require(rc.attack.trigger_len < rc.window.input_len,
               "attack.trigger_len: must be smaller than window.input_len");
    ck.require(rc.attack.pattern_len <= rc.window.output_len,
               "attack.pattern_len: must not exceed window.output_len");

    const json* gen = ck.section("generator", {"hidden", "embed_dim"});
    ck.read(gen, "generator", "hidden", rc.generator.hidden);
    ck.read(gen, "generator", "embed_dim", rc.generator.embed_dim);
    ck.require(rc.generator.hidden >= 1, "generator.hidden: must be positive");
    ck.require(rc.generator.embed_dim >= 1, "generator.embed_dim: must be positive");

    const json* sch = ck.section("schedule", {"warmup_epochs", "train_epochs", "surrogate_lr",
                                              "generator_lr", "batch_size", "surrogate_arch",
                                              "surrogate_hidden", "checkpoint_dir"});
    ck.read(sch, "schedule", "warmup_epochs", rc.schedule.bilevel.warmup_epochs);
    ck.read(sch, "schedule", "train_epochs", rc.schedule.bilevel.train_epochs);
    ck.read(sch, "schedule", "surrogate_lr", rc.schedule.bilevel.surrogate_lr);
    ck.read(sch, "schedule", "generator_lr", rc.schedule.bilevel.generator_lr);
    ck.read(sch, "schedule", "batch_size", rc.schedule.bilevel.batch_size);
    ck.read(sch, "schedule", "checkpoint_dir", rc.schedule.bilevel.checkpoint_dir);
    std::string sarch = arch_to_string(rc.schedule.surrogate_arch);
    ck.read(sch, "schedule", "surrogate_arch", sarch);
    try {
        rc.schedule.surrogate_arch = arch_from_string(sarch);
    } catch (const Error&) {
        ck.complain("schedule.surrogate_arch: unknown architecture '" + sarch + "'");
    }
    ck.read(sch, "schedule", "surrogate_hidden", rc.schedule.surrogate_hidden);
    ck.require(rc.schedule.bilevel.warmup_epochs >= 1,
               "schedule.warmup_epochs: must be at least 1");
    ck.require(rc.schedule.bilevel.train_epochs >= 1, "schedule.train_epochs: must be at least 1");
    ck.require(rc.schedule.bilevel.surrogate_lr > 0.0, "schedule.surrogate_lr: must be positive");
    ck.require(rc.schedule.bilevel.generator_lr > 0.0, "schedule.generator_lr: must be positive");
    ck.require(rc.schedule.bilevel.batch_size >= 1, "schedule.batch_size: must be positive");
    ck.require(rc.schedule.surrogate_hidden >= 1, "schedule.surrogate_hidden: must be positive");

    const json* vic = ck.section("victim", {"arch", "hidden", "epochs", "lr", "batch_size"});
    std::string varch = arch_to_string(rc.victim.arch);
    ck.read(vic, "victim", "arch", varch);
    try {
        rc.victim.arch = arch_from_string(varch);
    } catch (const Error&) {
        ck.complain("victim.arch: unknown architecture '" + varch + "'");
    }
    ck.read(vic, "victim", "hidden", rc.victim.hidden);
    ck.read(vic, "victim", "epochs", rc.victim.epochs);
    ck.read(vic, "victim", "lr", rc.victim.lr);
    ck.read(vic, "victim", "batch_size", rc.victim.batch_size);
    ck.require(rc.victim.hidden >= 1, "victim.hidden: must be positive");
    ck.require(rc.victim.epochs >= 1, "victim.epochs: must be at least 1");
    ck.require(rc.victim.lr > 0.0, "victim.lr: must be positive");
    ck.require(rc.victim.batch_size >= 1, "victim.batch_size: must be positive");

    const json* ev = ck.section("eval", {"num_attack_points", "stealth_hidden", "stealth_epochs"});
    ck.read(ev, "eval", "num_attack_points", rc.eval.num_attack_points);
    ck.read(ev, "eval", "stealth_hidden", rc.eval.stealth_hidden);
    ck.read(ev, "eval", "stealth_epochs", rc.eval.stealth_epochs);
    ck.require(rc.eval.num_attack_points >= 1, "eval.num_attack_points: must be positive");
    ck.require(rc.eval.stealth_hidden >= 1, "eval.stealth_hidden: must be positive");
    ck.require(rc.eval.stealth_epochs >= 1, "eval.stealth_epochs: must be at least 1");

    if (j.contains("seed")) {
        try {
            rc.seed = j.at("seed").get<uint64_t>();
        } catch (const std::exception&) {
            ck.complain("seed: wrong type");
        }
    }

    if (rc.variable_mode == VariableMode::given) {
        ck.require(!rc.variables.empty(),
                   "attack.variables: required when variable_mode is 'given'");
    }

    ck.finish();
    rc.schedule.bilevel.seed = rc.seed;
    return rc;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::config, "cannot open config: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return config_from_json(buf.str());
}

std::string config_to_json(const RunConfig& rc) {
    json j;
    j["dataset"] = {{"kind", rc.dataset.kind},
                    {"path", rc.dataset.path},
                    {"num_variables", rc.dataset.synthetic.num_variables},
                    {"time_span", rc.dataset.synthetic.time_span},
                    {"period_a", rc.dataset.synthetic.period_a},
                    {"period_b", rc.dataset.synthetic.period_b},
                    {"amplitude_a", rc.dataset.synthetic.amplitude_a},
                    {"amplitude_b", rc.dataset.synthetic.amplitude_b},
                    {"mixing", rc.dataset.synthetic.mixing},
                    {"noise", rc.dataset.synthetic.noise},
                    {"seed", rc.dataset.seed}};
    j["window"] = {{"input_len", rc.window.input_len}, {"output_len", rc.window.output_len}};
    j["split"] = {{"train", rc.split.train_frac},
                  {"val", rc.split.val_frac},
                  {"test", rc.split.test_frac}};
    j["attack"] = {{"trigger_len", rc.attack.trigger_len},
                   {"pattern_len", rc.attack.pattern_len},
                   {"pre_window", rc.attack.pre_window},
                   {"temporal_rate", rc.attack.temporal_rate},
                   {"spatial_rate", rc.attack.spatial_rate},
                   {"trigger_budget", rc.attack.trigger_budget},
                   {"pattern_budget", rc.attack.pattern_budget},
                   {"norm_weight", rc.attack.norm_weight},
                   {"freq_keep", rc.attack.freq_keep},
                   {"pattern_shape", pattern_shape_to_string(rc.pattern_shape)},
                   {"variable_mode", rc.variable_mode == VariableMode::given ? "given" : "random"},
                   {"variables", rc.variables}};
    j["generator"] = {{"hidden", rc.generator.hidden}, {"embed_dim", rc.generator.embed_dim}};
    j["schedule"] = {{"warmup_epochs", rc.schedule.bilevel.warmup_epochs},
                     {"train_epochs", rc.schedule.bilevel.train_epochs},
                     {"surrogate_lr", rc.schedule.bilevel.surrogate_lr},
                     {"generator_lr", rc.schedule.bilevel.generator_lr},
                     {"batch_size", rc.schedule.bilevel.batch_size},
                     {"surrogate_arch", arch_to_string(rc.schedule.surrogate_arch)},
                     {"surrogate_hidden", rc.schedule.surrogate_hidden},
                     {"checkpoint_dir", rc.schedule.bilevel.checkpoint_dir}};
    j["victim"] = {{"arch", arch_to_string(rc.victim.arch)},
                   {"hidden", rc.victim.hidden},
                   {"epochs", rc.victim.epochs},
                   {"lr", rc.victim.lr},
                   {"batch_size", rc.victim.batch_size}};
    j["eval"] = {{"num_attack_points", rc.eval.num_attack_points},
                 {"stealth_hidden", rc.eval.stealth_hidden},
                 {"stealth_epochs", rc.eval.stealth_epochs}};
    j["seed"] = rc.seed;
    return j.dump(2) + "\n";
}

std::string apply_override(const std::string& json_text, const std::string& assignment) {
    size_t eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0) {
        throw Error(ErrorKind::config, "override must look like section.key=value, got '" +
                                           assignment + "'");
    }
    std::string path = assignment.substr(0, eq);
    std::string value = assignment.substr(eq + 1);
    json j;
    try {
        j = json::parse(json_text);
    } catch (const std::exception& e) {
        throw Error(ErrorKind::parse, std::string("config is not valid JSON: ") + e.what());
    }
    json parsed;
    try {
        parsed = json::parse(value);
    } catch (const std::exception&) {
        parsed = value;  // not valid JSON, keep as string
    }
    json* cursor = &j;
    size_t start = 0;
    while (true) {
        size_t dot = path.find('.', start);
        std::string key = path.substr(start, dot == std::string::npos ? dot : dot - start);
        if (key.empty()) throw Error(ErrorKind::config, "override path has an empty segment");
        if (dot == std::string::npos) {
            (*cursor)[key] = parsed;
            break;
        }
        if (!cursor->contains(key) || !(*cursor)[key].is_object()) (*cursor)[key] = json::object();
        cursor = &(*cursor)[key];
        start = dot + 1;
    }
    return j.dump(2) + "\n";
}

std::string config_hash(const RunConfig& rc) {
    std::string canon = config_to_json(rc);
    uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : canon) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace backtime
