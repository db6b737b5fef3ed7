#include "backtime/bilevel.hpp"

#include <cmath>
#include <fstream>

#include "json.hpp"

#include "backtime/error.hpp"

namespace backtime {

void BilevelSchedule::validate() const {
    if (warmup_epochs < 1) throw Error(ErrorKind::config, "warmup_epochs must be at least 1");
    if (train_epochs < 1) throw Error(ErrorKind::config, "train_epochs must be at least 1");
    if (batch_size < 1) throw Error(ErrorKind::config, "batch_size must be at least 1");
    if (surrogate_lr <= 0.0 || generator_lr <= 0.0) {
        throw Error(ErrorKind::config, "step sizes must be positive");
    }
}

std::vector<double> attack_loss_weights(const AttackConfig& atk, const WindowSpec& window) {
    int room = window.input_len - atk.trigger_len;
    if (room <= 0) {
        throw Error(ErrorKind::config,
                    "attack loss needs input_len > trigger_len (no window can hold a full trigger)");
    }
    int n_offsets = std::min(atk.pattern_len, room);
    std::vector<double> w(n_offsets);
    for (int j = 0; j < n_offsets; ++j) {
        w[j] = static_cast<double>(atk.pattern_len - j) / atk.pattern_len;
    }
    return w;
}

namespace {

double masked_mse(const Mat& pred, const Mat& target, const std::vector<int>& cols) {
    double acc = 0.0;
    for (int r = 0; r < pred.rows(); ++r) {
        for (int c : cols) {
            double d = pred(r, c) - target(r, c);
            acc += d * d;
        }
    }
    return acc / (static_cast<double>(pred.rows()) * cols.size());
}

void check_attack_window(int t_i, const WindowSpec& window, int total_rows) {
    if (t_i - window.input_len < 0 || t_i + window.output_len > total_rows) {
        throw Error(ErrorKind::boundary,
                    "attack window at t=" + std::to_string(t_i) + " extends past the series");
    }
}

}  // namespace

double attack_loss_value(const ForecastModel& surrogate, const Mat& poisoned_values,
                         const PoisonPlan& plan, const AttackConfig& atk,
                         const WindowSpec& window) {
    if (plan.timestamps.empty()) throw Error(ErrorKind::degenerate, "attack loss: empty plan");
    std::vector<double> weights = attack_loss_weights(atk, window);
    double total = 0.0;
    for (int t : plan.timestamps) {
        for (size_t j = 0; j < weights.size(); ++j) {
            int t_i = t + static_cast<int>(j);
            check_attack_window(t_i, window, poisoned_values.rows());
            Mat pred = surrogate.predict(poisoned_values.slice_rows(t_i - window.input_len, t_i));
            Mat target = poisoned_values.slice_rows(t_i, t_i + window.output_len);
            total += weights[j] * masked_mse(pred, target, plan.target_variables);
        }
    }
    return total / static_cast<double>(plan.timestamps.size());
}

double surrogate_step(ForecastModel& surrogate, Adam& opt, const Mat& poisoned_values,
                      const std::vector<int>& train_timestamps, const BilevelSchedule& sched,
                      Rng& rng) {
    TrainConfig cfg;
    cfg.epochs = 1;
    cfg.batch_size = sched.batch_size;
    cfg.lr = sched.surrogate_lr;
    return train_epoch(surrogate, opt, poisoned_values, train_timestamps, cfg, rng);
}

RegeneratedPoison regenerate_poisoned(const TriggerGenerator& gen, const Mat& clean_values,
                                      const PoisonPlan& plan, const TargetPattern& pattern,
                                      const AttackConfig& atk) {
    RegeneratedPoison out;
    out.values = clean_values;
    out.mask = Mat(clean_values.rows(), clean_values.cols(), 0.0);
    for (int t : plan.timestamps) {
        Mat slab = out.values
                       .slice_rows(t - atk.pre_window - atk.trigger_len, t - atk.trigger_len)
                       .select_cols(plan.target_variables);
        Trigger g = gen.generate(slab);
        inject(out.values, out.mask, t, plan.target_variables, g, pattern, atk);
        out.triggers.emplace(t, std::move(g));
    }
    return out;
}

GeneratorStepLosses generator_step(TriggerGenerator& gen, Adam& gen_opt,
                                   const ForecastModel& surrogate, const Mat& clean_values,
                                   const PoisonPlan& plan, const TargetPattern& pattern,
                                   const AttackConfig& atk, const WindowSpec& window) {
    if (plan.timestamps.empty()) throw Error(ErrorKind::degenerate, "generator step: empty plan");
    std::vector<double> weights = attack_loss_weights(atk, window);

    ad::Tape tape;
    std::vector<ad::Var> gen_params = gen.stage_params(tape);
    std::vector<ad::Var> sur_params = surrogate.stage_params(tape);
    ad::Var prop = gen.propagation_on(tape, gen_params);

    ad::Var x = tape.leaf(clean_values);
    ad::Var norm_sum{};
    for (int t : plan.timestamps) {
        ad::Var slab = tape.select_cols(
            tape.slice_rows(x, t - atk.pre_window - atk.trigger_len, t - atk.trigger_len),
            plan.target_variables);
        ad::Var g = gen.trigger_on(tape, slab, prop, gen_params);
        ad::Var n = normalization_loss_on(tape, g);
        norm_sum = norm_sum.valid() ? tape.add(norm_sum, n) : n;
        x = tape.inject(x, t, plan.target_variables, g, pattern.values, atk.trigger_len);
    }
    ad::Var l_norm = tape.scale(norm_sum, 1.0 / static_cast<double>(plan.timestamps.size()));

    ad::Var atk_sum{};
    for (int t : plan.timestamps) {
        for (size_t j = 0; j < weights.size(); ++j) {
            int t_i = t + static_cast<int>(j);
            check_attack_window(t_i, window, clean_values.rows());
            ad::Var hist = tape.slice_rows(x, t_i - window.input_len, t_i);
            ad::Var pred = surrogate.forward_on(tape, hist, sur_params);
            ad::Var target = tape.slice_rows(x, t_i, t_i + window.output_len);
            ad::Var term = tape.mse(tape.select_cols(pred, plan.target_variables),
                                    tape.select_cols(target, plan.target_variables));
            term = tape.scale(term, weights[j]);
            atk_sum = atk_sum.valid() ? tape.add(atk_sum, term) : term;
        }
    }
    ad::Var l_atk = tape.scale(atk_sum, 1.0 / static_cast<double>(plan.timestamps.size()));
    ad::Var l_tgr = tape.add(l_atk, tape.scale(l_norm, atk.norm_weight));

    GeneratorStepLosses losses;
    losses.l_atk = l_atk.val()(0, 0);
    losses.l_norm = l_norm.val()(0, 0);
    losses.l_tgr = l_tgr.val()(0, 0);
    if (!std::isfinite(losses.l_tgr)) {
        throw Error(ErrorKind::divergence, "generator loss became non-finite");
    }

    tape.backward(l_tgr);
    std::vector<Mat> grads;
    grads.reserve(gen_params.size());
    for (ad::Var p : gen_params) grads.push_back(tape.grad(p));
    gen_opt.step(gen.blocks(), grads);
    return losses;
}

namespace {

[[noreturn]] void stage_abort(const std::string& stage, int epoch, const Error& e) {
    throw Error(e.kind(), stage + " (epoch " + std::to_string(epoch) + "): " + e.what());
}

}  // namespace

BilevelResult run_backtime(const MtsDataset& clean, Range train,
                           const std::vector<int>& targets, const AttackConfig& atk,
                           const GeneratorConfig& gcfg, const BilevelSchedule& sched,
                           const WindowSpec& window, const TargetPattern& pattern,
                           Arch surrogate_arch, int surrogate_hidden) {
    sched.validate();
    atk.validate(window);
    window.validate();
    if (static_cast<int>(pattern.values.size()) != atk.pattern_len) {
        throw Error(ErrorKind::shape, "pattern length does not match the attack config");
    }
    for (double v : pattern.values) {
        if (std::fabs(v) > atk.pattern_budget) {
            throw Error(ErrorKind::config, "pattern exceeds its amplitude budget");
        }
    }

    const Mat& values = clean.values;
    std::vector<int> train_ts = window_timestamps(train, window);
    if (train_ts.empty()) throw Error(ErrorKind::degenerate, "no training windows");

    ForecastModel surrogate(surrogate_arch, window, clean.num_variables(), surrogate_hidden,
                            sched.seed + 1);
    Adam sur_opt(AdamConfig{sched.surrogate_lr, 0.9, 0.999, 1e-8});
    Rng rng(sched.seed + 3);

    TrainConfig warm_cfg;
    warm_cfg.epochs = sched.warmup_epochs;
    warm_cfg.batch_size = sched.batch_size;
    warm_cfg.lr = sched.surrogate_lr;
    try {
        train_model(surrogate, sur_opt, values, train_ts, warm_cfg, rng);
    } catch (const Error& e) {
        stage_abort("warmup", 0, e);
    }

    std::map<int, double> scores = evaluate(surrogate, values, train_ts, Metric::mae);
    TimestampSelection sel = select_timestamps(scores, atk, train);
    PoisonPlan plan{sel.timestamps, targets, sel.shortfall};
    plan.validate(atk, train.end, clean.num_variables());

    Mat train_clean = values.slice_rows(train.begin, train.end);
    Mat features = TriggerGenerator::spectral_features(train_clean, targets, atk.freq_keep);
    GeneratorConfig gen_cfg = gcfg;
    gen_cfg.lr = sched.generator_lr;
    TriggerGenerator gen(atk, gen_cfg, std::move(features), sched.seed + 2);
    Adam gen_opt(AdamConfig{sched.generator_lr, 0.9, 0.999, 1e-8});

    std::vector<BilevelLogEntry> log;
    log.reserve(sched.train_epochs);
    for (int epoch = 0; epoch < sched.train_epochs; ++epoch) {
        BilevelLogEntry entry;
        entry.epoch = epoch;
        RegeneratedPoison regen;
        try {
            regen = regenerate_poisoned(gen, values, plan, pattern, atk);
        } catch (const Error& e) {
            stage_abort("trigger regeneration", epoch, e);
        }
        for (const auto& [t, g] : regen.triggers) {
            BudgetReport rep = check_budgets(g.values, pattern.values, atk);
            if (!rep.ok()) {
                throw Error(ErrorKind::divergence,
                            "budget violated at epoch " + std::to_string(epoch) + ", t=" +
                                std::to_string(t) + ": " + rep.describe());
            }
        }
        try {
            entry.l_cln = surrogate_step(surrogate, sur_opt, regen.values, train_ts, sched, rng);
        } catch (const Error& e) {
            stage_abort("surrogate step", epoch, e);
        }
        try {
            GeneratorStepLosses losses =
                generator_step(gen, gen_opt, surrogate, values, plan, pattern, atk, window);
            entry.l_atk = losses.l_atk;
            entry.l_norm = losses.l_norm;
            entry.l_tgr = losses.l_tgr;
        } catch (const Error& e) {
            stage_abort("generator step", epoch, e);
        }
        log.push_back(entry);
        if (!sched.checkpoint_dir.empty()) {
            std::string tag = sched.checkpoint_dir + "/epoch_" + std::to_string(epoch);
            save_model_json(surrogate, sur_opt, tag + "_surrogate.json");
            save_generator_json(gen, tag + "_generator.json");
        }
    }

    RegeneratedPoison final_regen = regenerate_poisoned(gen, values, plan, pattern, atk);
    PoisonedDataset poisoned{MtsDataset{final_regen.values, clean.variable_names},
                             final_regen.mask, plan};
    return BilevelResult{std::move(poisoned), std::move(gen), std::move(surrogate),
                         std::move(scores), std::move(log)};
}

void save_bilevel_log(const std::vector<BilevelLogEntry>& log, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error(ErrorKind::config, "cannot open training log for writing: " + path);
    for (const BilevelLogEntry& e : log) {
        nlohmann::json j;
        j["epoch"] = e.epoch;
        j["l_cln"] = e.l_cln;
        j["l_atk"] = e.l_atk;
        j["l_norm"] = e.l_norm;
        j["l_tgr"] = e.l_tgr;
        out << j.dump() << "\n";
    }
}

}  // namespace backtime
