#include "backtime/pipeline.hpp"

#include <cstdio>
#include <map>
#include <utility>

#include "backtime/error.hpp"

namespace backtime {

namespace {

MtsDataset build_dataset(const RunConfig& rc) {
    if (rc.dataset.kind == "csv") return load_csv(rc.dataset.path);
    return generate_synthetic(rc.dataset.synthetic, rc.dataset.seed);
}

std::map<int, Trigger> constant_triggers(const std::vector<int>& timestamps, const Trigger& g) {
    std::map<int, Trigger> out;
    for (int t : timestamps) out[t] = g;
    return out;
}

}  // namespace

ForecastModel train_victim(const RunConfig& rc, const Mat& values,
                           const std::vector<int>& train_ts, uint64_t seed, Adam* opt_out) {
    ForecastModel model(rc.victim.arch, rc.window, values.cols(), rc.victim.hidden, seed);
    Adam opt;
    TrainConfig tc;
    tc.epochs = rc.victim.epochs;
    tc.batch_size = rc.victim.batch_size;
    tc.lr = rc.victim.lr;
    Rng rng(seed + 1);
    train_model(model, opt, values, train_ts, tc, rng);
    if (opt_out) *opt_out = opt;
    return model;
}

AttackRun run_poison_stage(const RunConfig& rc) {
    MtsDataset raw = build_dataset(rc);
    SplitRanges splits = split(raw, rc.split, rc.window);
    auto [std_ds, stats] = fit_standardize(raw, splits.train);
    std::vector<int> targets =
        select_variables(std_ds, rc.attack, rc.variable_mode, rc.seed + 11, rc.variables);
    TargetPattern pattern = make_pattern(rc.pattern_shape, rc.attack);
    BilevelResult attack =
        run_backtime(std_ds, splits.train, targets, rc.attack, rc.generator,
                     rc.schedule.bilevel, rc.window, pattern, rc.schedule.surrogate_arch,
                     rc.schedule.surrogate_hidden);
    return AttackRun{std::move(std_ds), std::move(stats), splits,
                     std::move(targets), std::move(pattern), std::move(attack)};
}

EvalRun run_eval_stage(const RunConfig& rc, const AttackRun& run, bool with_baselines) {
    const Mat& clean = run.clean_std.values;
    const std::vector<int> train_ts = window_timestamps(run.splits.train, rc.window);
    const std::vector<int> test_ts = window_timestamps(run.splits.test, rc.window);

    const uint64_t victim_seed = rc.seed + 21;
    ForecastModel victim_clean = train_victim(rc, clean, train_ts, victim_seed);
    ForecastModel victim_backtime =
        train_victim(rc, run.attack.poisoned.data.values, train_ts, victim_seed);

    const TriggerGenerator& gen = run.attack.generator;
    TriggerSource learned = [&gen](int, const Mat& slab) { return gen.generate(slab); };
    AttackEvalInputs backtime_inputs =
        prepare_attack_inputs(clean, run.splits.test, run.targets, rc.attack, rc.window,
                              learned, rc.eval.num_attack_points, rc.seed + 31);

    MetricsReport report;
    report.seed = rc.seed;
    report.config_hash = config_hash(rc);

    auto add_row = [&](const std::string& name, const ForecastModel& m,
                       const AttackEvalInputs& inputs) {
        auto [mae_c, rmse_c] = evaluate_clean(m, clean, test_ts);
        auto [mae_a, rmse_a] =
            evaluate_attack(m, inputs, run.targets, run.pattern, rc.attack, rc.window);
        report.rows.push_back(MetricsRow{name, mae_c, rmse_c, mae_a, rmse_a});
    };

    add_row("clean", victim_clean, backtime_inputs);
    add_row("backtime", victim_backtime, backtime_inputs);

    if (with_baselines) {
        // Same eval seed everywhere so every attack is judged at the same
        // test timestamps; only the planted trigger differs.
        auto fixed_inputs = [&](const Trigger& g) {
            TriggerSource src = [&g](int, const Mat&) { return g; };
            return prepare_attack_inputs(clean, run.splits.test, run.targets, rc.attack,
                                         rc.window, src, rc.eval.num_attack_points,
                                         rc.seed + 31);
        };
        auto poison_with = [&](const PoisonPlan& plan, const Trigger& g) {
            return build_poisoned_dataset(run.clean_std, plan,
                                          constant_triggers(plan.timestamps, g), run.pattern,
                                          rc.attack);
        };

        RandomBaseline rb = random_baseline(rc.attack, static_cast<int>(run.targets.size()),
                                            run.splits.train, rc.window, rc.seed + 41);
        PoisonPlan random_plan{rb.timestamps, run.targets, rb.shortfall};
        random_plan.validate(rc.attack, run.splits.train.end, clean.cols());
        PoisonedDataset random_pd = poison_with(random_plan, rb.trigger);
        ForecastModel victim_random =
            train_victim(rc, random_pd.data.values, train_ts, victim_seed);
        add_row("random", victim_random, fixed_inputs(rb.trigger));

        const PoisonPlan& plan = run.attack.poisoned.plan;
        Mat train_slice = clean.slice_rows(run.splits.train.begin, run.splits.train.end);
        Trigger inv = inverse_trigger(train_slice, run.targets, run.pattern, rc.attack,
                                      rc.window, rc.seed + 51);
        BudgetReport inv_budget = check_budgets(inv.values, run.pattern.values, rc.attack);
        if (!inv_budget.ok()) log::notice("inverse baseline: " + inv_budget.describe());
        PoisonedDataset inv_pd = poison_with(plan, inv);
        ForecastModel victim_inverse =
            train_victim(rc, inv_pd.data.values, train_ts, victim_seed);
        add_row("inverse", victim_inverse, fixed_inputs(inv));

        ManhattanResult mh =
            manhattan_trigger(clean, run.targets, run.pattern, rc.attack, run.splits.train);
        BudgetReport mh_budget = check_budgets(mh.trigger.values, run.pattern.values, rc.attack);
        if (!mh_budget.ok()) log::notice("manhattan baseline: " + mh_budget.describe());
        PoisonedDataset mh_pd = poison_with(plan, mh.trigger);
        ForecastModel victim_manhattan =
            train_victim(rc, mh_pd.data.values, train_ts, victim_seed);
        add_row("manhattan", victim_manhattan, fixed_inputs(mh.trigger));
    }

    StealthReport stealth =
        stealth_eval(run.attack.poisoned.data.values, run.attack.poisoned.mask,
                     run.splits.train, run.splits.test, rc.window, rc.eval.stealth_hidden,
                     rc.eval.stealth_epochs, rc.seed + 61);

    return EvalRun{std::move(report), stealth, std::move(backtime_inputs.points),
                   std::move(victim_backtime), std::move(backtime_inputs.values)};
}

SweepAxis sweep_axis_from_string(const std::string& s) {
    if (s == "temporal_rate") return SweepAxis::temporal_rate;
    if (s == "spatial_rate") return SweepAxis::spatial_rate;
    throw Error(ErrorKind::config, "unknown sweep axis: " + s);
}

std::string sweep_axis_to_string(SweepAxis axis) {
    return axis == SweepAxis::temporal_rate ? "temporal_rate" : "spatial_rate";
}

std::string SweepResult::table() const {
    std::string out = sweep_axis_to_string(axis);
    char buf[160];
    out += "      mae_c(bt)  rmse_c(bt)  mae_a(bt)  mae_a(clean)\n";
    for (const SweepRow& row : rows) {
        if (!row.ok) {
            std::snprintf(buf, sizeof buf, "%-12.4f failed: %s\n", row.value, row.error.c_str());
            out += buf;
            continue;
        }
        const MetricsRow* bt = nullptr;
        const MetricsRow* cl = nullptr;
        for (const MetricsRow& r : row.report.rows) {
            if (r.model == "backtime") bt = &r;
            if (r.model == "clean") cl = &r;
        }
        if (!bt || !cl) continue;
        std::snprintf(buf, sizeof buf, "%-12.4f %10.6f  %10.6f %10.6f    %10.6f\n", row.value,
                      bt->mae_c, bt->rmse_c, bt->mae_a, cl->mae_a);
        out += buf;
    }
    return out;
}

SweepResult ablation_sweep(SweepAxis axis, const std::vector<double>& values,
                           const RunConfig& base) {
    if (values.empty()) throw Error(ErrorKind::config, "sweep: no axis values given");
    for (double v : values) {
        if (!(v > 0.0) || v > 1.0) {
            throw Error(ErrorKind::config,
                        "sweep: rates must lie in (0, 1], got " + std::to_string(v));
        }
    }
    SweepResult result;
    result.axis = axis;
    for (double v : values) {
        RunConfig rc = base;
        if (axis == SweepAxis::temporal_rate) {
            rc.attack.temporal_rate = v;
        } else {
            rc.attack.spatial_rate = v;
            rc.variable_mode = VariableMode::random;
            rc.variables.clear();
        }
        SweepRow row;
        row.value = v;
        try {
            AttackRun run = run_poison_stage(rc);
            EvalRun ev = run_eval_stage(rc, run, false);
            row.report = std::move(ev.report);
            row.ok = true;
        } catch (const Error& e) {
            row.error = e.what();
        }
        result.rows.push_back(std::move(row));
    }
    return result;
}

}  // namespace backtime
