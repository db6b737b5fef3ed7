#include "backtime/cli.hpp"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "backtime/config.hpp"
#include "backtime/error.hpp"
#include "backtime/eval.hpp"
#include "backtime/pipeline.hpp"
#include "backtime/svgplot.hpp"

namespace backtime {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::string read_text(const fs::path& path) {
    std::ifstream f(path);
    if (!f) throw Error(ErrorKind::parse, "cannot read " + path.string());
    std::ostringstream buf;
    buf << f.rdbuf();
    return buf.str();
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream f(path);
    if (!f) throw Error(ErrorKind::parse, "cannot write " + path.string());
    f << text;
}

fs::path resolve_out(const std::string& given, const char* name) {
    if (!given.empty()) return fs::path(given);
    return fs::path(artifact_root()) / name;
}

RunConfig load_with_sets(const std::string& config_path, const std::vector<std::string>& sets,
                         std::string* resolved_text = nullptr) {
    std::string text = read_text(config_path);
    for (const std::string& s : sets) text = apply_override(text, s);
    RunConfig rc = config_from_json(text);
    if (resolved_text) *resolved_text = config_to_json(rc);
    return rc;
}

std::vector<double> parse_double_list(const std::string& csv) {
    std::vector<double> out;
    std::stringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            size_t used = 0;
            double v = std::stod(item, &used);
            while (used < item.size() && std::isspace(static_cast<unsigned char>(item[used])))
                ++used;
            if (used != item.size()) throw std::invalid_argument(item);
            out.push_back(v);
        } catch (const std::exception&) {
            throw Error(ErrorKind::config, "cannot parse number '" + item + "' in list");
        }
    }
    if (out.empty()) throw Error(ErrorKind::config, "empty value list");
    return out;
}

json stats_to_json(const StandardizationStats& stats) {
    return json{{"mean", stats.mean}, {"stdev", stats.stdev}};
}

StandardizationStats stats_from_json(const json& j) {
    StandardizationStats stats;
    stats.mean = j.at("mean").get<std::vector<double>>();
    stats.stdev = j.at("stdev").get<std::vector<double>>();
    return stats;
}

json plan_to_json(const PoisonPlan& plan) {
    return json{{"timestamps", plan.timestamps},
                {"target_variables", plan.target_variables},
                {"shortfall", plan.shortfall}};
}

PoisonPlan plan_from_json(const json& j) {
    PoisonPlan plan;
    plan.timestamps = j.at("timestamps").get<std::vector<int>>();
    plan.target_variables = j.at("target_variables").get<std::vector<int>>();
    plan.shortfall = j.at("shortfall").get<bool>();
    return plan;
}

struct PoisonArtifacts {
    RunConfig rc;
    AttackRun run;
};

/// Rebuilds the poison-stage state from a poison output directory. The split
/// is recomputed from the config; it only depends on the row count.
PoisonArtifacts load_poison_dir(const fs::path& dir, const std::vector<std::string>& sets) {
    PoisonArtifacts pa{load_with_sets((dir / "resolved_config.json").string(), sets),
                       AttackRun{MtsDataset{}, StandardizationStats{}, SplitRanges{},
                                 std::vector<int>{}, TargetPattern{},
                                 BilevelResult{PoisonedDataset{},
                                               load_generator_json((dir / "generator.json").string()),
                                               load_model_json((dir / "surrogate.json").string()).first,
                                               {},
                                               {}}}};
    AttackRun& run = pa.run;
    run.clean_std = load_csv((dir / "clean.csv").string());
    run.stats = stats_from_json(json::parse(read_text(dir / "stats.json")));
    run.splits = split(run.clean_std, pa.rc.split, pa.rc.window);
    run.attack.poisoned.data = load_csv((dir / "poisoned.csv").string());
    run.attack.poisoned.mask = load_mask_csv((dir / "mask.csv").string());
    run.attack.poisoned.plan = plan_from_json(json::parse(read_text(dir / "plan.json")));
    run.targets = run.attack.poisoned.plan.target_variables;
    run.pattern = make_pattern(pa.rc.pattern_shape, pa.rc.attack);
    return pa;
}

struct ConfigOpts {
    std::string config = "configs/synthetic.json";
    std::vector<std::string> sets;
    std::string out;
};

void add_config_opts(CLI::App* sub, ConfigOpts& o, const char* out_hint) {
    sub->add_option("--config", o.config, "JSON run configuration")->capture_default_str();
    sub->add_option("--set", o.sets, "Dotted config override, e.g. attack.temporal_rate=0.05");
    sub->add_option("--out", o.out, std::string("Output directory (default: ") + out_hint + ")");
}

int cmd_poison(const ConfigOpts& o) {
    std::string resolved;
    RunConfig rc = load_with_sets(o.config, o.sets, &resolved);
    fs::path dir = resolve_out(o.out, "poison");
    fs::create_directories(dir);

    AttackRun run = run_poison_stage(rc);
    const PoisonPlan& plan = run.attack.poisoned.plan;

    write_text(dir / "resolved_config.json", resolved);
    save_csv(run.clean_std, (dir / "clean.csv").string());
    write_text(dir / "stats.json", stats_to_json(run.stats).dump(2) + "\n");
    save_csv(run.attack.poisoned.data, (dir / "poisoned.csv").string());
    save_mask_csv(run.attack.poisoned.mask, run.clean_std.variable_names,
                  (dir / "mask.csv").string());
    write_text(dir / "plan.json", plan_to_json(plan).dump(2) + "\n");
    save_generator_json(run.attack.generator, (dir / "generator.json").string());
    Adam sur_opt(AdamConfig{rc.schedule.bilevel.surrogate_lr, 0.9, 0.999, 1e-8});
    save_model_json(run.attack.surrogate, sur_opt, (dir / "surrogate.json").string());
    save_bilevel_log(run.attack.log, (dir / "train_log.jsonl").string());
    export_graph_edges(run.attack.generator.graph(), run.targets,
                       (dir / "graph_edges.txt").string());

    svg::line_chart((dir / "pattern.svg").string(), "target pattern",
                    {svg::Series{"pattern", run.pattern.values, {}}}, "future step", "offset");

    BudgetReport budget;
    if (!plan.timestamps.empty()) {
        const int t0 = plan.timestamps.front();
        const AttackConfig& atk = rc.attack;
        Mat slab = run.attack.poisoned.data.values
                       .slice_rows(t0 - atk.trigger_len - atk.pre_window, t0 - atk.trigger_len)
                       .select_cols(run.targets);
        Trigger g0 = run.attack.generator.generate(slab);
        budget = check_budgets(g0.values, run.pattern.values, atk);
        std::vector<svg::Series> trig_series;
        for (size_t i = 0; i < run.targets.size(); ++i) {
            std::vector<double> col(atk.trigger_len);
            for (int j = 0; j < atk.trigger_len; ++j) col[j] = g0.values(j, static_cast<int>(i));
            trig_series.push_back(
                svg::Series{"var " + std::to_string(run.targets[i]), std::move(col), {}});
        }
        svg::line_chart((dir / "trigger.svg").string(), "trigger at t=" + std::to_string(t0),
                        trig_series, "history step", "offset");

        const int v0 = run.targets.front();
        const int lo = std::max(0, t0 - 48);
        const int hi = std::min(run.clean_std.time_span(), t0 + 48);
        std::vector<svg::Series> ctx(2);
        ctx[0].label = "clean";
        ctx[1].label = "poisoned";
        for (int t = lo; t < hi; ++t) {
            ctx[0].x.push_back(t);
            ctx[0].y.push_back(run.clean_std.values(t, v0));
            ctx[1].x.push_back(t);
            ctx[1].y.push_back(run.attack.poisoned.data.values(t, v0));
        }
        svg::line_chart((dir / "series.svg").string(),
                        "variable " + std::to_string(v0) + " around t=" + std::to_string(t0),
                        ctx, "t", "z-score");
    }

    std::printf("dataset: %s  T=%d  N=%d\n", rc.dataset.kind.c_str(),
                run.clean_std.time_span(), run.clean_std.num_variables());
    std::printf("poisoned timestamps: %zu%s\n", plan.timestamps.size(),
                plan.shortfall ? " (quota shortfall)" : "");
    std::printf("target variables:");
    for (int v : run.targets) std::printf(" %d", v);
    std::printf("\n");
    if (!run.attack.log.empty()) {
        const BilevelLogEntry& last = run.attack.log.back();
        std::printf("final losses: l_cln=%.6f l_atk=%.6f l_norm=%.6f l_tgr=%.6f\n", last.l_cln,
                    last.l_atk, last.l_norm, last.l_tgr);
    }
    std::printf("budgets: %s\n", budget.describe().c_str());
    std::printf("artifacts: %s\n", dir.string().c_str());
    return 0;
}

struct PoisonDirOpts {
    std::string poison_dir;
    std::vector<std::string> sets;
    std::string out;
};

void add_poison_dir_opts(CLI::App* sub, PoisonDirOpts& o, const char* out_hint) {
    sub->add_option("--poison-dir", o.poison_dir,
                    "Directory written by `poison` (default: <root>/poison)");
    sub->add_option("--set", o.sets, "Dotted config override applied on top of the stored run");
    sub->add_option("--out", o.out, std::string("Output directory (default: ") + out_hint + ")");
}

int cmd_train_victim(const PoisonDirOpts& o) {
    fs::path pdir = resolve_out(o.poison_dir, "poison");
    PoisonArtifacts pa = load_poison_dir(pdir, o.sets);
    fs::path dir = resolve_out(o.out, "victims");
    fs::create_directories(dir);

    std::vector<int> train_ts = window_timestamps(pa.run.splits.train, pa.rc.window);
    Adam clean_opt, backtime_opt;
    ForecastModel victim_clean =
        train_victim(pa.rc, pa.run.clean_std.values, train_ts, pa.rc.seed + 21, &clean_opt);
    ForecastModel victim_backtime = train_victim(
        pa.rc, pa.run.attack.poisoned.data.values, train_ts, pa.rc.seed + 21, &backtime_opt);

    save_model_json(victim_clean, clean_opt, (dir / "victim_clean.json").string());
    save_model_json(victim_backtime, backtime_opt, (dir / "victim_backtime.json").string());

    std::vector<int> test_ts = window_timestamps(pa.run.splits.test, pa.rc.window);
    auto [mae_clean, rmse_clean] = evaluate_clean(victim_clean, pa.run.clean_std.values, test_ts);
    auto [mae_bt, rmse_bt] = evaluate_clean(victim_backtime, pa.run.clean_std.values, test_ts);
    std::printf("victim arch: %s  hidden=%d  epochs=%d\n",
                arch_to_string(pa.rc.victim.arch).c_str(), pa.rc.victim.hidden,
                pa.rc.victim.epochs);
    std::printf("clean-trained     MAE_C=%.6f RMSE_C=%.6f\n", mae_clean, rmse_clean);
    std::printf("backtime-trained  MAE_C=%.6f RMSE_C=%.6f\n", mae_bt, rmse_bt);
    std::printf("checkpoints: %s\n", dir.string().c_str());
    return 0;
}

int cmd_eval(const PoisonDirOpts& o, bool no_baselines) {
    fs::path pdir = resolve_out(o.poison_dir, "poison");
    PoisonArtifacts pa = load_poison_dir(pdir, o.sets);
    fs::path dir = resolve_out(o.out, "eval");
    fs::create_directories(dir);

    EvalRun ev = run_eval_stage(pa.rc, pa.run, !no_baselines);

    save_metrics_jsonl(ev.report, (dir / "metrics.jsonl").string());
    write_text(dir / "metrics.txt", ev.report.table());
    json st{{"auc", ev.stealth.auc},
            {"f1", ev.stealth.f1},
            {"threshold", ev.stealth.threshold},
            {"detector", ev.stealth.detector}};
    write_text(dir / "stealth.json", st.dump(2) + "\n");

    std::vector<std::string> labels;
    std::vector<double> mae_a;
    for (const MetricsRow& r : ev.report.rows) {
        labels.push_back(r.model);
        mae_a.push_back(r.mae_a);
    }
    svg::bar_chart((dir / "metrics.svg").string(), "MAE on triggered inputs", labels, mae_a,
                   "MAE_A");

    if (!ev.attack_points.empty()) {
        const int t = ev.attack_points.front();
        const int v = pa.run.targets.front();
        const AttackConfig& atk = pa.rc.attack;
        Mat hist = ev.attacked_values.slice_rows(t - pa.rc.window.input_len, t);
        Mat pred = ev.victim_backtime.predict(hist);
        const double base = ev.attacked_values(t - atk.trigger_len - 1, v);
        svg::Series predicted{"prediction", {}, {}};
        svg::Series wanted{"base+pattern", {}, {}};
        svg::Series truth{"clean future", {}, {}};
        for (int j = 0; j < atk.pattern_len; ++j) {
            predicted.y.push_back(pred(j, v));
            wanted.y.push_back(base + pa.run.pattern.values[j]);
            truth.y.push_back(pa.run.clean_std.values(t + j, v));
        }
        svg::line_chart((dir / "predictions.svg").string(),
                        "poisoned victim at t=" + std::to_string(t) + ", variable " +
                            std::to_string(v),
                        {predicted, wanted, truth}, "future step", "z-score");
    }

    std::fputs(ev.report.table().c_str(), stdout);
    std::printf("stealth: auc=%.4f f1=%.4f threshold=%.6f (%s)\n", ev.stealth.auc, ev.stealth.f1,
                ev.stealth.threshold, ev.stealth.detector.c_str());
    std::printf("attack points:");
    for (int t : ev.attack_points) std::printf(" %d", t);
    std::printf("\nartifacts: %s\n", dir.string().c_str());
    return 0;
}

int cmd_stealth(const PoisonDirOpts& o) {
    fs::path pdir = resolve_out(o.poison_dir, "poison");
    PoisonArtifacts pa = load_poison_dir(pdir, o.sets);
    fs::path dir = resolve_out(o.out, "stealth");
    fs::create_directories(dir);

    StealthReport rep = stealth_eval(pa.run.attack.poisoned.data.values,
                                     pa.run.attack.poisoned.mask, pa.run.splits.train,
                                     pa.run.splits.test, pa.rc.window, pa.rc.eval.stealth_hidden,
                                     pa.rc.eval.stealth_epochs, pa.rc.seed + 61);
    json st{{"auc", rep.auc},
            {"f1", rep.f1},
            {"threshold", rep.threshold},
            {"detector", rep.detector}};
    write_text(dir / "stealth.json", st.dump(2) + "\n");
    std::printf("stealth: auc=%.4f f1=%.4f threshold=%.6f (%s)\n", rep.auc, rep.f1, rep.threshold,
                rep.detector.c_str());
    std::printf("artifacts: %s\n", dir.string().c_str());
    return 0;
}

std::string fig2_table(const VulnerabilityResult& res) {
    std::string out = "percentile   mae_clean  mae_attacked  mae_reference    mae_diff\n";
    char buf[160];
    for (const VulnerabilityGroup& g : res.groups) {
        std::snprintf(buf, sizeof buf, "%10.4f  %10.6f    %10.6f     %10.6f  %10.6f\n",
                      g.percentile, g.mae_clean, g.mae_attacked, g.mae_reference, g.mae_diff);
        out += buf;
    }
    std::snprintf(buf, sizeof buf, "spearman(percentile, mae_diff) = %.4f\n", res.spearman_corr);
    out += buf;
    return out;
}

int cmd_fig2(const ConfigOpts& o, int groups) {
    RunConfig rc = load_with_sets(o.config, o.sets);
    fs::path dir = resolve_out(o.out, "fig2");
    fs::create_directories(dir);

    MtsDataset raw = rc.dataset.kind == "csv"
                         ? load_csv(rc.dataset.path)
                         : generate_synthetic(rc.dataset.synthetic, rc.dataset.seed);
    SplitRanges splits = split(raw, rc.split, rc.window);
    auto [std_ds, stats] = fit_standardize(raw, splits.train);
    TargetPattern pattern = make_pattern(rc.pattern_shape, rc.attack);

    VulnerabilityConfig vcfg;
    vcfg.num_groups = groups;
    vcfg.trigger_profile.assign(rc.attack.trigger_len, 0.0);
    for (int j = 0; j < rc.attack.trigger_len; ++j) {
        vcfg.trigger_profile[j] = (j % 2 == 0) ? -0.05 : 0.05;
    }
    VulnerabilityResult res = vulnerability_experiment(std_ds.values, splits.train, rc.window,
                                                       rc.attack, pattern, vcfg, rc.seed + 71);

    std::ostringstream lines;
    for (const VulnerabilityGroup& g : res.groups) {
        lines << json{{"percentile", g.percentile},
                      {"mae_clean", g.mae_clean},
                      {"mae_attacked", g.mae_attacked},
                      {"mae_reference", g.mae_reference},
                      {"mae_diff", g.mae_diff},
                      {"group_size", g.group_size}}
                     .dump()
              << "\n";
    }
    lines << json{{"spearman", res.spearman_corr}}.dump() << "\n";
    write_text(dir / "fig2.jsonl", lines.str());
    write_text(dir / "fig2.txt", fig2_table(res));

    std::vector<std::string> labels;
    std::vector<double> diffs;
    char buf[32];
    for (const VulnerabilityGroup& g : res.groups) {
        std::snprintf(buf, sizeof buf, "%.2f", g.percentile);
        labels.push_back(buf);
        diffs.push_back(g.mae_diff);
    }
    svg::bar_chart((dir / "fig2.svg").string(), "fit gap by clean-error percentile", labels,
                   diffs, "mae_diff");

    std::fputs(fig2_table(res).c_str(), stdout);
    std::printf("artifacts: %s\n", dir.string().c_str());
    return 0;
}

int cmd_sweep(const ConfigOpts& o, const std::string& axis_name, const std::string& values_csv) {
    RunConfig rc = load_with_sets(o.config, o.sets);
    fs::path dir = resolve_out(o.out, "sweep");
    fs::create_directories(dir);

    SweepAxis axis = sweep_axis_from_string(axis_name);
    std::vector<double> values = parse_double_list(values_csv);
    SweepResult res = ablation_sweep(axis, values, rc);

    std::ostringstream lines;
    for (const SweepRow& row : res.rows) {
        json jrow{{"axis", sweep_axis_to_string(axis)}, {"value", row.value}, {"ok", row.ok}};
        if (!row.ok) {
            jrow["error"] = row.error;
        } else {
            json models = json::array();
            for (const MetricsRow& r : row.report.rows) {
                models.push_back(json{{"model", r.model},
                                      {"mae_c", r.mae_c},
                                      {"rmse_c", r.rmse_c},
                                      {"mae_a", r.mae_a},
                                      {"rmse_a", r.rmse_a}});
            }
            jrow["rows"] = models;
        }
        lines << jrow.dump() << "\n";
    }
    write_text(dir / "sweep.jsonl", lines.str());
    write_text(dir / "sweep.txt", res.table());

    svg::Series bt{"backtime MAE_A", {}, {}};
    svg::Series cl{"clean MAE_A", {}, {}};
    for (const SweepRow& row : res.rows) {
        if (!row.ok) continue;
        for (const MetricsRow& r : row.report.rows) {
            if (r.model == "backtime") {
                bt.x.push_back(row.value);
                bt.y.push_back(r.mae_a);
            } else if (r.model == "clean") {
                cl.x.push_back(row.value);
                cl.y.push_back(r.mae_a);
            }
        }
    }
    if (!bt.y.empty()) {
        svg::line_chart((dir / "sweep.svg").string(),
                        "attack strength vs " + sweep_axis_to_string(axis), {bt, cl},
                        sweep_axis_to_string(axis), "MAE_A");
    }

    std::fputs(res.table().c_str(), stdout);
    std::printf("artifacts: %s\n", dir.string().c_str());
    return 0;
}

std::string rebuild_sweep_table(const fs::path& path) {
    std::ifstream f(path);
    std::string line;
    SweepResult res;
    bool axis_set = false;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        json j = json::parse(line);
        if (!axis_set && j.contains("axis")) {
            res.axis = sweep_axis_from_string(j["axis"].get<std::string>());
            axis_set = true;
        }
        SweepRow row;
        row.value = j.at("value").get<double>();
        row.ok = j.at("ok").get<bool>();
        if (!row.ok) {
            row.error = j.value("error", std::string("unknown"));
        } else {
            for (const json& m : j.at("rows")) {
                row.report.rows.push_back(MetricsRow{m.at("model").get<std::string>(),
                                                     m.at("mae_c").get<double>(),
                                                     m.at("rmse_c").get<double>(),
                                                     m.at("mae_a").get<double>(),
                                                     m.at("rmse_a").get<double>()});
            }
        }
        res.rows.push_back(std::move(row));
    }
    return res.table();
}

std::string rebuild_fig2_table(const fs::path& path) {
    std::ifstream f(path);
    std::string line;
    VulnerabilityResult res;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        json j = json::parse(line);
        if (j.contains("spearman")) {
            res.spearman_corr = j["spearman"].get<double>();
            continue;
        }
        VulnerabilityGroup g;
        g.percentile = j.at("percentile").get<double>();
        g.mae_clean = j.at("mae_clean").get<double>();
        g.mae_attacked = j.at("mae_attacked").get<double>();
        g.mae_reference = j.at("mae_reference").get<double>();
        g.mae_diff = j.at("mae_diff").get<double>();
        g.group_size = j.at("group_size").get<int>();
        res.groups.push_back(g);
    }
    return fig2_table(res);
}

int cmd_report(const std::string& dir_opt) {
    fs::path dir = dir_opt.empty() ? fs::path(artifact_root()) : fs::path(dir_opt);
    std::string out;
    for (const fs::path& base : {dir, dir / "eval"}) {
        if (fs::exists(base / "metrics.jsonl")) {
            MetricsReport rep = load_metrics_jsonl((base / "metrics.jsonl").string());
            out += "== metrics (" + (base / "metrics.jsonl").string() + ") ==\n";
            out += rep.table();
        }
    }
    for (const fs::path& base : {dir, dir / "sweep"}) {
        if (fs::exists(base / "sweep.jsonl")) {
            out += "== sweep (" + (base / "sweep.jsonl").string() + ") ==\n";
            out += rebuild_sweep_table(base / "sweep.jsonl");
        }
    }
    for (const fs::path& base : {dir, dir / "fig2"}) {
        if (fs::exists(base / "fig2.jsonl")) {
            out += "== vulnerability (" + (base / "fig2.jsonl").string() + ") ==\n";
            out += rebuild_fig2_table(base / "fig2.jsonl");
        }
    }
    if (out.empty()) {
        throw Error(ErrorKind::search,
                    "no metrics.jsonl, sweep.jsonl, or fig2.jsonl under " + dir.string());
    }
    write_text(dir / "report.txt", out);
    std::fputs(out.c_str(), stdout);
    return 0;
}

}  // namespace

std::string artifact_root() {
    const char* env = std::getenv("BACKTIME_ARTIFACT_ROOT");
    if (env && *env) return env;
    return "artifacts";
}

int run_cli(int argc, const char* const* argv) {
    CLI::App app{"backdoor attacks on multivariate time series forecasting"};
    app.require_subcommand(1);
    bool quiet = false;
    app.add_flag("--quiet,-q", quiet, "Silence notice output on stderr");

    ConfigOpts poison_opts;
    CLI::App* poison = app.add_subcommand("poison", "Run the bi-level attack, write artifacts");
    add_config_opts(poison, poison_opts, "<root>/poison");

    PoisonDirOpts tv_opts;
    CLI::App* train_cmd =
        app.add_subcommand("train-victim", "Train the clean/poisoned victim pair");
    add_poison_dir_opts(train_cmd, tv_opts, "<root>/victims");

    PoisonDirOpts eval_opts;
    bool no_baselines = false;
    CLI::App* eval_cmd =
        app.add_subcommand("eval", "Train victims and report clean/attack metrics");
    add_poison_dir_opts(eval_cmd, eval_opts, "<root>/eval");
    eval_cmd->add_flag("--no-baselines", no_baselines, "Skip the baseline attacks");

    PoisonDirOpts stealth_opts;
    CLI::App* stealth_cmd =
        app.add_subcommand("stealth", "Residual-detector stealth check of the poisoned set");
    add_poison_dir_opts(stealth_cmd, stealth_opts, "<root>/stealth");

    ConfigOpts fig2_opts;
    int fig2_groups = 10;
    CLI::App* fig2_cmd = app.add_subcommand(
        "experiment-fig2", "Natural vulnerability by clean-error percentile groups");
    add_config_opts(fig2_cmd, fig2_opts, "<root>/fig2");
    fig2_cmd->add_option("--groups", fig2_groups, "Percentile group count")
        ->capture_default_str();

    ConfigOpts sweep_opts;
    std::string sweep_axis = "temporal_rate";
    std::string sweep_values;
    CLI::App* sweep_cmd =
        app.add_subcommand("sweep", "Re-run the full pipeline across one attack-rate axis");
    add_config_opts(sweep_cmd, sweep_opts, "<root>/sweep");
    sweep_cmd->add_option("--axis", sweep_axis, "temporal_rate or spatial_rate")
        ->capture_default_str();
    sweep_cmd->add_option("--values", sweep_values, "Comma-separated rates")->required();

    std::string report_dir;
    CLI::App* report_cmd =
        app.add_subcommand("report", "Re-render tables from stored artifacts");
    report_cmd->add_option("--dir", report_dir, "Artifact directory (default: <root>)");

    for (CLI::App* sub : app.get_subcommands({})) sub->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }
    log::set_quiet(quiet);

    try {
        if (app.got_subcommand(poison)) return cmd_poison(poison_opts);
        if (app.got_subcommand(train_cmd)) return cmd_train_victim(tv_opts);
        if (app.got_subcommand(eval_cmd)) return cmd_eval(eval_opts, no_baselines);
        if (app.got_subcommand(stealth_cmd)) return cmd_stealth(stealth_opts);
        if (app.got_subcommand(fig2_cmd)) return cmd_fig2(fig2_opts, fig2_groups);
        if (app.got_subcommand(sweep_cmd)) return cmd_sweep(sweep_opts, sweep_axis, sweep_values);
        if (app.got_subcommand(report_cmd)) return cmd_report(report_dir);
    } catch (const Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return static_cast<int>(e.kind());
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}

}  // namespace backtime
