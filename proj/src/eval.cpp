#include "backtime/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include "json.hpp"

#include "backtime/error.hpp"

namespace backtime {

double windows_mae(const ForecastModel& model, const Mat& values, const std::vector<int>& ts) {
    if (ts.empty()) throw Error(ErrorKind::degenerate, "windows_mae: no windows");
    const int t_in = model.window().input_len;
    const int t_out = model.window().output_len;
    double acc = 0.0;
    long cells = 0;
    for (int t : ts) {
        Mat pred = model.predict(values.slice_rows(t - t_in, t));
        Mat target = values.slice_rows(t, t + t_out);
        for (int i = 0; i < pred.size(); ++i) acc += std::fabs(pred.data()[i] - target.data()[i]);
        cells += pred.size();
    }
    return acc / static_cast<double>(cells);
}

std::pair<double, double> evaluate_clean(const ForecastModel& model, const Mat& values,
                                         const std::vector<int>& test_ts) {
    if (test_ts.empty()) throw Error(ErrorKind::degenerate, "evaluate_clean: no test windows");
    const int t_in = model.window().input_len;
    const int t_out = model.window().output_len;
    double abs_acc = 0.0, sq_acc = 0.0;
    long cells = 0;
    for (int t : test_ts) {
        Mat pred = model.predict(values.slice_rows(t - t_in, t));
        Mat target = values.slice_rows(t, t + t_out);
        for (int i = 0; i < pred.size(); ++i) {
            double d = pred.data()[i] - target.data()[i];
            abs_acc += std::fabs(d);
            sq_acc += d * d;
        }
        cells += pred.size();
    }
    return {abs_acc / cells, std::sqrt(sq_acc / cells)};
}

AttackEvalInputs prepare_attack_inputs(const Mat& values, Range test,
                                       const std::vector<int>& targets, const AttackConfig& cfg,
                                       const WindowSpec& window, const TriggerSource& source,
                                       int num_points, uint64_t seed) {
    if (num_points < 1) throw Error(ErrorKind::config, "attack eval needs at least one point");
    if (targets.empty()) throw Error(ErrorKind::config, "attack eval: no target variables");
    int lo = test.begin + std::max(min_poison_timestamp(cfg), window.input_len);
    int hi = test.end - std::max(cfg.pattern_len, window.output_len);
    std::vector<int> candidates;
    for (int t = lo; t <= hi; ++t) candidates.push_back(t);
    if (candidates.empty()) {
        throw Error(ErrorKind::boundary, "test range too short to host any attack point");
    }
    Rng rng(seed);
    for (int i = static_cast<int>(candidates.size()) - 1; i > 0; --i) {
        int j = rng.uniform_int(i + 1);
        std::swap(candidates[i], candidates[j]);
    }
    std::vector<int> points;
    for (int t : candidates) {
        if (static_cast<int>(points.size()) == num_points) break;
        bool clash = false;
        for (int u : points) {
            if (std::abs(t - u) < cfg.spacing()) {
                clash = true;
                break;
            }
        }
        if (!clash) points.push_back(t);
    }
    if (static_cast<int>(points.size()) < num_points) {
        log::notice("attack eval: only " + std::to_string(points.size()) + " of " +
                    std::to_string(num_points) + " points fit the test range");
    }
    std::sort(points.begin(), points.end());

    AttackEvalInputs out{std::move(points), values};
    for (int t : out.points) {
        Mat slab = out.values
                       .slice_rows(t - cfg.pre_window - cfg.trigger_len, t - cfg.trigger_len)
                       .select_cols(targets);
        Trigger g = source(t, slab);
        if (g.values.rows() != cfg.trigger_len ||
            g.values.cols() != static_cast<int>(targets.size())) {
            throw Error(ErrorKind::shape, "trigger source returned a wrong-shaped trigger");
        }
        for (size_t ci = 0; ci < targets.size(); ++ci) {
            double base = out.values(t - cfg.trigger_len - 1, targets[ci]);
            for (int j = 0; j < cfg.trigger_len; ++j) {
                out.values(t - cfg.trigger_len + j, targets[ci]) =
                    base + g.values(j, static_cast<int>(ci));
            }
        }
    }
    return out;
}

std::pair<double, double> evaluate_attack(const ForecastModel& model,
                                          const AttackEvalInputs& inputs,
                                          const std::vector<int>& targets,
                                          const TargetPattern& pattern, const AttackConfig& cfg,
                                          const WindowSpec& window) {
    if (inputs.points.empty()) throw Error(ErrorKind::degenerate, "evaluate_attack: no points");
    if (static_cast<int>(pattern.values.size()) != cfg.pattern_len) {
        throw Error(ErrorKind::shape, "evaluate_attack: pattern length mismatch");
    }
    double abs_acc = 0.0, sq_acc = 0.0;
    long cells = 0;
    for (int t : inputs.points) {
        Mat pred = model.predict(inputs.values.slice_rows(t - window.input_len, t));
        for (size_t ci = 0; ci < targets.size(); ++ci) {
            double base = inputs.values(t - cfg.trigger_len - 1, targets[ci]);
            for (int j = 0; j < cfg.pattern_len; ++j) {
                double d = pred(j, targets[ci]) - (base + pattern.values[j]);
                abs_acc += std::fabs(d);
                sq_acc += d * d;
                ++cells;
            }
        }
    }
    return {abs_acc / cells, std::sqrt(sq_acc / cells)};
}

MetricsRow MetricsReport::averaged() const {
    if (rows.empty()) throw Error(ErrorKind::degenerate, "metrics report has no rows");
    MetricsRow avg;
    avg.model = "averaged";
    for (const MetricsRow& r : rows) {
        avg.mae_c += r.mae_c;
        avg.rmse_c += r.rmse_c;
        avg.mae_a += r.mae_a;
        avg.rmse_a += r.rmse_a;
    }
    double n = static_cast<double>(rows.size());
    avg.mae_c /= n;
    avg.rmse_c /= n;
    avg.mae_a /= n;
    avg.rmse_a /= n;
    return avg;
}

namespace {

std::string fmt_cell(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%10.6f", v);
    return buf;
}

void append_row(std::ostringstream& os, const MetricsRow& r) {
    os << r.model;
    for (size_t pad = r.model.size(); pad < 12; ++pad) os << ' ';
    os << fmt_cell(r.mae_c) << fmt_cell(r.rmse_c) << fmt_cell(r.mae_a) << fmt_cell(r.rmse_a)
       << "\n";
}

}  // namespace

std::string MetricsReport::table() const {
    std::ostringstream os;
    os << "model       " << "     mae_c" << "    rmse_c" << "     mae_a" << "    rmse_a" << "\n";
    for (const MetricsRow& r : rows) append_row(os, r);
    append_row(os, averaged());
    return os.str();
}

void save_metrics_jsonl(const MetricsReport& report, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error(ErrorKind::config, "cannot open metrics file for writing: " + path);
    auto dump_row = [&](const MetricsRow& r) {
        nlohmann::json j;
        j["model"] = r.model;
        j["mae_c"] = r.mae_c;
        j["rmse_c"] = r.rmse_c;
        j["mae_a"] = r.mae_a;
        j["rmse_a"] = r.rmse_a;
        j["seed"] = report.seed;
        j["config_hash"] = report.config_hash;
        out << j.dump() << "\n";
    };
    for (const MetricsRow& r : report.rows) dump_row(r);
    dump_row(report.averaged());
}

MetricsReport load_metrics_jsonl(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::config, "cannot open metrics file: " + path);
    MetricsReport report;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const std::exception& e) {
            throw Error(ErrorKind::parse,
                        "metrics line " + std::to_string(line_no) + ": " + e.what());
        }
        MetricsRow r;
        r.model = j.at("model").get<std::string>();
        r.mae_c = j.at("mae_c").get<double>();
        r.rmse_c = j.at("rmse_c").get<double>();
        r.mae_a = j.at("mae_a").get<double>();
        r.rmse_a = j.at("rmse_a").get<double>();
        report.seed = j.value("seed", 0ULL);
        report.config_hash = j.value("config_hash", std::string());
        if (r.model == "averaged") continue;  // recomputed on demand
        report.rows.push_back(std::move(r));
    }
    if (report.rows.empty()) throw Error(ErrorKind::parse, "metrics file has no rows: " + path);
    return report;
}

namespace {

std::vector<double> average_ranks(const std::vector<double>& x) {
    int n = static_cast<int>(x.size());
    std::vector<int> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) { return x[a] < x[b]; });
    std::vector<double> ranks(n, 0.0);
    int i = 0;
    while (i < n) {
        int j = i;
        while (j + 1 < n && x[idx[j + 1]] == x[idx[i]]) ++j;
        double r = 0.5 * (i + j) + 1.0;  // 1-based average rank of the tie run
        for (int k = i; k <= j; ++k) ranks[idx[k]] = r;
        i = j + 1;
    }
    return ranks;
}

}  // namespace

double auc_score(const std::vector<double>& scores, const std::vector<int>& labels) {
    if (scores.size() != labels.size() || scores.empty()) {
        throw Error(ErrorKind::shape, "auc: scores and labels must align and be nonempty");
    }
    long pos = 0;
    for (int l : labels) {
        if (l != 0 && l != 1) throw Error(ErrorKind::config, "auc: labels must be 0/1");
        pos += l;
    }
    long neg = static_cast<long>(labels.size()) - pos;
    if (pos == 0 || neg == 0) {
        throw Error(ErrorKind::degenerate, "auc undefined: only one class present");
    }
    std::vector<double> ranks = average_ranks(scores);
    double rank_sum = 0.0;
    for (size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] == 1) rank_sum += ranks[i];
    }
    double u = rank_sum - 0.5 * static_cast<double>(pos) * (pos + 1);
    return u / (static_cast<double>(pos) * static_cast<double>(neg));
}

F1Result best_f1(const std::vector<double>& scores, const std::vector<int>& labels) {
    if (scores.size() != labels.size() || scores.empty()) {
        throw Error(ErrorKind::shape, "f1: scores and labels must align and be nonempty");
    }
    long total_pos = 0;
    for (int l : labels) total_pos += l;
    if (total_pos == 0) throw Error(ErrorKind::degenerate, "f1 undefined: no positives");
    std::vector<int> idx(scores.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(),
                     [&](int a, int b) { return scores[a] > scores[b]; });
    F1Result best{0.0, scores[idx[0]] + 1.0};
    long tp = 0, fp = 0;
    for (size_t i = 0; i < idx.size(); ++i) {
        if (labels[idx[i]] == 1) ++tp;
        else ++fp;
        if (i + 1 < idx.size() && scores[idx[i + 1]] == scores[idx[i]]) continue;
        double f1 = 2.0 * tp / static_cast<double>(2 * tp + fp + (total_pos - tp));
        if (f1 > best.f1) best = {f1, scores[idx[i]]};
    }
    return best;
}

double spearman(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size() || a.size() < 2) {
        throw Error(ErrorKind::shape, "spearman needs two aligned series of length >= 2");
    }
    std::vector<double> ra = average_ranks(a);
    std::vector<double> rb = average_ranks(b);
    double ma = 0.0, mb = 0.0;
    for (size_t i = 0; i < ra.size(); ++i) {
        ma += ra[i];
        mb += rb[i];
    }
    ma /= ra.size();
    mb /= rb.size();
    double cov = 0.0, va = 0.0, vb = 0.0;
    for (size_t i = 0; i < ra.size(); ++i) {
        cov += (ra[i] - ma) * (rb[i] - mb);
        va += (ra[i] - ma) * (ra[i] - ma);
        vb += (rb[i] - mb) * (rb[i] - mb);
    }
    if (va == 0.0 || vb == 0.0) {
        log::notice("spearman: zero rank variance, reporting 0");
        return 0.0;
    }
    return cov / std::sqrt(va * vb);
}

StealthReport stealth_eval(const Mat& poisoned_values, const Mat& mask, Range train, Range test,
                           const WindowSpec& window, int hidden, int epochs, uint64_t seed) {
    if (!poisoned_values.same_shape(mask)) {
        throw Error(ErrorKind::shape, "stealth: mask and values shapes differ");
    }
    std::vector<int> test_ts = window_timestamps(test, window);
    if (test_ts.empty()) throw Error(ErrorKind::degenerate, "stealth: no detector windows");
    ForecastModel detector(Arch::mlp, window, poisoned_values.cols(), hidden, seed);
    Adam opt(AdamConfig{1e-3, 0.9, 0.999, 1e-8});
    Rng rng(seed + 1);
    TrainConfig tc;
    tc.epochs = epochs;
    tc.lr = 1e-3;
    train_model(detector, opt, poisoned_values, test_ts, tc, rng);

    std::vector<double> scores;
    std::vector<int> labels;
    for (int u : window_timestamps(train, window)) {
        Mat pred = detector.predict(poisoned_values.slice_rows(u - window.input_len, u));
        double err = 0.0;
        for (int c = 0; c < poisoned_values.cols(); ++c) {
            err += std::fabs(pred(0, c) - poisoned_values(u, c));
        }
        scores.push_back(err / poisoned_values.cols());
        int label = 0;
        for (int c = 0; c < mask.cols(); ++c) {
            if (mask(u, c) != 0.0) {
                label = 1;
                break;
            }
        }
        labels.push_back(label);
    }
    StealthReport rep;
    rep.detector = "residual-mlp";
    rep.auc = auc_score(scores, labels);
    F1Result f1 = best_f1(scores, labels);
    rep.f1 = f1.f1;
    rep.threshold = f1.threshold;
    return rep;
}

VulnerabilityResult vulnerability_experiment(const Mat& values, Range train,
                                             const WindowSpec& window, const AttackConfig& cfg,
                                             const TargetPattern& pattern,
                                             const VulnerabilityConfig& vcfg, uint64_t seed) {
    if (vcfg.num_groups < 2) throw Error(ErrorKind::config, "need at least two groups");
    if (static_cast<int>(vcfg.trigger_profile.size()) != cfg.trigger_len) {
        throw Error(ErrorKind::shape, "trigger profile length must equal trigger_len");
    }
    std::vector<int> train_ts = window_timestamps(train, window);
    int per_group = static_cast<int>(train_ts.size()) / vcfg.num_groups;
    if (per_group < 1) {
        throw Error(ErrorKind::degenerate, "too few training windows for the requested groups");
    }

    const int n = values.cols();
    ForecastModel clean_model(vcfg.arch, window, n, vcfg.hidden, seed);
    Adam clean_opt(AdamConfig{vcfg.lr, 0.9, 0.999, 1e-8});
    Rng rng(seed + 1);
    TrainConfig tc;
    tc.epochs = vcfg.epochs;
    tc.lr = vcfg.lr;
    tc.batch_size = vcfg.batch_size;
    train_model(clean_model, clean_opt, values, train_ts, tc, rng);

    std::map<int, double> scores = evaluate(clean_model, values, train_ts, Metric::mae);
    std::vector<int> ordered = train_ts;
    std::stable_sort(ordered.begin(), ordered.end(),
                     [&](int a, int b) { return scores.at(a) < scores.at(b); });

    Trigger trig{Mat(cfg.trigger_len, n, 0.0)};
    for (int j = 0; j < cfg.trigger_len; ++j) {
        for (int c = 0; c < n; ++c) trig.values(j, c) = vcfg.trigger_profile[j];
    }
    std::vector<int> all_vars(n);
    std::iota(all_vars.begin(), all_vars.end(), 0);

    VulnerabilityResult out;
    std::vector<double> percentiles, diffs;
    for (int g = 0; g < vcfg.num_groups; ++g) {
        int lo = g * per_group;
        int hi = (g == vcfg.num_groups - 1) ? static_cast<int>(ordered.size())
                                            : (g + 1) * per_group;
        std::vector<int> group(ordered.begin() + lo, ordered.begin() + hi);
        std::sort(group.begin(), group.end());

        Mat poisoned = values;
        Mat gmask(values.rows(), values.cols(), 0.0);
        for (int t : group) inject(poisoned, gmask, t, all_vars, trig, pattern, cfg);

        VulnerabilityGroup row;
        row.percentile = (g + 0.5) / vcfg.num_groups;
        row.group_size = static_cast<int>(group.size());
        double clean_mae = 0.0;
        for (int t : group) clean_mae += scores.at(t);
        row.mae_clean = clean_mae / group.size();
        if (vcfg.reuse_clean_model) {
            row.mae_attacked = windows_mae(clean_model, poisoned, group);
        } else {
            ForecastModel attacked(vcfg.arch, window, n, vcfg.hidden, seed + 1);
            Adam atk_opt(AdamConfig{vcfg.lr, 0.9, 0.999, 1e-8});
            Rng grng(seed + 2);
            train_model(attacked, atk_opt, poisoned, train_ts, tc, grng);
            row.mae_attacked = windows_mae(attacked, poisoned, group);
        }
        row.mae_reference = windows_mae(clean_model, poisoned, group);
        row.mae_diff = row.mae_attacked - row.mae_reference;
        out.groups.push_back(row);
        percentiles.push_back(row.percentile);
        diffs.push_back(row.mae_diff);
    }
    out.spearman_corr = spearman(percentiles, diffs);
    return out;
}

}  // namespace backtime
