#include "backtime/baselines.hpp"

#include <cmath>
#include <limits>

#include "backtime/error.hpp"

namespace backtime {

BaselineKind baseline_from_string(const std::string& s) {
    if (s == "random") return BaselineKind::random;
    if (s == "inverse") return BaselineKind::inverse;
    if (s == "manhattan") return BaselineKind::manhattan;
    throw Error(ErrorKind::config, "unknown baseline '" + s + "'");
}

std::string baseline_to_string(BaselineKind k) {
    switch (k) {
        case BaselineKind::random: return "random";
        case BaselineKind::inverse: return "inverse";
        case BaselineKind::manhattan: return "manhattan";
    }
    throw Error(ErrorKind::config, "bad baseline tag");
}

RandomBaseline random_baseline(const AttackConfig& cfg, int num_targets, Range train,
                               const WindowSpec& window, uint64_t seed) {
    if (num_targets < 1) throw Error(ErrorKind::config, "random baseline: no target variables");
    Rng rng(seed);
    RandomBaseline out{Trigger{rng.uniform_mat(cfg.trigger_len, num_targets,
                                               -cfg.trigger_budget, cfg.trigger_budget)},
                       {},
                       false};
    std::map<int, double> scores;
    for (int t : window_timestamps(train, window)) scores[t] = rng.uniform();
    TimestampSelection sel = select_timestamps(scores, cfg, train);
    out.timestamps = std::move(sel.timestamps);
    out.shortfall = sel.shortfall;
    return out;
}

Trigger inverse_trigger(const Mat& train_values, const std::vector<int>& targets,
                        const TargetPattern& pattern, const AttackConfig& cfg,
                        const WindowSpec& window, uint64_t seed, int epochs) {
    if (static_cast<int>(pattern.values.size()) != cfg.pattern_len) {
        throw Error(ErrorKind::shape, "inverse baseline: pattern length mismatch");
    }
    if (window.input_len < cfg.pattern_len || window.output_len < cfg.trigger_len) {
        throw Error(ErrorKind::config,
                    "inverse baseline: window too small to hold the pattern and trigger");
    }
    Mat flipped(train_values.rows(), train_values.cols(), 0.0);
    for (int r = 0; r < train_values.rows(); ++r) {
        for (int c = 0; c < train_values.cols(); ++c) {
            flipped(r, c) = train_values(train_values.rows() - 1 - r, c);
        }
    }
    ForecastModel reversed(Arch::tiny_attention, window, train_values.cols(), 64, seed);
    Adam opt(AdamConfig{});
    Rng rng(seed + 1);
    TrainConfig tc;
    tc.epochs = epochs;
    std::vector<int> ts = window_timestamps(Range{0, flipped.rows()}, window);
    if (ts.empty()) throw Error(ErrorKind::degenerate, "inverse baseline: no training windows");
    train_model(reversed, opt, flipped, ts, tc, rng);

    // In reversed time the pattern immediately precedes the trigger, so the
    // query history carries the reversed pattern in its most recent rows.
    Mat query(window.input_len, train_values.cols(), 0.0);
    for (int j = 0; j < cfg.pattern_len; ++j) {
        double v = pattern.values[cfg.pattern_len - 1 - j];
        for (int c : targets) query(window.input_len - cfg.pattern_len + j, c) = v;
    }
    Mat pred = reversed.predict(query);
    Trigger g{Mat(cfg.trigger_len, static_cast<int>(targets.size()), 0.0)};
    for (int j = 0; j < cfg.trigger_len; ++j) {
        for (size_t i = 0; i < targets.size(); ++i) {
            g.values(j, static_cast<int>(i)) = pred(cfg.trigger_len - 1 - j, targets[i]);
        }
    }
    if (!g.values.all_finite()) {
        throw Error(ErrorKind::divergence, "inverse baseline produced non-finite trigger values");
    }
    return g;
}

ManhattanResult manhattan_trigger(const Mat& train_values, const std::vector<int>& targets,
                                  const TargetPattern& pattern, const AttackConfig& cfg,
                                  Range train) {
    if (static_cast<int>(pattern.values.size()) != cfg.pattern_len) {
        throw Error(ErrorKind::shape, "manhattan baseline: pattern length mismatch");
    }
    int lo = train.begin + cfg.trigger_len + 1;
    int hi = train.end - cfg.pattern_len;  // inclusive last segment start
    if (train.end > train_values.rows()) {
        throw Error(ErrorKind::boundary, "manhattan baseline: range outside the series");
    }
    if (lo > hi) {
        throw Error(ErrorKind::search,
                    "manhattan baseline: training range too short for any candidate segment");
    }
    ManhattanResult out{Trigger{Mat(cfg.trigger_len, static_cast<int>(targets.size()), 0.0)},
                        std::vector<int>(targets.size(), -1),
                        std::vector<double>(targets.size(), 0.0)};
    for (size_t vi = 0; vi < targets.size(); ++vi) {
        int v = targets[vi];
        if (v < 0 || v >= train_values.cols()) {
            throw Error(ErrorKind::boundary, "manhattan baseline: variable index out of range");
        }
        double best = std::numeric_limits<double>::infinity();
        int best_u = -1;
        for (int u = lo; u <= hi; ++u) {
            double base = train_values(u - cfg.trigger_len - 1, v);
            double dist = 0.0;
            for (int j = 0; j < cfg.pattern_len; ++j) {
                dist += std::fabs(train_values(u + j, v) - (base + pattern.values[j]));
            }
            if (dist < best) {
                best = dist;
                best_u = u;
            }
        }
        double base = train_values(best_u - cfg.trigger_len - 1, v);
        for (int j = 0; j < cfg.trigger_len; ++j) {
            out.trigger.values(j, static_cast<int>(vi)) =
                train_values(best_u - cfg.trigger_len + j, v) - base;
        }
        out.segment_starts[vi] = best_u;
        out.distances[vi] = best;
    }
    return out;
}

}  // namespace backtime
