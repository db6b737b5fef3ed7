#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <vector>

#include "backtime/error.hpp"
#include "backtime/threat.hpp"

using namespace backtime;

namespace {

AttackConfig default_attack() {
    AttackConfig cfg;
    cfg.trigger_len = 4;
    cfg.pattern_len = 7;
    cfg.pre_window = 6;
    return cfg;
}

MtsDataset flat_dataset(int rows, int cols, double value) {
    return MtsDataset{Mat(rows, cols, value), std::vector<std::string>(cols, "v")};
}

}  // namespace

TEST_CASE("eta identity is the identity on [0, 1]") {
    CHECK(eta_apply(EtaKind::identity, 0.0) == 0.0);
    CHECK(eta_apply(EtaKind::identity, 1.0) == 1.0);
    CHECK(eta_apply(EtaKind::identity, 0.37) == 0.37);
}

TEST_CASE("named pattern shapes peak at the pattern budget") {
    AttackConfig cfg = default_attack();
    for (PatternShape shape :
         {PatternShape::cone, PatternShape::upward_trend, PatternShape::up_and_down}) {
        TargetPattern p = make_pattern(shape, cfg);
        REQUIRE(static_cast<int>(p.values.size()) == cfg.pattern_len);
        double peak = 0.0;
        for (double v : p.values) peak = std::max(peak, std::fabs(v));
        CHECK(peak == doctest::Approx(cfg.pattern_budget).epsilon(1e-12));
    }
}

TEST_CASE("cone rises then falls, trend is monotone, zigzag overshoots both ways") {
    AttackConfig cfg = default_attack();
    TargetPattern cone = make_pattern(PatternShape::cone, cfg);
    auto peak_it = std::max_element(cone.values.begin(), cone.values.end());
    CHECK(peak_it != cone.values.begin());
    CHECK(peak_it != cone.values.end() - 1);
    CHECK(cone.values.front() == doctest::Approx(cone.values.back()).epsilon(1e-12));

    TargetPattern trend = make_pattern(PatternShape::upward_trend, cfg);
    for (size_t i = 1; i < trend.values.size(); ++i) CHECK(trend.values[i] >= trend.values[i - 1]);
    CHECK(trend.values.back() == doctest::Approx(cfg.pattern_budget).epsilon(1e-12));

    TargetPattern zig = make_pattern(PatternShape::up_and_down, cfg);
    CHECK(*std::max_element(zig.values.begin(), zig.values.end()) > 0.0);
    CHECK(*std::min_element(zig.values.begin(), zig.values.end()) < 0.0);
    CHECK(zig.values.back() < zig.values.front());
}

TEST_CASE("patterns over budget are rejected") {
    AttackConfig cfg = default_attack();
    std::vector<double> too_big(cfg.pattern_len, cfg.pattern_budget + 0.01);
    CHECK_THROWS_AS(TargetPattern::checked(too_big, PatternShape::custom, cfg), Error);
    std::vector<double> wrong_len(cfg.pattern_len - 1, 0.1);
    CHECK_THROWS_AS(TargetPattern::checked(wrong_len, PatternShape::custom, cfg), Error);
}

TEST_CASE("timestamp selection takes the highest errors under spacing") {
    AttackConfig cfg = default_attack();  // spacing = 11
    cfg.temporal_rate = 0.5;              // quota = ceil(0.5 * 4) = 2
    std::map<int, double> errors{{10, 5.0}, {20, 4.0}, {30, 3.0}, {40, 2.0}};
    TimestampSelection sel = select_timestamps(errors, cfg, Range{0, 60});
    REQUIRE(sel.timestamps.size() == 2);
    CHECK(sel.timestamps[0] == 10);  // highest error
    CHECK(sel.timestamps[1] == 30);  // 20 skipped, within 11 steps of 10
    CHECK_FALSE(sel.shortfall);
}

TEST_CASE("timestamp selection reports a shortfall when spacing blocks the quota") {
    AttackConfig cfg = default_attack();
    cfg.temporal_rate = 1.0;  // quota = 3, but all candidates overlap
    std::map<int, double> errors{{12, 3.0}, {14, 2.0}, {16, 1.0}};
    TimestampSelection sel = select_timestamps(errors, cfg, Range{0, 60});
    CHECK(sel.timestamps == std::vector<int>{12});
    CHECK(sel.shortfall);
}

TEST_CASE("timestamp selection ties break toward the earlier timestamp") {
    AttackConfig cfg = default_attack();
    cfg.temporal_rate = 0.25;  // quota = 1
    std::map<int, double> errors{{25, 2.0}, {30, 2.0}, {45, 2.0}, {50, 1.0}};
    TimestampSelection sel = select_timestamps(errors, cfg, Range{0, 80});
    CHECK(sel.timestamps == std::vector<int>{25});
}

TEST_CASE("timestamps outside the legal hosting range are never selected") {
    AttackConfig cfg = default_attack();
    cfg.temporal_rate = 1.0;
    // 5 is before the first legal host, 58 leaves no room for the pattern
    std::map<int, double> errors{{5, 9.0}, {30, 1.0}, {58, 9.0}};
    TimestampSelection sel = select_timestamps(errors, cfg, Range{0, 60});
    CHECK(sel.timestamps == std::vector<int>{30});
}

TEST_CASE("variable selection validates a given set") {
    AttackConfig cfg = default_attack();
    cfg.spatial_rate = 0.5;
    MtsDataset ds = flat_dataset(30, 4, 1.0);
    std::vector<int> vars = select_variables(ds, cfg, VariableMode::given, 1, {3, 1});
    CHECK(vars == std::vector<int>{1, 3});  // sorted on the way out

    CHECK_THROWS_AS(select_variables(ds, cfg, VariableMode::given, 1, {1, 1}), Error);
    CHECK_THROWS_AS(select_variables(ds, cfg, VariableMode::given, 1, {4}), Error);
    CHECK_THROWS_AS(select_variables(ds, cfg, VariableMode::given, 1, {}), Error);
    // one variable of four is below the 0.5 spatial rate
    CHECK_THROWS_AS(select_variables(ds, cfg, VariableMode::given, 1, {2}), Error);
}

TEST_CASE("random variable selection draws ceil(rate * N) distinct variables") {
    AttackConfig cfg = default_attack();
    cfg.spatial_rate = 0.5;
    MtsDataset ds = flat_dataset(30, 8, 1.0);
    std::vector<int> a = select_variables(ds, cfg, VariableMode::random, 42);
    std::vector<int> b = select_variables(ds, cfg, VariableMode::random, 42);
    std::vector<int> c = select_variables(ds, cfg, VariableMode::random, 43);
    REQUIRE(a.size() == 4);
    CHECK(a == b);
    CHECK(std::is_sorted(a.begin(), a.end()));
    CHECK(std::adjacent_find(a.begin(), a.end()) == a.end());
    for (int v : a) CHECK((v >= 0 && v < 8));
    CHECK_FALSE(a == c);
}

TEST_CASE("injection overwrites base plus offsets on the planned cells") {
    AttackConfig cfg = default_attack();
    Mat values(40, 3, 10.0);
    Mat mask(40, 3, 0.0);
    Trigger g{Mat(4, 2, 0.0)};
    g.values(0, 0) = -0.05;
    g.values(1, 0) = 0.05;
    g.values(2, 0) = -0.05;
    g.values(3, 0) = 0.05;
    TargetPattern p = make_pattern(PatternShape::cone, cfg);
    const int t = 20;
    inject(values, mask, t, {0, 2}, g, p, cfg);

    CHECK(values(t - 4, 0) == doctest::Approx(9.95).epsilon(1e-12));
    CHECK(values(t - 3, 0) == doctest::Approx(10.05).epsilon(1e-12));
    CHECK(values(t - 2, 0) == doctest::Approx(9.95).epsilon(1e-12));
    CHECK(values(t - 1, 0) == doctest::Approx(10.05).epsilon(1e-12));
    for (int j = 0; j < cfg.pattern_len; ++j) {
        CHECK(values(t + j, 0) == doctest::Approx(10.0 + p.values[j]).epsilon(1e-12));
        CHECK(values(t + j, 2) == doctest::Approx(10.0 + p.values[j]).epsilon(1e-12));
    }
    // untouched column and rows
    for (int i = 0; i < 40; ++i) CHECK(values(i, 1) == 10.0);
    CHECK(values(t - 5, 0) == 10.0);
    CHECK(values(t + cfg.pattern_len, 0) == 10.0);

    int marked = 0;
    for (int i = 0; i < 40; ++i)
        for (int j = 0; j < 3; ++j) marked += mask(i, j) == 1.0 ? 1 : 0;
    CHECK(marked == (4 + 7) * 2);
}

TEST_CASE("injection bounds are enforced") {
    AttackConfig cfg = default_attack();
    Mat values(20, 2, 1.0);
    Mat mask(20, 2, 0.0);
    Trigger g{Mat(4, 1, 0.1)};
    TargetPattern p = make_pattern(PatternShape::cone, cfg);
    CHECK_THROWS_AS(inject(values, mask, 4, {0}, g, p, cfg), Error);   // base row below 0
    CHECK_THROWS_AS(inject(values, mask, 19, {0}, g, p, cfg), Error);  // pattern past the end
    CHECK_THROWS_AS(inject(values, mask, 10, {5}, g, p, cfg), Error);  // bad variable
}

TEST_CASE("soft identification matches the closed form") {
    AttackConfig cfg = default_attack();
    WindowSpec w{12, 12};
    PoisonPlan plan;
    plan.timestamps = {50};
    plan.target_variables = {0};
    CHECK(soft_identification(50, plan, cfg, w) == doctest::Approx(1.0));
    CHECK(soft_identification(53, plan, cfg, w) == doctest::Approx(4.0 / 7.0));
    CHECK(soft_identification(56, plan, cfg, w) == doctest::Approx(1.0 / 7.0));
    CHECK(soft_identification(57, plan, cfg, w) == 0.0);
    CHECK(soft_identification(49, plan, cfg, w) == 0.0);  // trigger not fully in history
    CHECK(soft_identification(44, plan, cfg, w) == 0.0);
}

TEST_CASE("soft identification requires the whole trigger in the history window") {
    AttackConfig cfg = default_attack();
    WindowSpec w{6, 12};  // short history: trigger leaves the window quickly
    PoisonPlan plan;
    plan.timestamps = {30};
    plan.target_variables = {0};
    // at t_i = 33 the trigger rows [26, 30) start before the window [27, 33)
    CHECK(soft_identification(32, plan, cfg, w) == doctest::Approx(5.0 / 7.0));
    CHECK(soft_identification(33, plan, cfg, w) == 0.0);
}

TEST_CASE("budget checks report the offending entry") {
    AttackConfig cfg = default_attack();
    Mat g(4, 2, 0.0);
    g(2, 1) = 0.25;
    BudgetReport rep = check_budgets(g, {0.0, 0.1}, cfg);
    CHECK_FALSE(rep.ok());
    CHECK_FALSE(rep.trigger_ok);
    CHECK(rep.pattern_ok);
    CHECK(rep.trigger_offender_row == 2);
    CHECK(rep.trigger_offender_col == 1);
    CHECK(rep.trigger_max_abs == doctest::Approx(0.25));

    BudgetReport ok = check_budgets(Mat(4, 2, 0.1), {0.4, -0.4}, cfg);
    CHECK(ok.ok());
}

TEST_CASE("poison plans validate spacing, range, and variables") {
    AttackConfig cfg = default_attack();
    PoisonPlan plan;
    plan.timestamps = {12, 23, 40};
    plan.target_variables = {0, 2};
    plan.validate(cfg, 60, 4);  // fine

    PoisonPlan close = plan;
    close.timestamps = {12, 20};
    CHECK_THROWS_AS(close.validate(cfg, 60, 4), Error);

    PoisonPlan early = plan;
    early.timestamps = {5};
    CHECK_THROWS_AS(early.validate(cfg, 60, 4), Error);

    PoisonPlan no_vars = plan;
    no_vars.target_variables = {};
    CHECK_THROWS_AS(no_vars.validate(cfg, 60, 4), Error);

    PoisonPlan unsorted = plan;
    unsorted.target_variables = {2, 0};
    CHECK_THROWS_AS(unsorted.validate(cfg, 60, 4), Error);
}

TEST_CASE("building a poisoned dataset equals replaying inject by hand") {
    AttackConfig cfg = default_attack();
    cfg.spatial_rate = 0.5;
    SyntheticSpec spec;
    spec.num_variables = 4;
    spec.time_span = 500;
    MtsDataset ds = generate_synthetic(spec, 31);
    PoisonPlan plan;
    plan.timestamps = {40, 60, 100};
    plan.target_variables = {1, 2};
    TargetPattern p = make_pattern(PatternShape::cone, cfg);

    std::map<int, Trigger> triggers;
    Trigger g{Mat(cfg.trigger_len, 2, 0.0)};
    g.values(0, 0) = 0.2;
    g.values(3, 1) = -0.2;
    for (int t : plan.timestamps) triggers[t] = g;

    PoisonedDataset pd = build_poisoned_dataset(ds, plan, triggers, p, cfg);

    Mat manual = ds.values;
    Mat mask(ds.time_span(), ds.num_variables(), 0.0);
    for (int t : plan.timestamps) inject(manual, mask, t, plan.target_variables, g, p, cfg);
    CHECK(pd.data.values == manual);
    CHECK(pd.mask == mask);
    CHECK(pd.plan.timestamps == plan.timestamps);

    std::map<int, Trigger> missing = {{40, g}, {60, g}};
    CHECK_THROWS_AS(build_poisoned_dataset(ds, plan, missing, p, cfg), Error);
}

TEST_CASE("attack config knows its minimum legal timestamp") {
    AttackConfig cfg = default_attack();
    CHECK(min_poison_timestamp(cfg) == cfg.trigger_len + cfg.pre_window);
    CHECK(cfg.spacing() == 11);
}

TEST_CASE("attack config validation rejects triggers wider than the window") {
    AttackConfig cfg = default_attack();
    WindowSpec w{3, 12};  // input_len < trigger_len
    CHECK_THROWS_AS(cfg.validate(w), Error);
    AttackConfig bad = cfg;
    bad.temporal_rate = 1.0;
    CHECK_THROWS_AS(bad.validate(WindowSpec{12, 12}), Error);
    AttackConfig neg = cfg;
    neg.trigger_budget = 0.0;
    CHECK_THROWS_AS(neg.validate(WindowSpec{12, 12}), Error);
}

TEST_CASE("pattern shape names round trip") {
    for (const char* name : {"cone", "upward_trend", "up_and_down", "custom"}) {
        CHECK(pattern_shape_to_string(pattern_shape_from_string(name)) == name);
    }
    CHECK_THROWS_AS(pattern_shape_from_string("wiggle"), Error);
}
