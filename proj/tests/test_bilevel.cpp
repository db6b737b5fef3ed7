#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <fstream>

#include "json.hpp"

#include "backtime/bilevel.hpp"
#include "backtime/error.hpp"
#include "backtime/rng.hpp"

using namespace backtime;

namespace {

struct TinySetup {
    MtsDataset data;
    AttackConfig atk;
    WindowSpec window{8, 8};
    PoisonPlan plan;
    TargetPattern pattern;
    TriggerGenerator gen;
    ForecastModel surrogate;
};

AttackConfig tiny_attack() {
    AttackConfig atk;
    atk.trigger_len = 3;
    atk.pattern_len = 4;
    atk.pre_window = 4;
    atk.temporal_rate = 0.05;
    atk.spatial_rate = 0.5;
    atk.norm_weight = 2.0;
    atk.freq_keep = 12;
    return atk;
}

TinySetup tiny_setup(uint64_t seed) {
    SyntheticSpec spec;
    spec.num_variables = 4;
    spec.time_span = 200;
    spec.noise = 0.1;
    MtsDataset data = generate_synthetic(spec, seed);
    AttackConfig atk = tiny_attack();
    WindowSpec window{8, 8};
    PoisonPlan plan;
    plan.timestamps = {30, 37, 60, 90, 120};  // 30 and 37 sit exactly at spacing
    plan.target_variables = {0, 2};
    TargetPattern pattern = make_pattern(PatternShape::cone, atk);
    Mat features = TriggerGenerator::spectral_features(
        data.values.slice_rows(0, 150), plan.target_variables, atk.freq_keep);
    GeneratorConfig gcfg;
    gcfg.hidden = 8;
    gcfg.embed_dim = 4;
    TriggerGenerator gen(atk, gcfg, std::move(features), seed + 2);
    ForecastModel surrogate(Arch::mlp, window, 4, 12, seed + 1);
    return TinySetup{std::move(data), atk,       window, std::move(plan),
                     std::move(pattern),         std::move(gen), std::move(surrogate)};
}

}  // namespace

TEST_CASE("schedule validation rejects empty phases and zero step sizes") {
    BilevelSchedule ok;
    ok.validate();
    BilevelSchedule s = ok;
    s.warmup_epochs = 0;
    CHECK_THROWS_AS(s.validate(), Error);
    s = ok;
    s.train_epochs = 0;
    CHECK_THROWS_AS(s.validate(), Error);
    s = ok;
    s.batch_size = 0;
    CHECK_THROWS_AS(s.validate(), Error);
    s = ok;
    s.surrogate_lr = 0.0;
    CHECK_THROWS_AS(s.validate(), Error);
    s = ok;
    s.generator_lr = -1.0;
    CHECK_THROWS_AS(s.validate(), Error);
}

TEST_CASE("attack loss weights decay linearly over the pattern") {
    AttackConfig atk;
    atk.trigger_len = 4;
    atk.pattern_len = 7;
    std::vector<double> w = attack_loss_weights(atk, WindowSpec{12, 12});
    REQUIRE(w.size() == 7);
    for (int j = 0; j < 7; ++j) CHECK(w[j] == doctest::Approx((7.0 - j) / 7.0).epsilon(1e-15));

    // a short input window truncates the usable offsets
    std::vector<double> short_w = attack_loss_weights(atk, WindowSpec{8, 12});
    REQUIRE(short_w.size() == 4);
    CHECK(short_w[3] == doctest::Approx(4.0 / 7.0).epsilon(1e-15));

    CHECK_THROWS_AS(attack_loss_weights(atk, WindowSpec{4, 12}), Error);
}

TEST_CASE("regeneration walks the evolving matrix in plan order") {
    TinySetup s = tiny_setup(11);
    RegeneratedPoison regen =
        regenerate_poisoned(s.gen, s.data.values, s.plan, s.pattern, s.atk);

    Mat vals = s.data.values;
    Mat mask(vals.rows(), vals.cols(), 0.0);
    for (int t : s.plan.timestamps) {
        Mat slab = vals.slice_rows(t - s.atk.pre_window - s.atk.trigger_len, t - s.atk.trigger_len)
                       .select_cols(s.plan.target_variables);
        Trigger g = s.gen.generate(slab);
        inject(vals, mask, t, s.plan.target_variables, g, s.pattern, s.atk);
        CHECK(regen.triggers.at(t).values == g.values);
    }
    CHECK(regen.values == vals);
    CHECK(regen.mask == mask);

    // timestamp 37 sits exactly one spacing after 30, so its slab rows
    // [30, 34) are pattern rows of the previous injection: regeneration must
    // see them poisoned, not clean
    Mat clean_slab = s.data.values.slice_rows(30, 34).select_cols(s.plan.target_variables);
    Mat evolving_slab = regen.values.slice_rows(30, 34).select_cols(s.plan.target_variables);
    CHECK_FALSE(clean_slab == evolving_slab);
    CHECK_FALSE(s.gen.generate(clean_slab).values == regen.triggers.at(37).values);
}

TEST_CASE("the generator step loss matches the detached recomputation") {
    TinySetup s = tiny_setup(13);
    RegeneratedPoison before =
        regenerate_poisoned(s.gen, s.data.values, s.plan, s.pattern, s.atk);

    Adam gen_opt(AdamConfig{0.01, 0.9, 0.999, 1e-8});
    GeneratorStepLosses losses = generator_step(s.gen, gen_opt, s.surrogate, s.data.values,
                                                s.plan, s.pattern, s.atk, s.window);

    double l_atk_oracle =
        attack_loss_value(s.surrogate, before.values, s.plan, s.atk, s.window);
    CHECK(losses.l_atk == doctest::Approx(l_atk_oracle).epsilon(1e-9));

    double norm_acc = 0.0;
    for (const auto& [t, g] : before.triggers) norm_acc += normalization_loss(g);
    CHECK(losses.l_norm ==
          doctest::Approx(norm_acc / before.triggers.size()).epsilon(1e-9));
    CHECK(losses.l_tgr ==
          doctest::Approx(losses.l_atk + s.atk.norm_weight * losses.l_norm).epsilon(1e-12));
}

TEST_CASE("the surrogate step never touches generator state and vice versa") {
    TinySetup s = tiny_setup(17);
    std::vector<int> train_ts = window_timestamps(Range{0, 150}, s.window);
    BilevelSchedule sched;
    sched.batch_size = 32;
    sched.surrogate_lr = 1e-3;

    std::vector<Mat> gen_before;
    for (const ParamBlock& b : s.gen.blocks()) gen_before.push_back(b.value);
    Adam sur_opt(AdamConfig{1e-3, 0.9, 0.999, 1e-8});
    Rng rng(5);
    surrogate_step(s.surrogate, sur_opt, s.data.values, train_ts, sched, rng);
    for (size_t i = 0; i < gen_before.size(); ++i) {
        CHECK(s.gen.blocks()[i].value == gen_before[i]);
    }

    std::vector<Mat> sur_before;
    for (const ParamBlock& b : s.surrogate.blocks()) sur_before.push_back(b.value);
    Adam gen_opt(AdamConfig{0.01, 0.9, 0.999, 1e-8});
    generator_step(s.gen, gen_opt, s.surrogate, s.data.values, s.plan, s.pattern, s.atk,
                   s.window);
    for (size_t i = 0; i < sur_before.size(); ++i) {
        CHECK(s.surrogate.blocks()[i].value == sur_before[i]);
    }
    // and the generator itself must have moved
    bool moved = false;
    for (size_t i = 0; i < gen_before.size(); ++i) {
        if (!(s.gen.blocks()[i].value == gen_before[i])) moved = true;
    }
    CHECK(moved);
}

TEST_CASE("a zero surrogate step size freezes the surrogate bitwise") {
    TinySetup s = tiny_setup(19);
    std::vector<int> train_ts = window_timestamps(Range{0, 150}, s.window);
    BilevelSchedule sched;
    sched.batch_size = 32;
    sched.surrogate_lr = 0.0;
    std::vector<Mat> before;
    for (const ParamBlock& b : s.surrogate.blocks()) before.push_back(b.value);
    Adam opt(AdamConfig{0.5, 0.9, 0.999, 1e-8});
    Rng rng(6);
    surrogate_step(s.surrogate, opt, s.data.values, train_ts, sched, rng);
    for (size_t i = 0; i < before.size(); ++i) {
        CHECK(s.surrogate.blocks()[i].value == before[i]);
    }
}

TEST_CASE("attack loss rejects empty plans and out-of-range windows") {
    TinySetup s = tiny_setup(23);
    PoisonPlan empty;
    empty.target_variables = {0, 2};
    CHECK_THROWS_AS(attack_loss_value(s.surrogate, s.data.values, empty, s.atk, s.window),
                    Error);
    PoisonPlan late;
    late.timestamps = {197};  // t_i + output_len overruns the 200-row series
    late.target_variables = {0, 2};
    CHECK_THROWS_AS(attack_loss_value(s.surrogate, s.data.values, late, s.atk, s.window),
                    Error);
}

TEST_CASE("the full pipeline is deterministic and respects its budgets") {
    SyntheticSpec spec;
    spec.num_variables = 4;
    spec.time_span = 300;
    spec.noise = 0.2;
    MtsDataset data = generate_synthetic(spec, 3);
    AttackConfig atk = tiny_attack();
    WindowSpec window{8, 8};
    TargetPattern pattern = make_pattern(PatternShape::cone, atk);
    GeneratorConfig gcfg;
    gcfg.hidden = 8;
    gcfg.embed_dim = 4;
    BilevelSchedule sched;
    sched.warmup_epochs = 2;
    sched.train_epochs = 3;
    sched.surrogate_lr = 1e-3;
    sched.generator_lr = 0.01;
    sched.batch_size = 32;
    sched.seed = 9;
    Range train{0, 200};
    std::vector<int> targets{0, 2};

    BilevelResult a = run_backtime(data, train, targets, atk, gcfg, sched, window, pattern,
                                   Arch::mlp, 12);
    BilevelResult b = run_backtime(data, train, targets, atk, gcfg, sched, window, pattern,
                                   Arch::mlp, 12);

    CHECK(a.poisoned.data.values == b.poisoned.data.values);
    CHECK(a.poisoned.mask == b.poisoned.mask);
    CHECK(a.poisoned.plan.timestamps == b.poisoned.plan.timestamps);
    REQUIRE(static_cast<int>(a.log.size()) == sched.train_epochs);

    a.poisoned.plan.validate(atk, train.end, data.num_variables());
    RegeneratedPoison final_triggers =
        regenerate_poisoned(a.generator, data.values, a.poisoned.plan, pattern, atk);
    for (const auto& [t, g] : final_triggers.triggers) {
        CHECK(check_budgets(g.values, pattern.values, atk).ok());
    }
    CHECK(final_triggers.values == a.poisoned.data.values);

    // poisoned cells are exactly the masked cells
    int masked = 0;
    for (int r = 0; r < data.time_span(); ++r) {
        for (int c = 0; c < data.num_variables(); ++c) {
            if (a.poisoned.mask(r, c) != 0.0) {
                ++masked;
            } else {
                CHECK(a.poisoned.data.values(r, c) == data.values(r, c));
            }
        }
    }
    CHECK(masked == static_cast<int>(a.poisoned.plan.timestamps.size()) *
                        (atk.trigger_len + atk.pattern_len) * 2);

    // surrogate scores cover every training window
    CHECK(a.surrogate_scores.size() == window_timestamps(train, window).size());
}

TEST_CASE("checkpointing writes one surrogate and generator snapshot per epoch") {
    namespace fs = std::filesystem;
    const std::string dir = "/tmp/backtime_test_ckpt";
    fs::remove_all(dir);
    fs::create_directories(dir);

    SyntheticSpec spec;
    spec.num_variables = 4;
    spec.time_span = 200;
    MtsDataset data = generate_synthetic(spec, 5);
    AttackConfig atk = tiny_attack();
    TargetPattern pattern = make_pattern(PatternShape::cone, atk);
    GeneratorConfig gcfg;
    gcfg.hidden = 8;
    gcfg.embed_dim = 4;
    BilevelSchedule sched;
    sched.warmup_epochs = 1;
    sched.train_epochs = 2;
    sched.surrogate_lr = 1e-3;
    sched.batch_size = 32;
    sched.seed = 2;
    sched.checkpoint_dir = dir;

    run_backtime(data, Range{0, 150}, {0, 2}, atk, gcfg, sched, WindowSpec{8, 8}, pattern,
                 Arch::mlp, 12);
    for (int e = 0; e < 2; ++e) {
        CHECK(fs::exists(dir + "/epoch_" + std::to_string(e) + "_surrogate.json"));
        CHECK(fs::exists(dir + "/epoch_" + std::to_string(e) + "_generator.json"));
    }
    // snapshots are loadable
    auto [model, opt] = load_model_json(dir + "/epoch_1_surrogate.json");
    CHECK(model.arch() == Arch::mlp);
    TriggerGenerator gen = load_generator_json(dir + "/epoch_1_generator.json");
    CHECK(gen.trigger_len() == atk.trigger_len);
    fs::remove_all(dir);
}

TEST_CASE("pipeline inputs are validated up front") {
    SyntheticSpec spec;
    spec.num_variables = 4;
    spec.time_span = 200;
    MtsDataset data = generate_synthetic(spec, 7);
    AttackConfig atk = tiny_attack();
    GeneratorConfig gcfg;
    BilevelSchedule sched;
    WindowSpec window{8, 8};
    TargetPattern pattern = make_pattern(PatternShape::cone, atk);

    TargetPattern wrong = pattern;
    wrong.values.push_back(0.0);
    CHECK_THROWS_AS(run_backtime(data, Range{0, 150}, {0, 2}, atk, gcfg, sched, window, wrong,
                                 Arch::mlp, 12),
                    Error);
    TargetPattern loud = pattern;
    loud.values[1] = atk.pattern_budget * 2.0;
    CHECK_THROWS_AS(run_backtime(data, Range{0, 150}, {0, 2}, atk, gcfg, sched, window, loud,
                                 Arch::mlp, 12),
                    Error);
    CHECK_THROWS_AS(run_backtime(data, Range{0, 10}, {0, 2}, atk, gcfg, sched, window, pattern,
                                 Arch::mlp, 12),
                    Error);
}

TEST_CASE("the training log serializes as one json record per epoch") {
    const std::string path = "/tmp/backtime_test_log.jsonl";
    std::vector<BilevelLogEntry> log(2);
    log[0] = {0, 0.5, 2.0, 0.1, 2.2};
    log[1] = {1, 0.4, 1.5, 0.05, 1.6};
    save_bilevel_log(log, path);

    std::ifstream in(path);
    std::string line;
    int n = 0;
    while (std::getline(in, line)) {
        nlohmann::json j = nlohmann::json::parse(line);
        CHECK(j["epoch"].get<int>() == n);
        CHECK(j.contains("l_cln"));
        CHECK(j.contains("l_atk"));
        CHECK(j.contains("l_norm"));
        CHECK(j.contains("l_tgr"));
        ++n;
    }
    CHECK(n == 2);
    std::remove(path.c_str());
}
