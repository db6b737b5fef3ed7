#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "backtime/error.hpp"
#include "backtime/generator.hpp"
#include "backtime/rng.hpp"

using namespace backtime;

namespace {

constexpr double kPi = 3.14159265358979323846;

AttackConfig small_attack() {
    AttackConfig cfg;
    cfg.trigger_len = 4;
    cfg.pre_window = 6;
    cfg.trigger_budget = 0.2;
    return cfg;
}

TriggerGenerator small_generator(uint64_t seed, int targets = 3) {
    Rng rng(seed + 1000);
    Mat features = rng.gaussian_mat(targets, 10, 1.0);
    GeneratorConfig cfg;
    cfg.hidden = 8;
    cfg.embed_dim = 4;
    return TriggerGenerator(small_attack(), cfg, features, seed);
}

}  // namespace

TEST_CASE("dft of a constant series concentrates in the DC bin") {
    std::vector<double> x(32, 2.5);
    std::vector<double> z = dft_lowpass(x, 5);
    REQUIRE(z.size() == 10);
    CHECK(z[0] == doctest::Approx(2.5 * 32).epsilon(1e-12));
    CHECK(z[1] == 0.0);  // forced exactly
    for (size_t i = 2; i < z.size(); ++i) CHECK(std::fabs(z[i]) < 1e-10);
}

TEST_CASE("dft of a pure cosine concentrates in its own bin") {
    const int t_span = 32;
    std::vector<double> x(t_span);
    for (int t = 0; t < t_span; ++t) x[t] = std::cos(2.0 * kPi * 3.0 * t / t_span);
    std::vector<double> z = dft_lowpass(x, 6);
    REQUIRE(z.size() == 12);
    CHECK(z[6] == doctest::Approx(t_span / 2.0).epsilon(1e-9));  // real part of bin 3
    CHECK(std::fabs(z[7]) < 1e-9);
    for (int f = 0; f < 6; ++f) {
        if (f == 3) continue;
        CHECK(std::fabs(z[2 * f]) < 1e-9);
        CHECK(std::fabs(z[2 * f + 1]) < 1e-9);
    }
}

TEST_CASE("dft clamps oversized k and rejects degenerate input") {
    std::vector<double> x(8, 1.0);
    std::vector<double> z = dft_lowpass(x, 200);
    CHECK(z.size() == 2 * (8 / 2 + 1));  // clamped to 5 bins
    CHECK_THROWS_AS(dft_lowpass(x, 0), Error);
    CHECK_THROWS_AS(dft_lowpass(std::vector<double>{1.0}, 2), Error);
    try {
        dft_lowpass(std::vector<double>{1.0}, 2);
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::degenerate);
    }
}

TEST_CASE("spectral features stack per-variable dft rows") {
    Rng rng(5);
    Mat train = rng.gaussian_mat(40, 4, 1.0);
    std::vector<int> targets{1, 3};
    Mat f = TriggerGenerator::spectral_features(train, targets, 6);
    REQUIRE(f.rows() == 2);
    REQUIRE(f.cols() == 12);
    for (size_t i = 0; i < targets.size(); ++i) {
        std::vector<double> col(40);
        for (int r = 0; r < 40; ++r) col[r] = train(r, targets[i]);
        std::vector<double> z = dft_lowpass(col, 6);
        for (size_t j = 0; j < z.size(); ++j) {
            CHECK(f(static_cast<int>(i), static_cast<int>(j)) == z[j]);
        }
    }
    CHECK_THROWS_AS(TriggerGenerator::spectral_features(train, {}, 6), Error);
    CHECK_THROWS_AS(TriggerGenerator::spectral_features(train, {7}, 6), Error);
}

TEST_CASE("generated triggers never leave the budget") {
    // randomized generator states and slabs; the tanh scaling must cap
    // every cell at the budget regardless of parameters
    int checked = 0;
    for (uint64_t seed = 0; seed < 50; ++seed) {
        TriggerGenerator gen = small_generator(seed);
        // inflate parameters to push tanh toward saturation
        for (ParamBlock& b : gen.blocks()) {
            for (double& v : b.value.data()) v *= 1.0 + static_cast<double>(seed % 7);
        }
        Rng rng(seed * 31 + 7);
        Mat slab = rng.gaussian_mat(6, 3, 2.0);
        Trigger g = gen.generate(slab);
        REQUIRE(g.values.rows() == 4);
        REQUIRE(g.values.cols() == 3);
        CHECK(g.values.max_abs() <= 0.2);
        ++checked;
    }
    CHECK(checked == 50);
}

TEST_CASE("the correlation graph is symmetric with unit diagonal") {
    TriggerGenerator gen = small_generator(3, 4);
    Mat a = gen.graph();
    REQUIRE(a.rows() == 4);
    REQUIRE(a.cols() == 4);
    for (int i = 0; i < 4; ++i) {
        CHECK(a(i, i) == doctest::Approx(1.0).epsilon(1e-12));
        for (int j = 0; j < 4; ++j) {
            CHECK(a(i, j) == doctest::Approx(a(j, i)).epsilon(1e-12));
            CHECK(std::fabs(a(i, j)) <= 1.0 + 1e-12);
        }
    }
}

TEST_CASE("identical variables produce a fully connected graph") {
    Rng rng(9);
    Mat one_row = rng.gaussian_mat(1, 10, 1.0);
    Mat features(3, 10);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 10; ++j) features(i, j) = one_row(0, j);
    GeneratorConfig cfg;
    cfg.hidden = 8;
    cfg.embed_dim = 4;
    TriggerGenerator gen(small_attack(), cfg, features, 1);
    Mat a = gen.graph();
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) CHECK(a(i, j) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("the propagation matrix rows are L1 normalized") {
    TriggerGenerator gen = small_generator(17, 4);
    ad::Tape tape;
    std::vector<ad::Var> params = gen.stage_params(tape);
    Mat prop = gen.propagation_on(tape, params).val();
    REQUIRE(prop.rows() == 4);
    for (int i = 0; i < 4; ++i) {
        double l1 = 0.0;
        for (int j = 0; j < 4; ++j) l1 += std::fabs(prop(i, j));
        CHECK(l1 == doctest::Approx(1.0).epsilon(1e-9));
        CHECK(prop(i, i) > 0.0);  // A + I keeps self loops positive
    }
}

TEST_CASE("normalization loss averages per-variable absolute sums") {
    Trigger g{Mat(4, 2, 0.1)};
    CHECK(normalization_loss(g) == doctest::Approx(0.4).epsilon(1e-12));

    // alternating signs cancel: the loss only penalizes the net offset
    Trigger zig{Mat(4, 2, 0.0)};
    for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 2; ++c) zig.values(r, c) = (r % 2 == 0 ? 0.1 : -0.1);
    CHECK(normalization_loss(zig) == doctest::Approx(0.0));

    Trigger mixed{Mat(2, 2, 0.0)};
    mixed.values(0, 0) = 0.3;
    mixed.values(1, 0) = 0.1;   // var 0 sums to 0.4
    mixed.values(0, 1) = -0.2;  // var 1 sums to -0.2
    CHECK(normalization_loss(mixed) == doctest::Approx(0.3).epsilon(1e-12));

    CHECK_THROWS_AS(normalization_loss(Trigger{Mat()}), Error);
}

TEST_CASE("the tape normalization loss agrees with the plain version") {
    Rng rng(23);
    Mat g = rng.gaussian_mat(4, 3, 0.1);
    ad::Tape tape;
    ad::Var v = tape.leaf(g);
    ad::Var loss = normalization_loss_on(tape, v);
    CHECK(loss.val()(0, 0) == doctest::Approx(normalization_loss(Trigger{g})).epsilon(1e-12));
}

TEST_CASE("trigger_on and generate agree on the same slab") {
    TriggerGenerator gen = small_generator(29);
    Rng rng(30);
    Mat slab = rng.gaussian_mat(6, 3, 1.0);
    Trigger direct = gen.generate(slab);

    ad::Tape tape;
    std::vector<ad::Var> params = gen.stage_params(tape);
    ad::Var prop = gen.propagation_on(tape, params);
    ad::Var trig = gen.trigger_on(tape, tape.leaf(slab), prop, params);
    CHECK(trig.val() == direct.values);
}

TEST_CASE("the generator is a pure function of seed and features") {
    Rng rng(31);
    Mat slab = rng.gaussian_mat(6, 3, 1.0);
    Trigger a = small_generator(77).generate(slab);
    Trigger b = small_generator(77).generate(slab);
    Trigger c = small_generator(78).generate(slab);
    CHECK(a.values == b.values);
    CHECK_FALSE(a.values == c.values);
}

TEST_CASE("generator state round trips through json") {
    const std::string path = "/tmp/backtime_test_generator.json";
    TriggerGenerator gen = small_generator(41);
    Rng rng(42);
    Mat slab = rng.gaussian_mat(6, 3, 1.0);
    save_generator_json(gen, path);
    TriggerGenerator loaded = load_generator_json(path);
    CHECK(loaded.trigger_len() == gen.trigger_len());
    CHECK(loaded.pre_window() == gen.pre_window());
    CHECK(loaded.trigger_budget() == gen.trigger_budget());
    CHECK(loaded.features() == gen.features());
    CHECK(loaded.generate(slab).values == gen.generate(slab).values);
    CHECK(loaded.graph() == gen.graph());
    std::remove(path.c_str());

    CHECK_THROWS_AS(load_generator_json("/tmp/backtime_no_such_generator.json"), Error);
}

TEST_CASE("slab and construction shapes are enforced") {
    TriggerGenerator gen = small_generator(51);
    CHECK_THROWS_AS(gen.generate(Mat(5, 3, 0.0)), Error);
    CHECK_THROWS_AS(gen.generate(Mat(6, 2, 0.0)), Error);

    GeneratorConfig cfg;
    cfg.hidden = 0;
    Rng rng(52);
    Mat features = rng.gaussian_mat(3, 10, 1.0);
    CHECK_THROWS_AS(TriggerGenerator(small_attack(), cfg, features, 1), Error);
    GeneratorConfig cfg2;
    CHECK_THROWS_AS(TriggerGenerator(small_attack(), cfg2, Mat(3, 1, 1.0), 1), Error);
}

TEST_CASE("graph edges export as an upper-triangle list") {
    const std::string path = "/tmp/backtime_test_edges.txt";
    Mat graph(3, 3, 1.0);
    graph(0, 1) = graph(1, 0) = 0.25;
    graph(0, 2) = graph(2, 0) = -0.5;
    graph(1, 2) = graph(2, 1) = 0.125;
    std::vector<int> targets{2, 5, 7};
    export_graph_edges(graph, targets, path);

    std::ifstream in(path);
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) lines.push_back(line);
    REQUIRE(lines.size() == 3);
    int i, j;
    double w;
    std::istringstream(lines[0]) >> i >> j >> w;
    CHECK(i == 2);
    CHECK(j == 5);
    CHECK(w == 0.25);
    std::istringstream(lines[1]) >> i >> j >> w;
    CHECK(i == 2);
    CHECK(j == 7);
    CHECK(w == -0.5);
    std::istringstream(lines[2]) >> i >> j >> w;
    CHECK(i == 5);
    CHECK(j == 7);
    CHECK(w == 0.125);
    std::remove(path.c_str());

    CHECK_THROWS_AS(export_graph_edges(graph, {1, 2}, path), Error);
}
