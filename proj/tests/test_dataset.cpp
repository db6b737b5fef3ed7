#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "backtime/dataset.hpp"
#include "backtime/error.hpp"

using namespace backtime;

namespace {

MtsDataset tiny_dataset() {
    Mat v(3, 2, 0.0);
    v(0, 0) = 2.0;
    v(1, 0) = 4.0;
    v(2, 0) = 6.0;
    v(0, 1) = -1.0;
    v(1, 1) = 0.0;
    v(2, 1) = 1.0;
    return MtsDataset{v, {"a", "b"}};
}

std::filesystem::path temp_file(const char* name) {
    return std::filesystem::temp_directory_path() / name;
}

}  // namespace

TEST_CASE("standardization matches the population z-score") {
    MtsDataset ds = tiny_dataset();
    auto [std_ds, stats] = fit_standardize(ds, Range{0, 3});
    CHECK(stats.mean[0] == doctest::Approx(4.0).epsilon(1e-15));
    // population std of {2,4,6} is sqrt(8/3)
    CHECK(stats.stdev[0] == doctest::Approx(1.6329931618554518).epsilon(1e-12));
    CHECK(std_ds.values(0, 0) == doctest::Approx(-1.2247448713915889).epsilon(1e-12));
    CHECK(std_ds.values(1, 0) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(std_ds.values(2, 0) == doctest::Approx(1.2247448713915889).epsilon(1e-12));

    MtsDataset back = unstandardize(std_ds, stats);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 2; ++j)
            CHECK(back.values(i, j) == doctest::Approx(ds.values(i, j)).epsilon(1e-12));
}

TEST_CASE("standardization uses only the fitting range") {
    MtsDataset ds = tiny_dataset();
    auto [std_ds, stats] = fit_standardize(ds, Range{0, 2});
    CHECK(stats.mean[0] == doctest::Approx(3.0));
    // the row outside the range is scaled with the fitted stats
    CHECK(std_ds.values(2, 0) == doctest::Approx((6.0 - 3.0) / stats.stdev[0]));
}

TEST_CASE("constant variables cannot be standardized") {
    Mat v(4, 1, 2.5);
    MtsDataset ds{v, {"flat"}};
    CHECK_THROWS_AS(fit_standardize(ds, Range{0, 4}), Error);
}

TEST_CASE("splits are chronological and give the remainder to test") {
    SyntheticSpec spec;
    spec.num_variables = 3;
    spec.time_span = 101;
    MtsDataset ds = generate_synthetic(spec, 5);
    WindowSpec w{4, 4};
    SplitRanges s = split(ds, SplitSpec{0.6, 0.2, 0.2}, w);
    CHECK(s.train.begin == 0);
    CHECK(s.train.end == 60);
    CHECK(s.val.begin == 60);
    CHECK(s.val.end == 80);
    CHECK(s.test.begin == 80);
    CHECK(s.test.end == 101);
}

TEST_CASE("splits too small for one window are rejected") {
    SyntheticSpec spec;
    spec.num_variables = 2;
    spec.time_span = 60;
    MtsDataset ds = generate_synthetic(spec, 5);
    CHECK_THROWS_AS(split(ds, SplitSpec{0.9, 0.05, 0.05}, WindowSpec{12, 12}), Error);
}

TEST_CASE("window timestamps keep both windows inside the range") {
    WindowSpec w{12, 12};
    std::vector<int> ts = window_timestamps(Range{0, 30}, w);
    REQUIRE(ts.size() == 7);
    CHECK(ts.front() == 12);
    CHECK(ts.back() == 18);

    CHECK(window_timestamps(Range{0, 24}, w).size() == 1);
    CHECK(window_timestamps(Range{0, 23}, w).empty());
}

TEST_CASE("window slicing returns history and future rows") {
    SyntheticSpec spec;
    spec.num_variables = 2;
    spec.time_span = 500;
    MtsDataset ds = generate_synthetic(spec, 9);
    WindowSpec w{5, 3};
    auto [hist, fut] = slice_window(ds, 40, w);
    REQUIRE(hist.rows() == 5);
    REQUIRE(fut.rows() == 3);
    for (int i = 0; i < 5; ++i)
        for (int j = 0; j < 2; ++j) CHECK(hist(i, j) == ds.values(35 + i, j));
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 2; ++j) CHECK(fut(i, j) == ds.values(40 + i, j));

    CHECK_THROWS_AS(slice_window(ds, 4, w), Error);
    CHECK_THROWS_AS(slice_window(ds, 499, w), Error);
}

TEST_CASE("synthetic generation is a pure function of spec and seed") {
    SyntheticSpec spec;
    spec.num_variables = 4;
    spec.time_span = 600;
    MtsDataset a = generate_synthetic(spec, 17);
    MtsDataset b = generate_synthetic(spec, 17);
    MtsDataset c = generate_synthetic(spec, 18);
    CHECK(a.values == b.values);
    CHECK_FALSE(a.values == c.values);
    CHECK(a.values.all_finite());
    CHECK(a.time_span() == 600);
    CHECK(a.num_variables() == 4);
    CHECK(a.variable_names.size() == 4);
}

TEST_CASE("csv round trip preserves every bit") {
    SyntheticSpec spec;
    spec.num_variables = 3;
    spec.time_span = 500;
    MtsDataset ds = generate_synthetic(spec, 23);
    auto path = temp_file("backtime_test_roundtrip.csv");
    save_csv(ds, path.string());
    MtsDataset loaded = load_csv(path.string());
    CHECK(loaded.values == ds.values);
    CHECK(loaded.variable_names == ds.variable_names);
    std::filesystem::remove(path);
}

TEST_CASE("csv parsing rejects ragged and non-numeric rows") {
    auto ragged = temp_file("backtime_test_ragged.csv");
    {
        std::ofstream f(ragged);
        f << "a,b\n1.0,2.0\n3.0\n";
    }
    CHECK_THROWS_AS(load_csv(ragged.string()), Error);
    std::filesystem::remove(ragged);

    auto garbage = temp_file("backtime_test_garbage.csv");
    {
        std::ofstream f(garbage);
        f << "a,b\n1.0,banana\n";
    }
    CHECK_THROWS_AS(load_csv(garbage.string()), Error);
    std::filesystem::remove(garbage);

    CHECK_THROWS_AS(load_csv("/nonexistent/backtime.csv"), Error);
}

TEST_CASE("mask csv round trip") {
    Mat mask(5, 2, 0.0);
    mask(1, 0) = 1.0;
    mask(4, 1) = 1.0;
    auto path = temp_file("backtime_test_mask.csv");
    save_mask_csv(mask, {"a", "b"}, path.string());
    Mat loaded = load_mask_csv(path.string());
    CHECK(loaded == mask);
    std::filesystem::remove(path);
}

TEST_CASE("dataset validation rejects non-finite values") {
    Mat v(3, 1, 1.0);
    v(1, 0) = std::nan("");
    MtsDataset ds{v, {"x"}};
    CHECK_THROWS_AS(ds.validate(), Error);
}

TEST_CASE("error kinds separate config from parse problems") {
    try {
        WindowSpec w{0, 4};
        w.validate();
        FAIL("expected a throw");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::config);
    }
}
