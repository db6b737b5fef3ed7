#include "backtime/dataset.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "backtime/error.hpp"
#include "backtime/rng.hpp"

namespace backtime {

void WindowSpec::validate() const {
    if (input_len < 1 || output_len < 1)
        throw Error(ErrorKind::config, "window spec: input_len and output_len must be >= 1");
}

void SplitSpec::validate() const {
    auto in_unit = [](double f) { return f > 0.0 && f < 1.0; };
    if (!in_unit(train_frac) || !in_unit(val_frac) || !in_unit(test_frac))
        throw Error(ErrorKind::config, "split spec: fractions must lie in (0,1)");
    if (std::abs(train_frac + val_frac + test_frac - 1.0) > 1e-9)
        throw Error(ErrorKind::config, "split spec: fractions must sum to 1");
}

void MtsDataset::validate() const {
    if (values.rows() < 1 || values.cols() < 1)
        throw Error(ErrorKind::shape, "dataset: empty value matrix");
    if (variable_names.size() != static_cast<size_t>(values.cols()))
        throw Error(ErrorKind::shape, "dataset: variable name count does not match columns");
    if (!values.all_finite())
        throw Error(ErrorKind::parse, "dataset: values contain NaN or Inf");
}

std::pair<Mat, Mat> slice_window(const MtsDataset& ds, int t_i, const WindowSpec& spec) {
    spec.validate();
    const int T = ds.time_span();
    const int lo = spec.input_len;
    const int hi = T - spec.output_len;
    if (t_i < lo || t_i > hi)
        throw Error(ErrorKind::boundary,
                    "slice_window: t_i=" + std::to_string(t_i) + " outside valid range [" +
                        std::to_string(lo) + ", " + std::to_string(hi) + "]");
    return {ds.values.slice_rows(t_i - spec.input_len, t_i),
            ds.values.slice_rows(t_i, t_i + spec.output_len)};
}

std::vector<int> window_timestamps(const Range& range, const WindowSpec& spec) {
    std::vector<int> out;
    for (int t = range.begin + spec.input_len; t <= range.end - spec.output_len; ++t)
        out.push_back(t);
    return out;
}

std::pair<MtsDataset, StandardizationStats> fit_standardize(const MtsDataset& ds,
                                                            const Range& train_range) {
    ds.validate();
    if (train_range.size() < 1 || train_range.begin < 0 || train_range.end > ds.time_span())
        throw Error(ErrorKind::boundary, "fit_standardize: empty or out-of-range train range");

    const int N = ds.num_variables();
    const int n = train_range.size();
    StandardizationStats stats;
    stats.mean.resize(N);
    stats.stdev.resize(N);
    for (int c = 0; c < N; ++c) {
        double sum = 0.0;
        for (int r = train_range.begin; r < train_range.end; ++r) sum += ds.values(r, c);
        const double mean = sum / n;
        double sq = 0.0;
        for (int r = train_range.begin; r < train_range.end; ++r) {
            const double d = ds.values(r, c) - mean;
            sq += d * d;
        }
        const double stdev = std::sqrt(sq / n);  // population std
        if (stdev <= 0.0)
            throw Error(ErrorKind::degenerate,
                        "fit_standardize: variable '" + ds.variable_names[c] +
                            "' is constant on the training range");
        stats.mean[c] = mean;
        stats.stdev[c] = stdev;
    }

    MtsDataset out = ds;
    for (int r = 0; r < out.time_span(); ++r)
        for (int c = 0; c < N; ++c)
            out.values(r, c) = (ds.values(r, c) - stats.mean[c]) / stats.stdev[c];
    return {out, stats};
}

MtsDataset unstandardize(const MtsDataset& ds, const StandardizationStats& stats) {
    if (stats.mean.size() != static_cast<size_t>(ds.num_variables()))
        throw Error(ErrorKind::shape, "unstandardize: stats do not match variable count");
    MtsDataset out = ds;
    for (int r = 0; r < out.time_span(); ++r)
        for (int c = 0; c < out.num_variables(); ++c)
            out.values(r, c) = ds.values(r, c) * stats.stdev[c] + stats.mean[c];
    return out;
}

SplitRanges split(const MtsDataset& ds, const SplitSpec& spec, const WindowSpec& window) {
    spec.validate();
    window.validate();
    const int T = ds.time_span();
    const int n_train = static_cast<int>(std::floor(spec.train_frac * T));
    const int n_val = static_cast<int>(std::floor(spec.val_frac * T));
    SplitRanges r;
    r.train = {0, n_train};
    r.val = {n_train, n_train + n_val};
    r.test = {n_train + n_val, T};  // remainder rows go to test
    const int need = window.input_len + window.output_len;
    for (const Range* range : {&r.train, &r.val, &r.test})
        if (range->size() < need)
            throw Error(ErrorKind::boundary,
                        "split: a split holds " + std::to_string(range->size()) +
                            " rows, fewer than input_len + output_len = " + std::to_string(need));
    return r;
}

MtsDataset generate_synthetic(const SyntheticSpec& spec, std::uint64_t seed) {
    if (spec.num_variables < 2)
        throw Error(ErrorKind::config, "generate_synthetic: need at least 2 variables");
    if (spec.time_span < 32)
        throw Error(ErrorKind::config, "generate_synthetic: need time_span >= 32");

    const int N = spec.num_variables;
    const int T = spec.time_span;
    const double two_pi = 6.283185307179586476925286766559;

    // Shared seasonal pair with a per-variable phase shift.
    Mat base(T, N);
    for (int i = 0; i < N; ++i) {
        const double phase = two_pi * i / N;
        for (int t = 0; t < T; ++t) {
            base(t, i) = spec.amplitude_a * std::sin(two_pi * t / spec.period_a + phase) +
                         spec.amplitude_b * std::sin(two_pi * t / spec.period_b + 0.5 * phase);
        }
    }

    // Cross-variable mixing pulls every variable toward the instantaneous mean.
    MtsDataset ds;
    ds.values = Mat(T, N);
    Rng rng(seed);
    for (int t = 0; t < T; ++t) {
        double row_mean = 0.0;
        for (int i = 0; i < N; ++i) row_mean += base(t, i);
        row_mean /= N;
        for (int i = 0; i < N; ++i)
            ds.values(t, i) = (1.0 - spec.mixing) * base(t, i) + spec.mixing * row_mean;
    }
    if (spec.noise > 0.0) {
        for (int t = 0; t < T; ++t)
            for (int i = 0; i < N; ++i) ds.values(t, i) += spec.noise * rng.gaussian();
    }

    ds.variable_names.resize(N);
    for (int i = 0; i < N; ++i) ds.variable_names[i] = "v" + std::to_string(i);
    return ds;
}

namespace {

std::string format_value(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.push_back("");
    return cells;
}

Mat parse_numeric_rows(std::ifstream& file, size_t expect_cols, const std::string& path) {
    std::vector<double> values;
    std::string line;
    int data_row = 0;
    while (std::getline(file, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        ++data_row;
        const auto cells = split_line(line);
        if (cells.size() != expect_cols)
            throw Error(ErrorKind::parse, path + ": data row " + std::to_string(data_row) +
                                              " has " + std::to_string(cells.size()) +
                                              " cells, expected " + std::to_string(expect_cols));
        for (size_t c = 0; c < cells.size(); ++c) {
            const char* s = cells[c].c_str();
            char* end = nullptr;
            const double v = std::strtod(s, &end);
            if (end == s || *end != '\0')
                throw Error(ErrorKind::parse, path + ": non-numeric cell at data row " +
                                                  std::to_string(data_row) + ", column " +
                                                  std::to_string(c + 1));
            values.push_back(v);
        }
    }
    if (data_row == 0) throw Error(ErrorKind::parse, path + ": no data rows");
    return Mat(data_row, static_cast<int>(expect_cols), std::move(values));
}

}  // namespace

MtsDataset load_csv(const std::string& path) {
    std::ifstream file(path);
    if (!file) throw Error(ErrorKind::parse, path + ": cannot open file");
    std::string header;
    if (!std::getline(file, header)) throw Error(ErrorKind::parse, path + ": empty file");
    if (!header.empty() && header.back() == '\r') header.pop_back();
    MtsDataset ds;
    ds.variable_names = split_line(header);
    if (ds.variable_names.empty()) throw Error(ErrorKind::parse, path + ": empty header row");
    ds.values = parse_numeric_rows(file, ds.variable_names.size(), path);
    ds.validate();

    // Constant variables break standardization and std-relative budgets.
    for (int c = 0; c < ds.num_variables(); ++c) {
        bool constant = true;
        for (int r = 1; r < ds.time_span() && constant; ++r)
            constant = ds.values(r, c) == ds.values(0, c);
        if (constant)
            throw Error(ErrorKind::degenerate,
                        path + ": variable '" + ds.variable_names[c] + "' is constant");
    }
    return ds;
}

void save_csv(const MtsDataset& ds, const std::string& path) {
    ds.validate();
    std::ofstream file(path);
    if (!file) throw Error(ErrorKind::parse, path + ": cannot open file for writing");
    for (int c = 0; c < ds.num_variables(); ++c)
        file << (c ? "," : "") << ds.variable_names[c];
    file << "\n";
    for (int r = 0; r < ds.time_span(); ++r) {
        for (int c = 0; c < ds.num_variables(); ++c)
            file << (c ? "," : "") << format_value(ds.values(r, c));
        file << "\n";
    }
    if (!file) throw Error(ErrorKind::parse, path + ": write failed");
}

void save_mask_csv(const Mat& mask, const std::vector<std::string>& names,
                   const std::string& path) {
    std::ofstream file(path);
    if (!file) throw Error(ErrorKind::parse, path + ": cannot open file for writing");
    for (size_t c = 0; c < names.size(); ++c) file << (c ? "," : "") << names[c];
    file << "\n";
    for (int r = 0; r < mask.rows(); ++r) {
        for (int c = 0; c < mask.cols(); ++c)
            file << (c ? "," : "") << (mask(r, c) != 0.0 ? 1 : 0);
        file << "\n";
    }
    if (!file) throw Error(ErrorKind::parse, path + ": write failed");
}

Mat load_mask_csv(const std::string& path) {
    std::ifstream file(path);
    if (!file) throw Error(ErrorKind::parse, path + ": cannot open file");
    std::string header;
    if (!std::getline(file, header)) throw Error(ErrorKind::parse, path + ": empty file");
    if (!header.empty() && header.back() == '\r') header.pop_back();
    const auto names = split_line(header);
    return parse_numeric_rows(file, names.size(), path);
}

}  // namespace backtime
