#pragma once

#include <string>
#include <utility>
#include <vector>

#include "backtime/matrix.hpp"

namespace backtime {

/// Half-open index range [begin, end).
struct Range {
    int begin = 0;
    int end = 0;
    int size() const { return end - begin; }
    bool contains(int t) const { return t >= begin && t < end; }
};

/// Window geometry: input_len history steps predict output_len future steps.
struct WindowSpec {
    int input_len = 12;
    int output_len = 12;
    void validate() const;
};

struct SplitSpec {
    double train_frac = 0.6;
    double val_frac = 0.2;
    double test_frac = 0.2;
    void validate() const;
};

struct SplitRanges {
    Range train;
    Range val;
    Range test;
};

/// Per-variable population mean/std fitted on the training split.
struct StandardizationStats {
    std::vector<double> mean;
    std::vector<double> stdev;
};

/// A T x N multivariate series. Values are immutable after construction
/// except through the poisoning paths, which always copy.
struct MtsDataset {
    Mat values;
    std::vector<std::string> variable_names;

    int time_span() const { return values.rows(); }
    int num_variables() const { return values.cols(); }

    void validate() const;
};

/// Knobs of the synthetic generator; exposed in the config file.
struct SyntheticSpec {
    int num_variables = 8;
    int time_span = 2000;
    double period_a = 24.0;
    double period_b = 160.0;
    double amplitude_a = 1.0;
    double amplitude_b = 0.6;
    double mixing = 0.3;
    double noise = 0.1;
};

/// History rows [t_i - input_len, t_i) and future rows [t_i, t_i + output_len).
std::pair<Mat, Mat> slice_window(const MtsDataset& ds, int t_i, const WindowSpec& spec);

/// Valid slicing timestamps inside `range`: both windows must stay in range.
std::vector<int> window_timestamps(const Range& range, const WindowSpec& spec);

/// Z-scores every variable with population mean/std fitted on train_range.
std::pair<MtsDataset, StandardizationStats> fit_standardize(const MtsDataset& ds,
                                                            const Range& train_range);

/// Inverse of fit_standardize given the same stats.
MtsDataset unstandardize(const MtsDataset& ds, const StandardizationStats& stats);

/// Chronological train/val/test ranges covering [0, T); remainder rows go to
/// test. Every split must hold at least input_len + output_len rows.
SplitRanges split(const MtsDataset& ds, const SplitSpec& spec, const WindowSpec& window);

/// Two sinusoids with per-variable phase shifts, cross-variable mixing, and
/// Gaussian noise. A pure function of (spec, seed).
MtsDataset generate_synthetic(const SyntheticSpec& spec, std::uint64_t seed);

/// CSV with a header row of variable names, one row per timestep.
MtsDataset load_csv(const std::string& path);
void save_csv(const MtsDataset& ds, const std::string& path);

/// 0/1 sidecar mask in the same CSV layout.
void save_mask_csv(const Mat& mask, const std::vector<std::string>& names,
                   const std::string& path);
Mat load_mask_csv(const std::string& path);

}  // namespace backtime
