#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "backtime/autodiff.hpp"
#include "backtime/dataset.hpp"
#include "backtime/matrix.hpp"
#include "backtime/rng.hpp"

namespace backtime {

enum class Arch { mlp, temporal_conv, tiny_attention };

Arch arch_from_string(const std::string& s);
std::string arch_to_string(Arch a);

/// Named parameter block with its optimizer moments.
struct ParamBlock {
    std::string name;
    Mat value;
    Mat m;  // first moment
    Mat v;  // second moment
};

struct AdamConfig {
    double lr = 2e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

class Adam {
public:
    explicit Adam(AdamConfig cfg = {}) : cfg_(cfg) {}

    /// One update over all blocks; grads aligned with blocks by index.
    void step(std::vector<ParamBlock>& blocks, const std::vector<Mat>& grads);

    const AdamConfig& config() const { return cfg_; }
    void set_lr(double lr) { cfg_.lr = lr; }
    long steps_taken() const { return steps_; }
    void set_steps_taken(long n) { steps_ = n; }

private:
    AdamConfig cfg_;
    long steps_ = 0;
};

/// Small stand-in forecasting model: maps a (input_len x N) history to a
/// (output_len x N) prediction. Three architectures with distinct inductive
/// biases; every hidden activation is tanh.
class ForecastModel {
public:
    ForecastModel(Arch arch, WindowSpec window, int num_variables, int hidden, uint64_t seed);

    /// Stages every parameter block as a tape leaf, in block order.
    std::vector<ad::Var> stage_params(ad::Tape& tape) const;

    /// Builds the forward graph; params must come from stage_params on the
    /// same tape. history is (input_len x N).
    ad::Var forward_on(ad::Tape& tape, ad::Var history, const std::vector<ad::Var>& params) const;

    /// Plain inference on a throwaway tape.
    Mat predict(const Mat& history) const;

    std::vector<ParamBlock>& blocks() { return blocks_; }
    const std::vector<ParamBlock>& blocks() const { return blocks_; }

    Arch arch() const { return arch_; }
    const WindowSpec& window() const { return window_; }
    int num_variables() const { return num_vars_; }
    int hidden() const { return hidden_; }

    static constexpr int kConvChannels = 4;
    static constexpr int kConvKernel = 5;

private:
    void init_params(uint64_t seed);
    void check_history(const Mat& h) const;

    Arch arch_;
    WindowSpec window_;
    int num_vars_ = 0;
    int hidden_ = 0;
    std::vector<ParamBlock> blocks_;
};

struct TrainConfig {
    int epochs = 30;
    int batch_size = 64;
    double lr = 2e-4;
    bool shuffle = false;
    double smooth_l1_delta = 1.0;
};

/// One pass over the given window timestamps in mini-batches; returns the
/// window-weighted mean smooth-L1 loss. Order is chronological unless
/// cfg.shuffle, in which case rng reorders the pass.
double train_epoch(ForecastModel& model, Adam& opt, const Mat& values,
                   const std::vector<int>& timestamps, const TrainConfig& cfg, Rng& rng);

/// Full training run; returns per-epoch losses.
std::vector<double> train_model(ForecastModel& model, Adam& opt, const Mat& values,
                                const std::vector<int>& timestamps, const TrainConfig& cfg,
                                Rng& rng);

enum class Metric { mae, rmse };

/// Per-window error of the model's prediction against the ground-truth
/// future, keyed by window timestamp.
std::map<int, double> evaluate(const ForecastModel& model, const Mat& values,
                               const std::vector<int>& timestamps, Metric metric = Metric::mae);

/// Plain (non-tape) smooth L1, elementwise mean.
double smooth_l1_value(const Mat& pred, const Mat& target, double delta = 1.0);

void save_model_json(const ForecastModel& model, const Adam& opt, const std::string& path);
std::pair<ForecastModel, Adam> load_model_json(const std::string& path);

}  // namespace backtime
