#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "backtime/autodiff.hpp"
#include "backtime/forecaster.hpp"
#include "backtime/matrix.hpp"
#include "backtime/threat.hpp"

namespace backtime {

/// Unnormalized forward DFT of x, keeping the k lowest nonnegative
/// frequencies (DC included) as interleaved (real, imaginary) pairs.
/// k larger than floor(T/2)+1 is clamped with a notice.
std::vector<double> dft_lowpass(const std::vector<double>& x, int k);

struct GeneratorConfig {
    int hidden = 64;
    int embed_dim = 16;
    double lr = 0.01;
};

/// Learnable trigger generator: spectral features -> shared MLP embeddings ->
/// cosine correlation graph -> 2-layer GCN over the pre-trigger history ->
/// per-variable linear head -> tanh budget scaling. Built around a fixed
/// feature matrix (one row per target variable), which pins the graph to the
/// clean training series.
class TriggerGenerator {
public:
    TriggerGenerator(const AttackConfig& atk, GeneratorConfig cfg, Mat features, uint64_t seed);

    /// Per-variable dft_lowpass over the full training series columns.
    static Mat spectral_features(const Mat& train_values, const std::vector<int>& targets,
                                 int freq_keep);

    std::vector<ad::Var> stage_params(ad::Tape& tape) const;

    /// Correlation graph A from the current MLP parameters: symmetric,
    /// unit diagonal, entries in [-1, 1].
    ad::Var graph_on(ad::Tape& tape, const std::vector<ad::Var>& params) const;

    /// Signed row-normalized propagation matrix D^-1 (A + I).
    ad::Var propagation_on(ad::Tape& tape, const std::vector<ad::Var>& params) const;

    /// Trigger for one timestamp from its pre-trigger history slab
    /// (pre_window x |S|). Returns a (trigger_len x |S|) node, already scaled
    /// inside the trigger budget.
    ad::Var trigger_on(ad::Tape& tape, ad::Var slab, ad::Var prop,
                       const std::vector<ad::Var>& params) const;

    Trigger generate(const Mat& slab) const;
    Mat graph() const;

    std::vector<ParamBlock>& blocks() { return blocks_; }
    const std::vector<ParamBlock>& blocks() const { return blocks_; }
    const Mat& features() const { return features_; }
    int num_targets() const { return features_.rows(); }
    int trigger_len() const { return trigger_len_; }
    int pre_window() const { return pre_window_; }
    double trigger_budget() const { return trigger_budget_; }
    const GeneratorConfig& config() const { return cfg_; }

private:
    void check_slab(const Mat& slab) const;

    GeneratorConfig cfg_;
    int trigger_len_;
    int pre_window_;
    double trigger_budget_;
    Mat features_;
    std::vector<ParamBlock> blocks_;
};

/// Eq-style trigger regularizer: average over variables of the absolute
/// per-variable sum of trigger steps.
double normalization_loss(const Trigger& g);

/// Tape version over a (trigger_len x |S|) node.
ad::Var normalization_loss_on(ad::Tape& tape, ad::Var trigger);

void save_generator_json(const TriggerGenerator& gen, const std::string& path);
TriggerGenerator load_generator_json(const std::string& path);

/// Upper-triangle edge list "i j weight" with variable indices resolved
/// through `targets`.
void export_graph_edges(const Mat& graph, const std::vector<int>& targets,
                        const std::string& path);

}  // namespace backtime
