#include "backtime/generator.hpp"

#include <cmath>
#include <fstream>

#include "json.hpp"

#include "backtime/error.hpp"

namespace backtime {

std::vector<double> dft_lowpass(const std::vector<double>& x, int k) {
    int t_span = static_cast<int>(x.size());
    if (t_span < 2) throw Error(ErrorKind::degenerate, "dft_lowpass: series shorter than 2");
    if (k < 1) throw Error(ErrorKind::config, "dft_lowpass: k must be at least 1");
    int max_k = t_span / 2 + 1;
    if (k > max_k) {
        log::notice("dft_lowpass: k=" + std::to_string(k) + " clamped to " +
                    std::to_string(max_k) + " for series length " + std::to_string(t_span));
        k = max_k;
    }
    std::vector<double> out(2 * static_cast<size_t>(k), 0.0);
    const double step = -6.283185307179586476925286766559 / t_span;
    for (int f = 0; f < k; ++f) {
        double re = 0.0, im = 0.0;
        for (int t = 0; t < t_span; ++t) {
            double ang = step * f * t;
            re += x[t] * std::cos(ang);
            im += x[t] * std::sin(ang);
        }
        out[2 * f] = re;
        out[2 * f + 1] = im;
    }
    if (k >= 1) out[1] = 0.0;  // DC of a real series is purely real
    return out;
}

Mat TriggerGenerator::spectral_features(const Mat& train_values, const std::vector<int>& targets,
                                        int freq_keep) {
    if (targets.empty()) throw Error(ErrorKind::config, "spectral_features: no target variables");
    std::vector<double> column(train_values.rows());
    Mat features;
    for (size_t i = 0; i < targets.size(); ++i) {
        int c = targets[i];
        if (c < 0 || c >= train_values.cols()) {
            throw Error(ErrorKind::boundary, "spectral_features: variable index out of range");
        }
        for (int r = 0; r < train_values.rows(); ++r) column[r] = train_values(r, c);
        std::vector<double> z = dft_lowpass(column, freq_keep);
        if (i == 0) {
            features = Mat(static_cast<int>(targets.size()), static_cast<int>(z.size()), 0.0);
        }
        for (size_t j = 0; j < z.size(); ++j) {
            features(static_cast<int>(i), static_cast<int>(j)) = z[j];
        }
    }
    return features;
}

TriggerGenerator::TriggerGenerator(const AttackConfig& atk, GeneratorConfig cfg, Mat features,
                                   uint64_t seed)
    : cfg_(cfg),
      trigger_len_(atk.trigger_len),
      pre_window_(atk.pre_window),
      trigger_budget_(atk.trigger_budget),
      features_(std::move(features)) {
    if (features_.rows() < 1 || features_.cols() < 2) {
        throw Error(ErrorKind::shape, "generator: feature matrix must be |S| x 2k");
    }
    if (cfg_.hidden < 1 || cfg_.embed_dim < 1) {
        throw Error(ErrorKind::config, "generator: hidden and embed_dim must be positive");
    }
    Rng rng(seed);
    int feat = features_.cols();
    int h = cfg_.hidden;
    auto block = [&rng](const std::string& name, int rows, int cols, double scale) {
        ParamBlock b;
        b.name = name;
        b.value = scale == 0.0 ? Mat(rows, cols, 0.0) : rng.gaussian_mat(rows, cols, scale);
        b.m = Mat(rows, cols, 0.0);
        b.v = Mat(rows, cols, 0.0);
        return b;
    };
    blocks_.push_back(block("mlp_w1", feat, h, std::sqrt(1.0 / feat)));
    blocks_.push_back(block("mlp_b1", 1, h, 0.0));
    blocks_.push_back(block("mlp_w2", h, cfg_.embed_dim, std::sqrt(1.0 / h)));
    blocks_.push_back(block("mlp_b2", 1, cfg_.embed_dim, 0.0));
    blocks_.push_back(block("gcn_w1", pre_window_, h, std::sqrt(1.0 / pre_window_)));
    blocks_.push_back(block("gcn_b1", 1, h, 0.0));
    blocks_.push_back(block("gcn_w2", h, h, std::sqrt(1.0 / h)));
    blocks_.push_back(block("gcn_b2", 1, h, 0.0));
    blocks_.push_back(block("head_w", h, trigger_len_, std::sqrt(1.0 / h)));
    blocks_.push_back(block("head_b", 1, trigger_len_, 0.0));
}

std::vector<ad::Var> TriggerGenerator::stage_params(ad::Tape& tape) const {
    std::vector<ad::Var> vars;
    vars.reserve(blocks_.size());
    for (const ParamBlock& b : blocks_) vars.push_back(tape.leaf(b.value));
    return vars;
}

ad::Var TriggerGenerator::graph_on(ad::Tape& tape, const std::vector<ad::Var>& params) const {
    if (params.size() != blocks_.size()) {
        throw Error(ErrorKind::shape, "generator: staged parameter count mismatch");
    }
    ad::Var z = tape.leaf(features_);
    ad::Var h1 = tape.tanh(tape.add_row(tape.matmul(z, params[0]), params[1]));
    ad::Var embed = tape.add_row(tape.matmul(h1, params[2]), params[3]);
    return tape.cosine_matrix(embed);
}

ad::Var TriggerGenerator::propagation_on(ad::Tape& tape,
                                         const std::vector<ad::Var>& params) const {
    return tape.row_l1_normalize(tape.add_identity(graph_on(tape, params)));
}

void TriggerGenerator::check_slab(const Mat& slab) const {
    if (slab.rows() != pre_window_ || slab.cols() != num_targets()) {
        throw Error(ErrorKind::shape,
                    "generator: history slab must be " + std::to_string(pre_window_) + "x" +
                        std::to_string(num_targets()) + ", got " + std::to_string(slab.rows()) +
                        "x" + std::to_string(slab.cols()));
    }
}

ad::Var TriggerGenerator::trigger_on(ad::Tape& tape, ad::Var slab, ad::Var prop,
                                     const std::vector<ad::Var>& params) const {
    check_slab(slab.val());
    ad::Var nodes = tape.transpose(slab);  // |S| x pre_window
    ad::Var h1 = tape.tanh(tape.add_row(tape.matmul(tape.matmul(prop, nodes), params[4]),
                                        params[5]));
    ad::Var h2 = tape.tanh(tape.add_row(tape.matmul(tape.matmul(prop, h1), params[6]),
                                        params[7]));
    ad::Var raw = tape.add_row(tape.matmul(h2, params[8]), params[9]);  // |S| x trigger_len
    ad::Var bounded = tape.scale(tape.tanh(raw), trigger_budget_);
    return tape.transpose(bounded);  // trigger_len x |S|
}

Trigger TriggerGenerator::generate(const Mat& slab) const {
    ad::Tape tape;
    std::vector<ad::Var> params = stage_params(tape);
    ad::Var prop = propagation_on(tape, params);
    ad::Var trig = trigger_on(tape, tape.leaf(slab), prop, params);
    if (!trig.val().all_finite()) {
        throw Error(ErrorKind::divergence, "generator produced non-finite trigger values");
    }
    return Trigger{trig.val()};
}

Mat TriggerGenerator::graph() const {
    ad::Tape tape;
    std::vector<ad::Var> params = stage_params(tape);
    return graph_on(tape, params).val();
}

double normalization_loss(const Trigger& g) {
    if (g.values.size() == 0) throw Error(ErrorKind::shape, "normalization_loss: empty trigger");
    double acc = 0.0;
    for (int c = 0; c < g.values.cols(); ++c) {
        double s = 0.0;
        for (int r = 0; r < g.values.rows(); ++r) s += g.values(r, c);
        acc += std::fabs(s);
    }
    return acc / g.values.cols();
}

ad::Var normalization_loss_on(ad::Tape& tape, ad::Var trigger) {
    return tape.mean(tape.abs(tape.colsum(trigger)));
}

namespace {

nlohmann::json mat_to_json(const Mat& m) {
    return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", m.data()}};
}

Mat mat_from_json(const nlohmann::json& j, const std::string& what) {
    int rows = j.at("rows").get<int>();
    int cols = j.at("cols").get<int>();
    std::vector<double> data = j.at("data").get<std::vector<double>>();
    if (static_cast<int>(data.size()) != rows * cols) {
        throw Error(ErrorKind::parse, "generator state: matrix size mismatch in " + what);
    }
    return Mat(rows, cols, std::move(data));
}

}  // namespace

void save_generator_json(const TriggerGenerator& gen, const std::string& path) {
    nlohmann::json j;
    j["format"] = "backtime-generator";
    j["trigger_len"] = gen.trigger_len();
    j["pre_window"] = gen.pre_window();
    j["trigger_budget"] = gen.trigger_budget();
    j["hidden"] = gen.config().hidden;
    j["embed_dim"] = gen.config().embed_dim;
    j["lr"] = gen.config().lr;
    j["features"] = mat_to_json(gen.features());
    j["graph"] = mat_to_json(gen.graph());
    nlohmann::json blocks = nlohmann::json::object();
    for (const ParamBlock& b : gen.blocks()) {
        blocks[b.name] = {{"value", mat_to_json(b.value)},
                          {"m", mat_to_json(b.m)},
                          {"v", mat_to_json(b.v)}};
    }
    j["blocks"] = blocks;
    std::ofstream out(path);
    if (!out) throw Error(ErrorKind::config, "cannot open generator state for writing: " + path);
    out << j.dump(2) << "\n";
}

TriggerGenerator load_generator_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::config, "cannot open generator state: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw Error(ErrorKind::parse, "generator state: invalid JSON in " + path + ": " + e.what());
    }
    if (!j.contains("format") || j["format"] != "backtime-generator") {
        throw Error(ErrorKind::parse, "generator state: unrecognized format in " + path);
    }
    AttackConfig atk;
    atk.trigger_len = j.at("trigger_len").get<int>();
    atk.pre_window = j.at("pre_window").get<int>();
    atk.trigger_budget = j.at("trigger_budget").get<double>();
    GeneratorConfig cfg;
    cfg.hidden = j.at("hidden").get<int>();
    cfg.embed_dim = j.at("embed_dim").get<int>();
    cfg.lr = j.at("lr").get<double>();
    TriggerGenerator gen(atk, cfg, mat_from_json(j.at("features"), "features"), 0);
    const nlohmann::json& blocks = j.at("blocks");
    for (ParamBlock& b : gen.blocks()) {
        if (!blocks.contains(b.name)) {
            throw Error(ErrorKind::parse, "generator state: missing block " + b.name);
        }
        Mat value = mat_from_json(blocks[b.name]["value"], b.name);
        if (!value.same_shape(b.value)) {
            throw Error(ErrorKind::shape, "generator state: shape mismatch for block " + b.name);
        }
        b.value = std::move(value);
        b.m = mat_from_json(blocks[b.name]["m"], b.name);
        b.v = mat_from_json(blocks[b.name]["v"], b.name);
    }
    return gen;
}

void export_graph_edges(const Mat& graph, const std::vector<int>& targets,
                        const std::string& path) {
    if (graph.rows() != graph.cols() || graph.rows() != static_cast<int>(targets.size())) {
        throw Error(ErrorKind::shape, "export_graph_edges: graph/target size mismatch");
    }
    std::ofstream out(path);
    if (!out) throw Error(ErrorKind::config, "cannot open edge list for writing: " + path);
    char buf[64];
    for (int i = 0; i < graph.rows(); ++i) {
        for (int jj = i + 1; jj < graph.cols(); ++jj) {
            std::snprintf(buf, sizeof(buf), "%.17g", graph(i, jj));
            out << targets[i] << " " << targets[jj] << " " << buf << "\n";
        }
    }
}

}  // namespace backtime
