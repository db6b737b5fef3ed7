#include "backtime/forecaster.hpp"

#include <cmath>
#include <fstream>

#include "json.hpp"

#include "backtime/error.hpp"

namespace backtime {

Arch arch_from_string(const std::string& s) {
    if (s == "mlp") return Arch::mlp;
    if (s == "temporal_conv") return Arch::temporal_conv;
    if (s == "tiny_attention") return Arch::tiny_attention;
    throw Error(ErrorKind::config, "unknown architecture '" + s + "'");
}

std::string arch_to_string(Arch a) {
    switch (a) {
        case Arch::mlp: return "mlp";
        case Arch::temporal_conv: return "temporal_conv";
        case Arch::tiny_attention: return "tiny_attention";
    }
    throw Error(ErrorKind::config, "bad architecture tag");
}

void Adam::step(std::vector<ParamBlock>& blocks, const std::vector<Mat>& grads) {
    if (grads.size() != blocks.size()) {
        throw Error(ErrorKind::shape, "optimizer: gradient count does not match block count");
    }
    ++steps_;
    double bias1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(steps_));
    double bias2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(steps_));
    for (size_t i = 0; i < blocks.size(); ++i) {
        ParamBlock& blk = blocks[i];
        const Mat& g = grads[i];
        if (!blk.value.same_shape(g)) {
            throw Error(ErrorKind::shape, "optimizer: gradient shape mismatch for block " + blk.name);
        }
        for (int j = 0; j < blk.value.size(); ++j) {
            double gj = g.data()[j];
            double& m = blk.m.data()[j];
            double& v = blk.v.data()[j];
            m = cfg_.beta1 * m + (1.0 - cfg_.beta1) * gj;
            v = cfg_.beta2 * v + (1.0 - cfg_.beta2) * gj * gj;
            blk.value.data()[j] -= cfg_.lr * (m / bias1) / (std::sqrt(v / bias2) + cfg_.eps);
        }
        if (!blk.value.all_finite()) {
            throw Error(ErrorKind::divergence,
                        "optimizer produced non-finite parameters in block " + blk.name +
                            " at step " + std::to_string(steps_));
        }
    }
}

ForecastModel::ForecastModel(Arch arch, WindowSpec window, int num_variables, int hidden,
                             uint64_t seed)
    : arch_(arch), window_(window), num_vars_(num_variables), hidden_(hidden) {
    window_.validate();
    if (num_vars_ < 1) throw Error(ErrorKind::config, "model needs at least one variable");
    if (hidden_ < 1) throw Error(ErrorKind::config, "hidden width must be positive");
    if (arch_ == Arch::temporal_conv && window_.input_len < kConvKernel) {
        throw Error(ErrorKind::config, "temporal_conv needs input_len >= " +
                                           std::to_string(kConvKernel));
    }
    init_params(seed);
}

namespace {

ParamBlock make_block(const std::string& name, int rows, int cols, Rng& rng, double scale) {
    ParamBlock b;
    b.name = name;
    b.value = scale == 0.0 ? Mat(rows, cols, 0.0) : rng.gaussian_mat(rows, cols, scale);
    b.m = Mat(rows, cols, 0.0);
    b.v = Mat(rows, cols, 0.0);
    return b;
}

}  // namespace

void ForecastModel::init_params(uint64_t seed) {
    Rng rng(seed);
    int in_flat = window_.input_len * num_vars_;
    int out_flat = window_.output_len * num_vars_;
    int h = hidden_;
    blocks_.clear();
    switch (arch_) {
        case Arch::mlp: {
            blocks_.push_back(make_block("w1", in_flat, h, rng, std::sqrt(1.0 / in_flat)));
            blocks_.push_back(make_block("b1", 1, h, rng, 0.0));
            blocks_.push_back(make_block("w2", h, h, rng, std::sqrt(1.0 / h)));
            blocks_.push_back(make_block("b2", 1, h, rng, 0.0));
            blocks_.push_back(make_block("w3", h, out_flat, rng, std::sqrt(1.0 / h)));
            blocks_.push_back(make_block("b3", 1, out_flat, rng, 0.0));
            break;
        }
        case Arch::temporal_conv: {
            int conv_len = window_.input_len - kConvKernel + 1;
            int conv_flat = conv_len * num_vars_ * kConvChannels;
            blocks_.push_back(make_block("conv_w", kConvChannels, kConvKernel, rng,
                                         std::sqrt(1.0 / kConvKernel)));
            blocks_.push_back(make_block("conv_b", 1, kConvChannels, rng, 0.0));
            blocks_.push_back(make_block("w1", conv_flat, h, rng, std::sqrt(1.0 / conv_flat)));
            blocks_.push_back(make_block("b1", 1, h, rng, 0.0));
            blocks_.push_back(make_block("w2", h, out_flat, rng, std::sqrt(1.0 / h)));
            blocks_.push_back(make_block("b2", 1, out_flat, rng, 0.0));
            break;
        }
        case Arch::tiny_attention: {
            blocks_.push_back(make_block("w_in", num_vars_, h, rng, std::sqrt(1.0 / num_vars_)));
            blocks_.push_back(make_block("b_in", 1, h, rng, 0.0));
            blocks_.push_back(make_block("pos", window_.input_len, h, rng, 0.1));
            blocks_.push_back(make_block("w_q", h, h, rng, std::sqrt(1.0 / h)));
            blocks_.push_back(make_block("w_k", h, h, rng, std::sqrt(1.0 / h)));
            blocks_.push_back(make_block("w_v", h, h, rng, std::sqrt(1.0 / h)));
            blocks_.push_back(make_block("w_out", h, out_flat, rng, std::sqrt(1.0 / h)));
            blocks_.push_back(make_block("b_out", 1, out_flat, rng, 0.0));
            break;
        }
    }
}

std::vector<ad::Var> ForecastModel::stage_params(ad::Tape& tape) const {
    std::vector<ad::Var> vars;
    vars.reserve(blocks_.size());
    for (const ParamBlock& b : blocks_) vars.push_back(tape.leaf(b.value));
    return vars;
}

void ForecastModel::check_history(const Mat& h) const {
    if (h.rows() != window_.input_len || h.cols() != num_vars_) {
        throw Error(ErrorKind::shape,
                    "history must be " + std::to_string(window_.input_len) + "x" +
                        std::to_string(num_vars_) + ", got " + std::to_string(h.rows()) + "x" +
                        std::to_string(h.cols()));
    }
    if (!h.all_finite()) throw Error(ErrorKind::degenerate, "history contains non-finite values");
}

ad::Var ForecastModel::forward_on(ad::Tape& tape, ad::Var history,
                                  const std::vector<ad::Var>& params) const {
    check_history(history.val());
    if (params.size() != blocks_.size()) {
        throw Error(ErrorKind::shape, "forward: staged parameter count mismatch");
    }
    switch (arch_) {
        case Arch::mlp: {
            ad::Var flat = tape.reshape(history, 1, window_.input_len * num_vars_);
            ad::Var h1 = tape.tanh(tape.add(tape.matmul(flat, params[0]), params[1]));
            ad::Var h2 = tape.tanh(tape.add(tape.matmul(h1, params[2]), params[3]));
            ad::Var out = tape.add(tape.matmul(h2, params[4]), params[5]);
            return tape.reshape(out, window_.output_len, num_vars_);
        }
        case Arch::temporal_conv: {
            ad::Var conv = tape.tanh(tape.conv1d_depthwise(history, params[0], params[1]));
            int conv_len = window_.input_len - kConvKernel + 1;
            ad::Var flat = tape.reshape(conv, 1, conv_len * num_vars_ * kConvChannels);
            ad::Var h1 = tape.tanh(tape.add(tape.matmul(flat, params[2]), params[3]));
            ad::Var out = tape.add(tape.matmul(h1, params[4]), params[5]);
            return tape.reshape(out, window_.output_len, num_vars_);
        }
        case Arch::tiny_attention: {
            ad::Var h = tape.tanh(tape.add_row(tape.matmul(history, params[0]), params[1]));
            h = tape.add(h, params[2]);
            ad::Var q = tape.matmul(h, params[3]);
            ad::Var k = tape.matmul(h, params[4]);
            ad::Var v = tape.matmul(h, params[5]);
            ad::Var scores = tape.scale(tape.matmul(q, tape.transpose(k)),
                                        1.0 / std::sqrt(static_cast<double>(hidden_)));
            ad::Var attn = tape.softmax_rows(scores);
            ad::Var z = tape.matmul(attn, v);
            ad::Var pooled = tape.tanh(tape.scale(tape.colsum(z), 1.0 / window_.input_len));
            ad::Var out = tape.add(tape.matmul(pooled, params[6]), params[7]);
            return tape.reshape(out, window_.output_len, num_vars_);
        }
    }
    throw Error(ErrorKind::config, "bad architecture tag");
}

Mat ForecastModel::predict(const Mat& history) const {
    ad::Tape tape;
    std::vector<ad::Var> params = stage_params(tape);
    ad::Var h = tape.leaf(history);
    ad::Var out = forward_on(tape, h, params);
    return out.val();
}

double train_epoch(ForecastModel& model, Adam& opt, const Mat& values,
                   const std::vector<int>& timestamps, const TrainConfig& cfg, Rng& rng) {
    if (timestamps.empty()) throw Error(ErrorKind::degenerate, "train_epoch: no windows");
    if (cfg.batch_size < 1) throw Error(ErrorKind::config, "batch_size must be positive");
    opt.set_lr(cfg.lr);
    std::vector<int> order = timestamps;
    if (cfg.shuffle) {
        for (int i = static_cast<int>(order.size()) - 1; i > 0; --i) {
            int j = rng.uniform_int(i + 1);
            std::swap(order[i], order[j]);
        }
    }
    const int t_in = model.window().input_len;
    const int t_out = model.window().output_len;
    double total = 0.0;
    for (size_t start = 0; start < order.size(); start += cfg.batch_size) {
        size_t stop = std::min(order.size(), start + cfg.batch_size);
        ad::Tape tape;
        std::vector<ad::Var> params = model.stage_params(tape);
        ad::Var loss{};
        for (size_t i = start; i < stop; ++i) {
            int t = order[i];
            ad::Var hist = tape.leaf(values.slice_rows(t - t_in, t));
            ad::Var target = tape.leaf(values.slice_rows(t, t + t_out));
            ad::Var pred = model.forward_on(tape, hist, params);
            ad::Var li = tape.smooth_l1(pred, target, cfg.smooth_l1_delta);
            loss = loss.valid() ? tape.add(loss, li) : li;
        }
        loss = tape.scale(loss, 1.0 / static_cast<double>(stop - start));
        double batch_loss = loss.val()(0, 0);
        if (!std::isfinite(batch_loss)) {
            throw Error(ErrorKind::divergence, "training loss became non-finite");
        }
        tape.backward(loss);
        std::vector<Mat> grads;
        grads.reserve(params.size());
        for (ad::Var p : params) grads.push_back(tape.grad(p));
        opt.step(model.blocks(), grads);
        total += batch_loss * static_cast<double>(stop - start);
    }
    return total / static_cast<double>(order.size());
}

std::vector<double> train_model(ForecastModel& model, Adam& opt, const Mat& values,
                                const std::vector<int>& timestamps, const TrainConfig& cfg,
                                Rng& rng) {
    std::vector<double> losses;
    losses.reserve(cfg.epochs);
    for (int e = 0; e < cfg.epochs; ++e) {
        losses.push_back(train_epoch(model, opt, values, timestamps, cfg, rng));
    }
    return losses;
}

std::map<int, double> evaluate(const ForecastModel& model, const Mat& values,
                               const std::vector<int>& timestamps, Metric metric) {
    const int t_in = model.window().input_len;
    const int t_out = model.window().output_len;
    std::map<int, double> errors;
    for (int t : timestamps) {
        Mat pred = model.predict(values.slice_rows(t - t_in, t));
        Mat target = values.slice_rows(t, t + t_out);
        double acc = 0.0;
        for (int i = 0; i < pred.size(); ++i) {
            double d = pred.data()[i] - target.data()[i];
            acc += metric == Metric::mae ? std::fabs(d) : d * d;
        }
        acc /= pred.size();
        errors[t] = metric == Metric::mae ? acc : std::sqrt(acc);
    }
    return errors;
}

double smooth_l1_value(const Mat& pred, const Mat& target, double delta) {
    if (!pred.same_shape(target)) throw Error(ErrorKind::shape, "smooth_l1: shape mismatch");
    if (pred.size() == 0) throw Error(ErrorKind::shape, "smooth_l1: empty matrix");
    if (delta <= 0.0) throw Error(ErrorKind::config, "smooth_l1: delta must be positive");
    double s = 0.0;
    for (int i = 0; i < pred.size(); ++i) {
        double d = pred.data()[i] - target.data()[i];
        double ad = std::fabs(d);
        s += ad < delta ? 0.5 * d * d / delta : ad - 0.5 * delta;
    }
    return s / pred.size();
}

namespace {

nlohmann::json mat_to_json(const Mat& m) {
    nlohmann::json j;
    j["rows"] = m.rows();
    j["cols"] = m.cols();
    j["data"] = m.data();
    return j;
}

Mat mat_from_json(const nlohmann::json& j, const std::string& what) {
    if (!j.contains("rows") || !j.contains("cols") || !j.contains("data")) {
        throw Error(ErrorKind::parse, "checkpoint: malformed matrix in " + what);
    }
    int rows = j["rows"].get<int>();
    int cols = j["cols"].get<int>();
    std::vector<double> data = j["data"].get<std::vector<double>>();
    if (static_cast<int>(data.size()) != rows * cols) {
        throw Error(ErrorKind::parse, "checkpoint: matrix size mismatch in " + what);
    }
    return Mat(rows, cols, std::move(data));
}

}  // namespace

void save_model_json(const ForecastModel& model, const Adam& opt, const std::string& path) {
    nlohmann::json j;
    j["format"] = "backtime-model";
    j["arch"] = arch_to_string(model.arch());
    j["window"] = {{"input_len", model.window().input_len},
                   {"output_len", model.window().output_len}};
    j["num_variables"] = model.num_variables();
    j["hidden"] = model.hidden();
    j["opt"] = {{"lr", opt.config().lr}, {"steps", opt.steps_taken()}};
    nlohmann::json blocks = nlohmann::json::object();
    for (const ParamBlock& b : model.blocks()) {
        nlohmann::json entry;
        entry["value"] = mat_to_json(b.value);
        entry["m"] = mat_to_json(b.m);
        entry["v"] = mat_to_json(b.v);
        blocks[b.name] = entry;
    }
    j["blocks"] = blocks;
    std::ofstream out(path);
    if (!out) throw Error(ErrorKind::config, "cannot open checkpoint for writing: " + path);
    out << j.dump(2) << "\n";
}

std::pair<ForecastModel, Adam> load_model_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::config, "cannot open checkpoint: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw Error(ErrorKind::parse, "checkpoint: invalid JSON in " + path + ": " + e.what());
    }
    if (!j.contains("format") || j["format"] != "backtime-model") {
        throw Error(ErrorKind::parse, "checkpoint: unrecognized format in " + path);
    }
    WindowSpec window{j["window"]["input_len"].get<int>(), j["window"]["output_len"].get<int>()};
    ForecastModel model(arch_from_string(j["arch"].get<std::string>()), window,
                        j["num_variables"].get<int>(), j["hidden"].get<int>(), 0);
    AdamConfig cfg;
    cfg.lr = j["opt"]["lr"].get<double>();
    Adam opt(cfg);
    opt.set_steps_taken(j["opt"]["steps"].get<long>());
    const nlohmann::json& blocks = j["blocks"];
    for (ParamBlock& b : model.blocks()) {
        if (!blocks.contains(b.name)) {
            throw Error(ErrorKind::parse, "checkpoint: missing block " + b.name);
        }
        Mat value = mat_from_json(blocks[b.name]["value"], b.name);
        Mat m = mat_from_json(blocks[b.name]["m"], b.name);
        Mat v = mat_from_json(blocks[b.name]["v"], b.name);
        if (!value.same_shape(b.value)) {
            throw Error(ErrorKind::shape, "checkpoint: shape mismatch for block " + b.name);
        }
        b.value = std::move(value);
        b.m = std::move(m);
        b.v = std::move(v);
    }
    return {std::move(model), std::move(opt)};
}

}  // namespace backtime
