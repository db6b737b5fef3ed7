#include "backtime/autodiff.hpp"

#include <algorithm>
#include <cmath>

#include "backtime/error.hpp"

namespace backtime::ad {

const Mat& Var::val() const { return tape->value(*this); }

void Tape::check(Var v) const {
    if (v.tape != this || v.idx < 0 || v.idx >= static_cast<int>(nodes_.size())) {
        throw Error(ErrorKind::shape, "variable does not belong to this tape");
    }
}

Var Tape::push(Mat value, std::function<void()> back) {
    Node node{std::move(value), Mat(), std::move(back)};
    node.grad = Mat(node.value.rows(), node.value.cols(), 0.0);
    nodes_.push_back(std::move(node));
    return Var{this, static_cast<int>(nodes_.size()) - 1};
}

Var Tape::leaf(Mat value) { return push(std::move(value)); }

const Mat& Tape::value(Var v) const {
    check(v);
    return nodes_[v.idx].value;
}

const Mat& Tape::grad(Var v) const {
    check(v);
    return nodes_[v.idx].grad;
}

Var Tape::matmul(Var a, Var b) {
    check(a);
    check(b);
    if (val_ref(a.idx).cols() != val_ref(b.idx).rows())
        throw Error(ErrorKind::shape, "matmul: inner dimensions differ");
    Mat out = backtime::matmul(val_ref(a.idx), val_ref(b.idx));
    int ai = a.idx, bi = b.idx;
    Var c = push(std::move(out), [this, ai, bi]() {
        const Mat& g = grad_ref(cur_);
        const Mat& av = val_ref(ai);
        const Mat& bv = val_ref(bi);
        Mat& ga = grad_ref(ai);
        Mat& gb = grad_ref(bi);
        // ga += g * b^T
        for (int i = 0; i < av.rows(); ++i) {
            for (int k = 0; k < g.cols(); ++k) {
                double gik = g(i, k);
                if (gik == 0.0) continue;
                for (int j = 0; j < av.cols(); ++j) ga(i, j) += gik * bv(j, k);
            }
        }
        // gb += a^T * g
        for (int i = 0; i < av.rows(); ++i) {
            for (int j = 0; j < av.cols(); ++j) {
                double aij = av(i, j);
                if (aij == 0.0) continue;
                for (int k = 0; k < g.cols(); ++k) gb(j, k) += aij * g(i, k);
            }
        }
    });
    return c;
}

Var Tape::add(Var a, Var b) {
    check(a);
    check(b);
    const Mat& av = val_ref(a.idx);
    const Mat& bv = val_ref(b.idx);
    if (!av.same_shape(bv)) throw Error(ErrorKind::shape, "add: shape mismatch");
    Mat out(av.rows(), av.cols(), 0.0);
    for (int i = 0; i < av.size(); ++i) out.data()[i] = av.data()[i] + bv.data()[i];
    int ai = a.idx, bi = b.idx;
    Var c = push(std::move(out), [this, ai, bi]() {
        const Mat& g = grad_ref(cur_);
        Mat& ga = grad_ref(ai);
        Mat& gb = grad_ref(bi);
        for (int i = 0; i < g.size(); ++i) {
            ga.data()[i] += g.data()[i];
            gb.data()[i] += g.data()[i];
        }
    });
    return c;
}

Var Tape::sub(Var a, Var b) {
    check(a);
    check(b);
    const Mat& av = val_ref(a.idx);
    const Mat& bv = val_ref(b.idx);
    if (!av.same_shape(bv)) throw Error(ErrorKind::shape, "sub: shape mismatch");
    Mat out(av.rows(), av.cols(), 0.0);
    for (int i = 0; i < av.size(); ++i) out.data()[i] = av.data()[i] - bv.data()[i];
    int ai = a.idx, bi = b.idx;
    Var c = push(std::move(out), [this, ai, bi]() {
        const Mat& g = grad_ref(cur_);
        Mat& ga = grad_ref(ai);
        Mat& gb = grad_ref(bi);
        for (int i = 0; i < g.size(); ++i) {
            ga.data()[i] += g.data()[i];
            gb.data()[i] -= g.data()[i];
        }
    });
    return c;
}

Var Tape::mul(Var a, Var b) {
    check(a);
    check(b);
    const Mat& av = val_ref(a.idx);
    const Mat& bv = val_ref(b.idx);
    if (!av.same_shape(bv)) throw Error(ErrorKind::shape, "mul: shape mismatch");
    Mat out(av.rows(), av.cols(), 0.0);
    for (int i = 0; i < av.size(); ++i) out.data()[i] = av.data()[i] * bv.data()[i];
    int ai = a.idx, bi = b.idx;
    Var c = push(std::move(out), [this, ai, bi]() {
        const Mat& g = grad_ref(cur_);
        const Mat& av2 = val_ref(ai);
        const Mat& bv2 = val_ref(bi);
        Mat& ga = grad_ref(ai);
        Mat& gb = grad_ref(bi);
        for (int i = 0; i < g.size(); ++i) {
            ga.data()[i] += g.data()[i] * bv2.data()[i];
            gb.data()[i] += g.data()[i] * av2.data()[i];
        }
    });
    return c;
}

Var Tape::scale(Var a, double s) {
    check(a);
    const Mat& av = val_ref(a.idx);
    Mat out(av.rows(), av.cols(), 0.0);
    for (int i = 0; i < av.size(); ++i) out.data()[i] = av.data()[i] * s;
    int ai = a.idx;
    Var c = push(std::move(out), [this, ai, s]() {
        const Mat& g = grad_ref(cur_);
        Mat& ga = grad_ref(ai);
        for (int i = 0; i < g.size(); ++i) ga.data()[i] += g.data()[i] * s;
    });
    return c;
}

Var Tape::add_row(Var a, Var row) {
    check(a);
    check(row);
    const Mat& av = val_ref(a.idx);
    const Mat& rv = val_ref(row.idx);
    if (rv.rows() != 1 || rv.cols() != av.cols()) {
        throw Error(ErrorKind::shape, "add_row: row must be 1 x cols(a)");
    }
    Mat out(av.rows(), av.cols(), 0.0);
    for (int i = 0; i < av.rows(); ++i) {
        for (int j = 0; j < av.cols(); ++j) out(i, j) = av(i, j) + rv(0, j);
    }
    int ai = a.idx, ri = row.idx;
    Var c = push(std::move(out), [this, ai, ri]() {
        const Mat& g = grad_ref(cur_);
        Mat& ga = grad_ref(ai);
        Mat& gr = grad_ref(ri);
        for (int i = 0; i < g.rows(); ++i) {
            for (int j = 0; j < g.cols(); ++j) {
                ga(i, j) += g(i, j);
                gr(0, j) += g(i, j);
            }
        }
    });
    return c;
}

Var Tape::tanh(Var a) {
    check(a);
    const Mat& av = val_ref(a.idx);
    Mat out(av.rows(), av.cols(), 0.0);
    for (int i = 0; i < av.size(); ++i) out.data()[i] = std::tanh(av.data()[i]);
    int ai = a.idx;
    Var c = push(std::move(out), [this, ai]() {
        const Mat& g = grad_ref(cur_);
        const Mat& y = val_ref(cur_);
        Mat& ga = grad_ref(ai);
        for (int i = 0; i < g.size(); ++i) {
            ga.data()[i] += g.data()[i] * (1.0 - y.data()[i] * y.data()[i]);
        }
    });
    return c;
}

Var Tape::abs(Var a) {
    check(a);
    const Mat& av = val_ref(a.idx);
    Mat out(av.rows(), av.cols(), 0.0);
    for (int i = 0; i < av.size(); ++i) out.data()[i] = std::fabs(av.data()[i]);
    int ai = a.idx;
    Var c = push(std::move(out), [this, ai]() {
        const Mat& g = grad_ref(cur_);
        const Mat& x = val_ref(ai);
        Mat& ga = grad_ref(ai);
        for (int i = 0; i < g.size(); ++i) {
            double s = x.data()[i] > 0.0 ? 1.0 : (x.data()[i] < 0.0 ? -1.0 : 0.0);
            ga.data()[i] += g.data()[i] * s;
        }
    });
    return c;
}

Var Tape::transpose(Var a) {
    check(a);
    Mat out = val_ref(a.idx).transposed();
    int ai = a.idx;
    Var c = push(std::move(out), [this, ai]() {
        const Mat& g = grad_ref(cur_);
        Mat& ga = grad_ref(ai);
        for (int i = 0; i < g.rows(); ++i) {
            for (int j = 0; j < g.cols(); ++j) ga(j, i) += g(i, j);
        }
    });
    return c;
}

Var Tape::reshape(Var a, int rows, int cols) {
    check(a);
    const Mat& av = val_ref(a.idx);
    if (rows * cols != av.size()) throw Error(ErrorKind::shape, "reshape: size mismatch");
    Mat out(rows, cols, 0.0);
    for (int i = 0; i < av.size(); ++i) out.data()[i] = av.data()[i];
    int ai = a.idx;
    Var c = push(std::move(out), [this, ai]() {
        const Mat& g = grad_ref(cur_);
        Mat& ga = grad_ref(ai);
        for (int i = 0; i < g.size(); ++i) ga.data()[i] += g.data()[i];
    });
    return c;
}

Var Tape::slice_rows(Var a, int r0, int r1) {
    check(a);
    Mat out = val_ref(a.idx).slice_rows(r0, r1);
    int ai = a.idx;
    Var c = push(std::move(out), [this, ai, r0]() {
        const Mat& g = grad_ref(cur_);
        Mat& ga = grad_ref(ai);
        for (int i = 0; i < g.rows(); ++i) {
            for (int j = 0; j < g.cols(); ++j) ga(r0 + i, j) += g(i, j);
        }
    });
    return c;
}

Var Tape::select_cols(Var a, const std::vector<int>& cols) {
    check(a);
    Mat out = val_ref(a.idx).select_cols(cols);
    int ai = a.idx;
    Var c = push(std::move(out), [this, ai, cols]() {
        const Mat& g = grad_ref(cur_);
        Mat& ga = grad_ref(ai);
        for (int i = 0; i < g.rows(); ++i) {
            for (size_t j = 0; j < cols.size(); ++j) {
                ga(i, cols[j]) += g(i, static_cast<int>(j));
            }
        }
    });
    return c;
}

Var Tape::sum(Var a) {
    check(a);
    const Mat& av = val_ref(a.idx);
    double s = 0.0;
    for (int i = 0; i < av.size(); ++i) s += av.data()[i];
    int ai = a.idx;
    Var c = push(Mat(1, 1, {s}), [this, ai]() {
        double g = grad_ref(cur_)(0, 0);
        Mat& ga = grad_ref(ai);
        for (int i = 0; i < ga.size(); ++i) ga.data()[i] += g;
    });
    return c;
}

Var Tape::mean(Var a) {
    check(a);
    const Mat& av = val_ref(a.idx);
    if (av.size() == 0) throw Error(ErrorKind::shape, "mean: empty matrix");
    double s = 0.0;
    for (int i = 0; i < av.size(); ++i) s += av.data()[i];
    double inv = 1.0 / av.size();
    int ai = a.idx;
    Var c = push(Mat(1, 1, {s * inv}), [this, ai, inv]() {
        double g = grad_ref(cur_)(0, 0) * inv;
        Mat& ga = grad_ref(ai);
        for (int i = 0; i < ga.size(); ++i) ga.data()[i] += g;
    });
    return c;
}

Var Tape::colsum(Var a) {
    check(a);
    const Mat& av = val_ref(a.idx);
    Mat out(1, av.cols(), 0.0);
    for (int i = 0; i < av.rows(); ++i) {
        for (int j = 0; j < av.cols(); ++j) out(0, j) += av(i, j);
    }
    int ai = a.idx;
    Var c = push(std::move(out), [this, ai]() {
        const Mat& g = grad_ref(cur_);
        Mat& ga = grad_ref(ai);
        for (int i = 0; i < ga.rows(); ++i) {
            for (int j = 0; j < ga.cols(); ++j) ga(i, j) += g(0, j);
        }
    });
    return c;
}

Var Tape::softmax_rows(Var a) {
    check(a);
    const Mat& av = val_ref(a.idx);
    Mat out(av.rows(), av.cols(), 0.0);
    for (int i = 0; i < av.rows(); ++i) {
        double mx = av(i, 0);
        for (int j = 1; j < av.cols(); ++j) mx = std::max(mx, av(i, j));
        double z = 0.0;
        for (int j = 0; j < av.cols(); ++j) {
            out(i, j) = std::exp(av(i, j) - mx);
            z += out(i, j);
        }
        for (int j = 0; j < av.cols(); ++j) out(i, j) /= z;
    }
    int ai = a.idx;
    Var c = push(std::move(out), [this, ai]() {
        const Mat& g = grad_ref(cur_);
        const Mat& y = val_ref(cur_);
        Mat& ga = grad_ref(ai);
        for (int i = 0; i < g.rows(); ++i) {
            double dot = 0.0;
            for (int j = 0; j < g.cols(); ++j) dot += g(i, j) * y(i, j);
            for (int j = 0; j < g.cols(); ++j) ga(i, j) += y(i, j) * (g(i, j) - dot);
        }
    });
    return c;
}

Var Tape::mse(Var a, Var b) {
    check(a);
    check(b);
    const Mat& av = val_ref(a.idx);
    const Mat& bv = val_ref(b.idx);
    if (!av.same_shape(bv)) throw Error(ErrorKind::shape, "mse: shape mismatch");
    if (av.size() == 0) throw Error(ErrorKind::shape, "mse: empty matrix");
    double s = 0.0;
    for (int i = 0; i < av.size(); ++i) {
        double d = av.data()[i] - bv.data()[i];
        s += d * d;
    }
    double inv = 1.0 / av.size();
    int ai = a.idx, bi = b.idx;
    Var c = push(Mat(1, 1, {s * inv}), [this, ai, bi, inv]() {
        double g = grad_ref(cur_)(0, 0);
        const Mat& av2 = val_ref(ai);
        const Mat& bv2 = val_ref(bi);
        Mat& ga = grad_ref(ai);
        Mat& gb = grad_ref(bi);
        for (int i = 0; i < av2.size(); ++i) {
            double d = 2.0 * inv * (av2.data()[i] - bv2.data()[i]) * g;
            ga.data()[i] += d;
            gb.data()[i] -= d;
        }
    });
    return c;
}

Var Tape::smooth_l1(Var a, Var b, double delta) {
    check(a);
    check(b);
    if (delta <= 0.0) throw Error(ErrorKind::config, "smooth_l1: delta must be positive");
    const Mat& av = val_ref(a.idx);
    const Mat& bv = val_ref(b.idx);
    if (!av.same_shape(bv)) throw Error(ErrorKind::shape, "smooth_l1: shape mismatch");
    if (av.size() == 0) throw Error(ErrorKind::shape, "smooth_l1: empty matrix");
    double s = 0.0;
    for (int i = 0; i < av.size(); ++i) {
        double d = av.data()[i] - bv.data()[i];
        double ad = std::fabs(d);
        s += ad < delta ? 0.5 * d * d / delta : ad - 0.5 * delta;
    }
    double inv = 1.0 / av.size();
    int ai = a.idx, bi = b.idx;
    Var c = push(Mat(1, 1, {s * inv}), [this, ai, bi, delta, inv]() {
        double g = grad_ref(cur_)(0, 0);
        const Mat& av2 = val_ref(ai);
        const Mat& bv2 = val_ref(bi);
        Mat& ga = grad_ref(ai);
        Mat& gb = grad_ref(bi);
        for (int i = 0; i < av2.size(); ++i) {
            double d = av2.data()[i] - bv2.data()[i];
            double dd = std::fabs(d) < delta ? d / delta : (d > 0.0 ? 1.0 : -1.0);
            ga.data()[i] += g * inv * dd;
            gb.data()[i] -= g * inv * dd;
        }
    });
    return c;
}

Var Tape::cosine_matrix(Var e) {
    check(e);
    const Mat& ev = val_ref(e.idx);
    int m = ev.rows();
    std::vector<double> norms(m, 0.0);
    for (int i = 0; i < m; ++i) {
        double s = 0.0;
        for (int j = 0; j < ev.cols(); ++j) s += ev(i, j) * ev(i, j);
        norms[i] = std::sqrt(s);
    }
    Mat out(m, m, 0.0);
    for (int i = 0; i < m; ++i) {
        out(i, i) = 1.0;
        for (int j = i + 1; j < m; ++j) {
            if (norms[i] == 0.0 || norms[j] == 0.0) continue;
            double dot = 0.0;
            for (int k = 0; k < ev.cols(); ++k) dot += ev(i, k) * ev(j, k);
            double c = dot / (norms[i] * norms[j]);
            out(i, j) = c;
            out(j, i) = c;
        }
    }
    int ei = e.idx;
    Var c = push(std::move(out), [this, ei, norms]() {
        const Mat& g = grad_ref(cur_);
        const Mat& a = val_ref(cur_);
        const Mat& ev2 = val_ref(ei);
        Mat& ge = grad_ref(ei);
        int m2 = ev2.rows();
        int d = ev2.cols();
        for (int i = 0; i < m2; ++i) {
            for (int j = 0; j < m2; ++j) {
                if (i == j) continue;
                double gij = g(i, j);
                if (gij == 0.0 || norms[i] == 0.0 || norms[j] == 0.0) continue;
                double inv = 1.0 / (norms[i] * norms[j]);
                double cii = a(i, j) / (norms[i] * norms[i]);
                double cjj = a(i, j) / (norms[j] * norms[j]);
                for (int k = 0; k < d; ++k) {
                    // cell (i, j) depends on both participating rows
                    ge(i, k) += gij * (ev2(j, k) * inv - cii * ev2(i, k));
                    ge(j, k) += gij * (ev2(i, k) * inv - cjj * ev2(j, k));
                }
            }
        }
    });
    return c;
}

Var Tape::add_identity(Var a) {
    check(a);
    const Mat& av = val_ref(a.idx);
    if (av.rows() != av.cols()) throw Error(ErrorKind::shape, "add_identity: matrix not square");
    Mat out = av;
    for (int i = 0; i < av.rows(); ++i) out(i, i) += 1.0;
    int ai = a.idx;
    Var c = push(std::move(out), [this, ai]() {
        const Mat& g = grad_ref(cur_);
        Mat& ga = grad_ref(ai);
        for (int i = 0; i < g.size(); ++i) ga.data()[i] += g.data()[i];
    });
    return c;
}

Var Tape::row_l1_normalize(Var m) {
    check(m);
    const Mat& mv = val_ref(m.idx);
    std::vector<double> rowsum(mv.rows(), 0.0);
    for (int i = 0; i < mv.rows(); ++i) {
        for (int j = 0; j < mv.cols(); ++j) rowsum[i] += std::fabs(mv(i, j));
        if (rowsum[i] == 0.0) {
            throw Error(ErrorKind::degenerate, "row_l1_normalize: zero row " + std::to_string(i));
        }
    }
    Mat out(mv.rows(), mv.cols(), 0.0);
    for (int i = 0; i < mv.rows(); ++i) {
        for (int j = 0; j < mv.cols(); ++j) out(i, j) = mv(i, j) / rowsum[i];
    }
    int mi = m.idx;
    Var c = push(std::move(out), [this, mi, rowsum]() {
        const Mat& g = grad_ref(cur_);
        const Mat& mv2 = val_ref(mi);
        const Mat& y = val_ref(cur_);
        Mat& gm = grad_ref(mi);
        for (int i = 0; i < mv2.rows(); ++i) {
            double dot = 0.0;
            for (int j = 0; j < mv2.cols(); ++j) dot += g(i, j) * y(i, j);
            for (int k = 0; k < mv2.cols(); ++k) {
                double sgn = mv2(i, k) > 0.0 ? 1.0 : (mv2(i, k) < 0.0 ? -1.0 : 0.0);
                gm(i, k) += (g(i, k) - dot * sgn) / rowsum[i];
            }
        }
    });
    return c;
}

Var Tape::inject(Var x, int t, const std::vector<int>& cols, Var trigger,
                 const std::vector<double>& pattern, int trigger_len) {
    check(x);
    check(trigger);
    const Mat& xv = val_ref(x.idx);
    const Mat& tv = val_ref(trigger.idx);
    int plen = static_cast<int>(pattern.size());
    if (tv.rows() != trigger_len || tv.cols() != static_cast<int>(cols.size())) {
        throw Error(ErrorKind::shape, "inject: trigger shape mismatch");
    }
    if (t - trigger_len - 1 < 0 || t + plen > xv.rows()) {
        throw Error(ErrorKind::boundary,
                    "inject: timestamp " + std::to_string(t) + " out of range");
    }
    for (int c : cols) {
        if (c < 0 || c >= xv.cols()) throw Error(ErrorKind::boundary, "inject: bad column");
    }
    Mat out = xv;
    int base_row = t - trigger_len - 1;
    for (size_t ci = 0; ci < cols.size(); ++ci) {
        double b = xv(base_row, cols[ci]);
        for (int j = 0; j < trigger_len; ++j) {
            out(t - trigger_len + j, cols[ci]) = b + tv(j, static_cast<int>(ci));
        }
        for (int j = 0; j < plen; ++j) out(t + j, cols[ci]) = b + pattern[j];
    }
    int xi = x.idx, gi = trigger.idx;
    Var c = push(std::move(out), [this, xi, gi, t, cols, plen, trigger_len, base_row]() {
        const Mat& g = grad_ref(cur_);
        Mat& gx = grad_ref(xi);
        Mat& gt = grad_ref(gi);
        Mat overwritten(g.rows(), g.cols(), 0.0);
        for (size_t ci = 0; ci < cols.size(); ++ci) {
            double base_accum = 0.0;
            for (int j = 0; j < trigger_len; ++j) {
                double gv = g(t - trigger_len + j, cols[ci]);
                gt(j, static_cast<int>(ci)) += gv;
                base_accum += gv;
                overwritten(t - trigger_len + j, cols[ci]) = 1.0;
            }
            for (int j = 0; j < plen; ++j) {
                base_accum += g(t + j, cols[ci]);
                overwritten(t + j, cols[ci]) = 1.0;
            }
            gx(base_row, cols[ci]) += base_accum;
        }
        for (int i = 0; i < g.rows(); ++i) {
            for (int j = 0; j < g.cols(); ++j) {
                if (overwritten(i, j) == 0.0) gx(i, j) += g(i, j);
            }
        }
    });
    return c;
}

Var Tape::conv1d_depthwise(Var x, Var w, Var bias) {
    check(x);
    check(w);
    check(bias);
    const Mat& xv = val_ref(x.idx);
    const Mat& wv = val_ref(w.idx);
    const Mat& bv = val_ref(bias.idx);
    int channels = wv.rows();
    int kernel = wv.cols();
    if (bv.rows() != 1 || bv.cols() != channels) {
        throw Error(ErrorKind::shape, "conv1d_depthwise: bias must be 1 x channels");
    }
    int out_len = xv.rows() - kernel + 1;
    if (out_len <= 0) throw Error(ErrorKind::shape, "conv1d_depthwise: kernel longer than input");
    int n = xv.cols();
    Mat out(out_len, n * channels, 0.0);
    for (int tau = 0; tau < out_len; ++tau) {
        for (int v = 0; v < n; ++v) {
            for (int ch = 0; ch < channels; ++ch) {
                double s = bv(0, ch);
                for (int k = 0; k < kernel; ++k) s += wv(ch, k) * xv(tau + k, v);
                out(tau, v * channels + ch) = s;
            }
        }
    }
    int xi = x.idx, wi = w.idx, bi = bias.idx;
    Var c = push(std::move(out), [this, xi, wi, bi, channels, kernel, n]() {
        const Mat& g = grad_ref(cur_);
        const Mat& xv2 = val_ref(xi);
        const Mat& wv2 = val_ref(wi);
        Mat& gx = grad_ref(xi);
        Mat& gw = grad_ref(wi);
        Mat& gb = grad_ref(bi);
        int out_len2 = g.rows();
        for (int tau = 0; tau < out_len2; ++tau) {
            for (int v = 0; v < n; ++v) {
                for (int ch = 0; ch < channels; ++ch) {
                    double gv = g(tau, v * channels + ch);
                    if (gv == 0.0) continue;
                    gb(0, ch) += gv;
                    for (int k = 0; k < kernel; ++k) {
                        gx(tau + k, v) += gv * wv2(ch, k);
                        gw(ch, k) += gv * xv2(tau + k, v);
                    }
                }
            }
        }
    });
    return c;
}

void Tape::backward(Var root) {
    check(root);
    const Mat& rv = val_ref(root.idx);
    if (rv.rows() != 1 || rv.cols() != 1) {
        throw Error(ErrorKind::shape, "backward: root must be a scalar");
    }
    grad_ref(root.idx)(0, 0) = 1.0;
    for (int i = root.idx; i >= 0; --i) {
        if (!nodes_[i].back) continue;
        cur_ = i;
        nodes_[i].back();
    }
}

Mat finite_difference(const std::function<double(const Mat&)>& f, const Mat& x, double h) {
    Mat g(x.rows(), x.cols(), 0.0);
    Mat probe = x;
    for (int i = 0; i < x.size(); ++i) {
        double orig = probe.data()[i];
        probe.data()[i] = orig + h;
        double up = f(probe);
        probe.data()[i] = orig - h;
        double down = f(probe);
        probe.data()[i] = orig;
        g.data()[i] = (up - down) / (2.0 * h);
    }
    return g;
}

double relative_error(const Mat& a, const Mat& b, double floor) {
    if (!a.same_shape(b)) throw Error(ErrorKind::shape, "relative_error: shape mismatch");
    double worst = 0.0;
    for (int i = 0; i < a.size(); ++i) {
        double denom = std::max({std::fabs(a.data()[i]), std::fabs(b.data()[i]), floor});
        worst = std::max(worst, std::fabs(a.data()[i] - b.data()[i]) / denom);
    }
    return worst;
}

}  // namespace backtime::ad
