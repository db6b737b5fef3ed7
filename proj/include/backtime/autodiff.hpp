#pragma once

#include <functional>
#include <vector>

#include "backtime/matrix.hpp"

namespace backtime::ad {

class Tape;

/// Handle to a node on a tape. Cheap to copy; valid while the tape lives.
struct Var {
    Tape* tape = nullptr;
    int idx = -1;
    bool valid() const { return tape != nullptr && idx >= 0; }
    const Mat& val() const;
};

/// Reverse-mode tape over dense matrices. Build a graph with the op methods,
/// call backward on a 1x1 result, then read grad() of any node. Gradients of
/// every op are validated against central finite differences in the tests.
class Tape {
public:
    Var leaf(Mat value);
    Var scalar(double v) { return leaf(Mat(1, 1, {v})); }

    Var matmul(Var a, Var b);
    Var add(Var a, Var b);
    Var sub(Var a, Var b);
    Var mul(Var a, Var b);
    Var scale(Var a, double s);
    Var add_row(Var a, Var row);  // broadcast a 1xC row over an RxC matrix
    Var tanh(Var a);
    Var abs(Var a);
    Var transpose(Var a);
    Var reshape(Var a, int rows, int cols);
    Var slice_rows(Var a, int r0, int r1);
    Var select_cols(Var a, const std::vector<int>& cols);
    Var sum(Var a);
    Var mean(Var a);
    Var colsum(Var a);
    Var softmax_rows(Var a);
    Var mse(Var a, Var b);
    Var smooth_l1(Var a, Var b, double delta);

    /// Pairwise cosine similarities of the rows of e, with unit diagonal and
    /// zero-norm rows treated as similarity 0 to every other row.
    Var cosine_matrix(Var e);

    /// out = a + I (square a).
    Var add_identity(Var a);

    /// Row-normalizes by the L1 row sum, preserving entry signs:
    /// out[i,j] = m[i,j] / sum_k |m[i,k]|.
    Var row_l1_normalize(Var m);

    /// Broadcast trigger/pattern injection as a differentiable op.
    /// base row b = x[t - trigger_len - 1, cols]; rows [t - trigger_len, t)
    /// at cols become b + trigger; rows [t, t + |pattern|) become b + pattern.
    Var inject(Var x, int t, const std::vector<int>& cols, Var trigger,
               const std::vector<double>& pattern, int trigger_len);

    /// Depthwise temporal convolution: filters (C x K) shared across the N
    /// input columns; output row tau, column v*C + c holds filter c applied
    /// to column v at offset tau. Valid convolution, bias per filter.
    Var conv1d_depthwise(Var x, Var w, Var bias);

    void backward(Var root);

    const Mat& value(Var v) const;
    const Mat& grad(Var v) const;
    size_t size() const { return nodes_.size(); }

private:
    struct Node {
        Mat value;
        Mat grad;
        std::function<void()> back;  // empty for leaves
    };

    Var push(Mat value, std::function<void()> back = {});
    Mat& grad_ref(int idx) { return nodes_[idx].grad; }
    const Mat& val_ref(int idx) const { return nodes_[idx].value; }
    void check(Var v) const;

    std::vector<Node> nodes_;
    int cur_ = -1;  // node whose closure is running during backward()
};

/// Central finite-difference gradient of f at x, elementwise.
Mat finite_difference(const std::function<double(const Mat&)>& f, const Mat& x,
                      double h = 1e-5);

/// max over elements of |a-b| / max(|a|, |b|, floor).
double relative_error(const Mat& a, const Mat& b, double floor = 1e-6);

}  // namespace backtime::ad
