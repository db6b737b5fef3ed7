#pragma once

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <stdexcept>
#include <string>
#include <vector>

namespace backtime {

/// Dense row-major matrix of doubles. The only numeric container used
/// throughout the library; vectors are 1xN or Nx1 matrices.
class Mat {
public:
    Mat() = default;
    Mat(int rows, int cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(static_cast<size_t>(rows) * cols, fill) {
        if (rows < 0 || cols < 0) throw std::invalid_argument("Mat: negative dimensions");
    }
    Mat(int rows, int cols, std::vector<double> values)
        : rows_(rows), cols_(cols), data_(std::move(values)) {
        if (data_.size() != static_cast<size_t>(rows) * cols)
            throw std::invalid_argument("Mat: value count does not match shape");
    }

    static Mat row(std::initializer_list<double> values) {
        Mat m;
        m.rows_ = 1;
        m.cols_ = static_cast<int>(values.size());
        m.data_.assign(values.begin(), values.end());
        return m;
    }

    int rows() const { return rows_; }
    int cols() const { return cols_; }
    int size() const { return static_cast<int>(data_.size()); }

    double& operator()(int r, int c) { return data_[static_cast<size_t>(r) * cols_ + c]; }
    double operator()(int r, int c) const { return data_[static_cast<size_t>(r) * cols_ + c]; }

    double& at(int r, int c) {
        check_index(r, c);
        return (*this)(r, c);
    }
    double at(int r, int c) const {
        check_index(r, c);
        return (*this)(r, c);
    }

    std::vector<double>& data() { return data_; }
    const std::vector<double>& data() const { return data_; }

    bool same_shape(const Mat& other) const {
        return rows_ == other.rows_ && cols_ == other.cols_;
    }

    bool all_finite() const {
        for (double v : data_)
            if (!std::isfinite(v)) return false;
        return true;
    }

    double max_abs() const {
        double m = 0.0;
        for (double v : data_) m = std::max(m, std::abs(v));
        return m;
    }

    Mat transposed() const {
        Mat out(cols_, rows_);
        for (int r = 0; r < rows_; ++r)
            for (int c = 0; c < cols_; ++c) out(c, r) = (*this)(r, c);
        return out;
    }

    /// Rows [r0, r1) as a copy.
    Mat slice_rows(int r0, int r1) const {
        if (r0 < 0 || r1 > rows_ || r0 > r1)
            throw std::out_of_range("Mat::slice_rows: range [" + std::to_string(r0) + ", " +
                                    std::to_string(r1) + ") outside 0.." + std::to_string(rows_));
        Mat out(r1 - r0, cols_);
        for (int r = r0; r < r1; ++r)
            for (int c = 0; c < cols_; ++c) out(r - r0, c) = (*this)(r, c);
        return out;
    }

    Mat select_cols(const std::vector<int>& cols) const {
        Mat out(rows_, static_cast<int>(cols.size()));
        for (int r = 0; r < rows_; ++r)
            for (size_t j = 0; j < cols.size(); ++j) out(r, static_cast<int>(j)) = at(r, cols[j]);
        return out;
    }

    bool operator==(const Mat& other) const {
        return rows_ == other.rows_ && cols_ == other.cols_ && data_ == other.data_;
    }

private:
    void check_index(int r, int c) const {
        if (r < 0 || r >= rows_ || c < 0 || c >= cols_)
            throw std::out_of_range("Mat: index (" + std::to_string(r) + "," + std::to_string(c) +
                                    ") outside " + std::to_string(rows_) + "x" + std::to_string(cols_));
    }

    int rows_ = 0;
    int cols_ = 0;
    std::vector<double> data_;
};

inline Mat matmul(const Mat& a, const Mat& b) {
    if (a.cols() != b.rows()) throw std::invalid_argument("matmul: inner dimensions differ");
    Mat out(a.rows(), b.cols());
    for (int i = 0; i < a.rows(); ++i)
        for (int k = 0; k < a.cols(); ++k) {
            const double aik = a(i, k);
            if (aik == 0.0) continue;
            for (int j = 0; j < b.cols(); ++j) out(i, j) += aik * b(k, j);
        }
    return out;
}

inline double max_abs_diff(const Mat& a, const Mat& b) {
    if (!a.same_shape(b)) throw std::invalid_argument("max_abs_diff: shape mismatch");
    double m = 0.0;
    for (int i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
    return m;
}

}  // namespace backtime
