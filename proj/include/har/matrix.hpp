#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace har {

/// Dense row-major matrix of doubles. The only numeric container used by the
/// model code. Every operation below allocates a fresh result (or writes into
/// an explicitly named output) and sums in a fixed loop order, so identical
/// inputs always produce bit-identical outputs.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
    Matrix(std::size_t rows, std::size_t cols, std::vector<double> values);
    Matrix(std::initializer_list<std::initializer_list<double>> rows);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::size_t size() const noexcept { return values_.size(); }
    bool empty() const noexcept { return values_.empty(); }

    double& operator()(std::size_t r, std::size_t c) noexcept { return values_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const noexcept { return values_[r * cols_ + c]; }

    std::span<double> row(std::size_t r) noexcept { return {values_.data() + r * cols_, cols_}; }
    std::span<const double> row(std::size_t r) const noexcept {
        return {values_.data() + r * cols_, cols_};
    }

    std::span<double> values() noexcept { return values_; }
    std::span<const double> values() const noexcept { return values_; }
    double* data() noexcept { return values_.data(); }
    const double* data() const noexcept { return values_.data(); }

    void fill(double value);

    /// "RxC", used in error messages.
    std::string shape_string() const;

    bool same_shape(const Matrix& other) const noexcept {
        return rows_ == other.rows_ && cols_ == other.cols_;
    }

    friend bool operator==(const Matrix&, const Matrix&) = default;

    static Matrix identity(std::size_t n);

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> values_;
};

/// a[m x k] * b[k x n].
Matrix matmul(const Matrix& a, const Matrix& b);

/// out += a^T * b, where a is [m x k], b is [m x n] and out is [k x n].
void matmul_tn_accumulate(const Matrix& a, const Matrix& b, Matrix& out);

Matrix transpose(const Matrix& a);

Matrix add(const Matrix& a, const Matrix& b);
Matrix mul(const Matrix& a, const Matrix& b);

/// Adds the 1 x n row `bias` to every row of the m x n matrix `a`.
Matrix add_row_broadcast(const Matrix& a, const Matrix& bias);

Matrix relu(const Matrix& a);
Matrix sigmoid(const Matrix& a);
Matrix tanh(const Matrix& a);

/// Scalar forms of the activations above; same values bit for bit.
double sigmoid(double x) noexcept;
double tanh(double x) noexcept;

void sigmoid_inplace(std::span<double> values) noexcept;
void tanh_inplace(std::span<double> values) noexcept;

/// Per-row softmax with the row max subtracted first.
Matrix softmax_rows(const Matrix& logits);

/// Per-row -log softmax(logits)[true class], via log-sum-exp.
std::vector<double> cross_entropy_rows(const Matrix& logits, const Matrix& onehot);

/// Mean of cross_entropy_rows.
double cross_entropy_mean(const Matrix& logits, const Matrix& onehot);

/// First index of the row maximum.
std::vector<std::size_t> argmax_rows(const Matrix& m);

/// 1 x cols matrix of column sums (rows summed in order).
Matrix column_sums(const Matrix& a);

/// Sum of squares of all values.
double sum_squares(const Matrix& a) noexcept;

bool all_finite(const Matrix& a) noexcept;

} // namespace har
