#include "har/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>

#include "activation_math.hpp"
#include "har/error.hpp"

namespace har {

namespace {

void require_same_shape(const Matrix& a, const Matrix& b, const char* op) {
    if (!a.same_shape(b)) {
        throw ShapeError(std::string(op) + ": shape mismatch " + a.shape_string() + " vs " + b.shape_string());
    }
}

template <class Fn>
Matrix map(const Matrix& a, Fn fn) {
    Matrix out(a.rows(), a.cols());
    const double* src = a.data();
    double* dst = out.data();
    for (std::size_t i = 0; i < a.size(); ++i) dst[i] = fn(src[i]);
    return out;
}

} // namespace

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), values_(rows * cols, fill) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), values_(std::move(values)) {
    if (values_.size() != rows * cols) {
        throw ShapeError("matrix " + shape_string() + " given " + std::to_string(values_.size()) + " values");
    }
}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows) {
    rows_ = rows.size();
    cols_ = rows_ == 0 ? 0 : rows.begin()->size();
    values_.reserve(rows_ * cols_);
    for (const auto& r : rows) {
        if (r.size() != cols_) throw ShapeError("ragged matrix literal");
        values_.insert(values_.end(), r.begin(), r.end());
    }
}

void Matrix::fill(double value) { std::fill(values_.begin(), values_.end(), value); }

std::string Matrix::shape_string() const {
    return std::to_string(rows_) + "x" + std::to_string(cols_);
}

Matrix Matrix::identity(std::size_t n) {
    Matrix out(n, n);
    for (std::size_t i = 0; i < n; ++i) out(i, i) = 1.0;
    return out;
}

namespace {

// out[m x n] += A * b where A(i, p) = a_at(i, p). Every output element
// receives its products in ascending p, added onto its starting value, which
// is the summation order of the textbook triple loop; the tiled and plain
// paths therefore agree bit for bit.
template <class AAt>
void gemm_rows(std::size_t row_begin, std::size_t m, std::size_t k, std::size_t n, AAt a_at, const double* b,
               double* out) {
    for (std::size_t i = row_begin; i < m; ++i) {
        double* __restrict dst = out + i * n;
        for (std::size_t p = 0; p < k; ++p) {
            const double av = a_at(i, p);
            const double* __restrict brow = b + p * n;
            for (std::size_t j = 0; j < n; ++j) dst[j] += av * brow[j];
        }
    }
}

#if defined(__AVX__)
typedef double v4d __attribute__((vector_size(32)));

inline v4d load4(const double* p) {
    v4d v;
    std::memcpy(&v, p, sizeof v);
    return v;
}

inline void store4(double* p, v4d v) { std::memcpy(p, &v, sizeof v); }

constexpr std::size_t kTileRows = 4;
constexpr std::size_t kTileVecs = 2;  // 8 columns

template <class AAt>
void gemm_kernel(std::size_t m, std::size_t k, std::size_t n, AAt a_at, const double* b, double* out) {
    constexpr std::size_t tile_cols = 4 * kTileVecs;
    const std::size_t full_rows = m - m % kTileRows;
    const std::size_t full_cols = n - n % tile_cols;
    for (std::size_t i = 0; i < full_rows; i += kTileRows) {
        for (std::size_t j = 0; j < full_cols; j += tile_cols) {
            v4d acc[kTileRows][kTileVecs];
            for (std::size_t r = 0; r < kTileRows; ++r)
                for (std::size_t c = 0; c < kTileVecs; ++c) acc[r][c] = load4(out + (i + r) * n + j + 4 * c);
            for (std::size_t p = 0; p < k; ++p) {
                v4d bv[kTileVecs];
                for (std::size_t c = 0; c < kTileVecs; ++c) bv[c] = load4(b + p * n + j + 4 * c);
                for (std::size_t r = 0; r < kTileRows; ++r) {
                    const double av = a_at(i + r, p);
                    const v4d avv = {av, av, av, av};
                    for (std::size_t c = 0; c < kTileVecs; ++c) acc[r][c] += avv * bv[c];
                }
            }
            for (std::size_t r = 0; r < kTileRows; ++r)
                for (std::size_t c = 0; c < kTileVecs; ++c) store4(out + (i + r) * n + j + 4 * c, acc[r][c]);
        }
        for (std::size_t r = i; r < i + kTileRows; ++r) {
            for (std::size_t j = full_cols; j < n; ++j) {
                double acc = out[r * n + j];
                for (std::size_t p = 0; p < k; ++p) acc += a_at(r, p) * b[p * n + j];
                out[r * n + j] = acc;
            }
        }
    }
    gemm_rows(full_rows, m, k, n, a_at, b, out);
}
#else
template <class AAt>
void gemm_kernel(std::size_t m, std::size_t k, std::size_t n, AAt a_at, const double* b, double* out) {
    gemm_rows(0, m, k, n, a_at, b, out);
}
#endif

} // namespace

Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows()) {
        throw ShapeError("matmul: inner dimensions differ, " + a.shape_string() + " * " + b.shape_string());
    }
    const std::size_t k = a.cols();
    Matrix out(a.rows(), b.cols());
    const double* ad = a.data();
    gemm_kernel(a.rows(), k, b.cols(), [ad, k](std::size_t i, std::size_t p) { return ad[i * k + p]; }, b.data(),
                out.data());
    return out;
}

void matmul_tn_accumulate(const Matrix& a, const Matrix& b, Matrix& out) {
    if (a.rows() != b.rows() || out.rows() != a.cols() || out.cols() != b.cols()) {
        throw ShapeError("matmul_tn: " + a.shape_string() + "^T * " + b.shape_string() + " into " +
                         out.shape_string());
    }
    // out row p, summed over i: a(i, p) * b(i, :). Row index of out is a's column.
    const std::size_t k = a.cols();
    const double* ad = a.data();
    gemm_kernel(a.cols(), a.rows(), b.cols(), [ad, k](std::size_t p, std::size_t i) { return ad[i * k + p]; },
                b.data(), out.data());
}

Matrix transpose(const Matrix& a) {
    Matrix out(a.cols(), a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) out(j, i) = a(i, j);
    return out;
}

Matrix add(const Matrix& a, const Matrix& b) {
    require_same_shape(a, b, "add");
    Matrix out(a.rows(), a.cols());
    for (std::size_t i = 0; i < a.size(); ++i) out.data()[i] = a.data()[i] + b.data()[i];
    return out;
}

Matrix mul(const Matrix& a, const Matrix& b) {
    require_same_shape(a, b, "mul");
    Matrix out(a.rows(), a.cols());
    for (std::size_t i = 0; i < a.size(); ++i) out.data()[i] = a.data()[i] * b.data()[i];
    return out;
}

Matrix add_row_broadcast(const Matrix& a, const Matrix& bias) {
    if (bias.rows() != 1 || bias.cols() != a.cols()) {
        throw ShapeError("bias add: " + bias.shape_string() + " onto " + a.shape_string());
    }
    Matrix out = a;
    for (std::size_t i = 0; i < a.rows(); ++i) {
        double* dst = out.data() + i * a.cols();
        for (std::size_t j = 0; j < a.cols(); ++j) dst[j] += bias.data()[j];
    }
    return out;
}

double sigmoid(double x) noexcept { return detail::sigmoid_fast(x); }

double tanh(double x) noexcept { return detail::tanh_fast(x); }

void sigmoid_inplace(std::span<double> values) noexcept {
    for (double& v : values) v = detail::sigmoid_fast(v);
}

void tanh_inplace(std::span<double> values) noexcept {
    for (double& v : values) v = detail::tanh_fast(v);
}

Matrix relu(const Matrix& a) {
    return map(a, [](double x) { return x > 0.0 ? x : 0.0; });
}

Matrix sigmoid(const Matrix& a) {
    Matrix out = a;
    sigmoid_inplace(out.values());
    return out;
}

Matrix tanh(const Matrix& a) {
    Matrix out = a;
    tanh_inplace(out.values());
    return out;
}

Matrix softmax_rows(const Matrix& logits) {
    Matrix out(logits.rows(), logits.cols());
    for (std::size_t i = 0; i < logits.rows(); ++i) {
        const auto src = logits.row(i);
        auto dst = out.row(i);
        if (src.empty()) continue;
        const double peak = *std::max_element(src.begin(), src.end());
        double total = 0.0;
        for (std::size_t j = 0; j < src.size(); ++j) {
            dst[j] = std::exp(src[j] - peak);
            total += dst[j];
        }
        for (double& v : dst) v /= total;
    }
    return out;
}

std::vector<double> cross_entropy_rows(const Matrix& logits, const Matrix& onehot) {
    require_same_shape(logits, onehot, "cross_entropy");
    std::vector<double> losses(logits.rows(), 0.0);
    for (std::size_t i = 0; i < logits.rows(); ++i) {
        const auto z = logits.row(i);
        const auto y = onehot.row(i);
        if (z.empty()) continue;
        const double peak = *std::max_element(z.begin(), z.end());
        double total = 0.0;
        for (double v : z) total += std::exp(v - peak);
        const double log_sum_exp = peak + std::log(total);
        // Sum over y so soft targets also work; for one-hot rows this is the
        // true class term only.
        double loss = 0.0;
        for (std::size_t j = 0; j < z.size(); ++j) {
            if (y[j] != 0.0) loss += y[j] * (log_sum_exp - z[j]);
        }
        losses[i] = loss;
    }
    return losses;
}

double cross_entropy_mean(const Matrix& logits, const Matrix& onehot) {
    const auto losses = cross_entropy_rows(logits, onehot);
    if (losses.empty()) return 0.0;
    double total = 0.0;
    for (double l : losses) total += l;
    return total / static_cast<double>(losses.size());
}

std::vector<std::size_t> argmax_rows(const Matrix& m) {
    std::vector<std::size_t> out(m.rows(), 0);
    for (std::size_t i = 0; i < m.rows(); ++i) {
        const auto r = m.row(i);
        std::size_t best = 0;
        for (std::size_t j = 1; j < r.size(); ++j) {
            if (r[j] > r[best]) best = j;
        }
        out[i] = best;
    }
    return out;
}

Matrix column_sums(const Matrix& a) {
    Matrix out(1, a.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        const double* src = a.data() + i * a.cols();
        for (std::size_t j = 0; j < a.cols(); ++j) out.data()[j] += src[j];
    }
    return out;
}

double sum_squares(const Matrix& a) noexcept {
    double total = 0.0;
    for (double v : a.values()) total += v * v;
    return total;
}

bool all_finite(const Matrix& a) noexcept {
    return std::all_of(a.values().begin(), a.values().end(), [](double v) { return std::isfinite(v); });
}

} // namespace har
