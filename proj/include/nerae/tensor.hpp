#ifndef NERAE_TENSOR_HPP
#define NERAE_TENSOR_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "error.hpp"

namespace nerae {

/// Dense row-major matrix. Vectors are 1 x n.
template <typename T>
class Tensor
{
public:
    using value_type = T;

    Tensor() = default;
    Tensor(std::size_t rows, std::size_t cols, T fill = T(0))
        : rows_(rows), cols_(cols), data_(rows * cols, fill)
    {
    }
    Tensor(std::size_t rows, std::size_t cols, std::vector<T> data)
        : rows_(rows), cols_(cols), data_(std::move(data))
    {
        if (data_.size() != rows * cols)
            throw ShapeError("tensor: data size " + std::to_string(data_.size()) +
                             " does not match shape " + shape_string(rows, cols));
    }

    static Tensor row(std::initializer_list<T> values)
    {
        return Tensor(1, values.size(), std::vector<T>(values));
    }
    static Tensor scalar(T v) { return Tensor(1, 1, v); }

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }
    bool is_scalar() const noexcept { return rows_ == 1 && cols_ == 1; }

    T& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    const T& operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
    T& operator[](std::size_t i) { return data_[i]; }
    const T& operator[](std::size_t i) const { return data_[i]; }

    std::span<T> row_span(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
    std::span<const T> row_span(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

    std::vector<T>& data() noexcept { return data_; }
    const std::vector<T>& data() const noexcept { return data_; }

    bool same_shape(const Tensor& o) const noexcept { return rows_ == o.rows_ && cols_ == o.cols_; }
    std::string shape() const { return shape_string(rows_, cols_); }

    void fill(T v) { std::fill(data_.begin(), data_.end(), v); }

    Tensor& operator+=(const Tensor& o)
    {
        for (std::size_t i = 0; i < data_.size(); ++i)
            data_[i] += o.data_[i];
        return *this;
    }
    Tensor& operator*=(T s)
    {
        for (auto& v : data_)
            v *= s;
        return *this;
    }

    bool all_finite() const
    {
        return std::all_of(data_.begin(), data_.end(), [](T v) { return std::isfinite(v); });
    }

    template <typename U>
    Tensor<U> cast() const
    {
        Tensor<U> out(rows_, cols_);
        for (std::size_t i = 0; i < data_.size(); ++i)
            out[i] = static_cast<U>(data_[i]);
        return out;
    }

    static std::string shape_string(std::size_t r, std::size_t c)
    {
        return "[" + std::to_string(r) + "x" + std::to_string(c) + "]";
    }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<T> data_;
};

namespace kernels {

// out += a * b
template <typename T>
void gemm_nn(const Tensor<T>& a, const Tensor<T>& b, Tensor<T>& out)
{
    const std::size_t n = a.rows(), k = a.cols(), m = b.cols();
    for (std::size_t i = 0; i < n; ++i) {
        T* o = out.data().data() + i * m;
        for (std::size_t p = 0; p < k; ++p) {
            const T av = a(i, p);
            if (av == T(0))
                continue;
            const T* br = b.data().data() + p * m;
            for (std::size_t j = 0; j < m; ++j)
                o[j] += av * br[j];
        }
    }
}

// out += a * b^T
template <typename T>
void gemm_nt(const Tensor<T>& a, const Tensor<T>& b, Tensor<T>& out)
{
    const std::size_t n = a.rows(), k = a.cols(), m = b.rows();
    for (std::size_t i = 0; i < n; ++i) {
        const T* ar = a.data().data() + i * k;
        for (std::size_t j = 0; j < m; ++j) {
            const T* br = b.data().data() + j * k;
            T acc = T(0);
            for (std::size_t p = 0; p < k; ++p)
                acc += ar[p] * br[p];
            out(i, j) += acc;
        }
    }
}

// out += a^T * b
template <typename T>
void gemm_tn(const Tensor<T>& a, const Tensor<T>& b, Tensor<T>& out)
{
    const std::size_t n = a.rows(), k = a.cols(), m = b.cols();
    for (std::size_t r = 0; r < n; ++r) {
        const T* ar = a.data().data() + r * k;
        const T* br = b.data().data() + r * m;
        for (std::size_t p = 0; p < k; ++p) {
            const T av = ar[p];
            if (av == T(0))
                continue;
            T* o = out.data().data() + p * m;
            for (std::size_t j = 0; j < m; ++j)
                o[j] += av * br[j];
        }
    }
}

/// Numerically stable log(sum(exp(x))).
template <typename T>
T log_sum_exp(std::span<const T> xs)
{
    if (xs.empty())
        return -std::numeric_limits<T>::infinity();
    const T m = *std::max_element(xs.begin(), xs.end());
    if (!std::isfinite(m))
        return m;
    T s = T(0);
    for (T x : xs)
        s += std::exp(x - m);
    return m + std::log(s);
}

} // namespace kernels
} // namespace nerae

#endif // NERAE_TENSOR_HPP
