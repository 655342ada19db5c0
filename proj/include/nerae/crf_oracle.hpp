#ifndef NERAE_CRF_ORACLE_HPP
#define NERAE_CRF_ORACLE_HPP

// Exhaustive-enumeration reference for the CRF. Independent of the dynamic
// programs in crf.hpp apart from sequence_score, which is the definition.

#include <cmath>
#include <cstddef>
#include <vector>

#include "crf.hpp"
#include "error.hpp"

namespace nerae::crf::oracle {

inline constexpr std::size_t max_paths = 1'000'000;

namespace detail {

inline std::size_t path_count(std::size_t length, std::size_t labels)
{
    std::size_t n = 1;
    for (std::size_t t = 0; t < length; ++t) {
        if (labels != 0 && n > max_paths / labels)
            throw Error("crf oracle: instance too large for enumeration");
        n *= labels;
    }
    if (n > max_paths)
        throw Error("crf oracle: instance too large for enumeration");
    return n;
}

/// Calls fn(path) for every label sequence. Position 0 is the fastest
/// changing digit, so the last position is the most significant.
template <typename Fn>
void for_each_path(std::size_t length, std::size_t labels, Fn fn)
{
    const std::size_t n = path_count(length, labels);
    std::vector<std::size_t> path(length, 0);
    for (std::size_t k = 0; k < n; ++k) {
        fn(path);
        for (std::size_t t = 0; t < length; ++t) {
            if (++path[t] < labels)
                break;
            path[t] = 0;
        }
    }
}

} // namespace detail

template <typename T>
T brute_force_log_z(const Tensor<T>& em, const Tensor<T>& trans)
{
    std::vector<double> scores;
    detail::for_each_path(em.rows(), em.cols(), [&](const std::vector<std::size_t>& y) {
        scores.push_back(static_cast<double>(sequence_score(em, trans, std::span<const std::size_t>(y))));
    });
    double m = scores.front();
    for (double s : scores)
        m = std::max(m, s);
    double acc = 0.0;
    for (double s : scores)
        acc += std::exp(s - m);
    return static_cast<T>(m + std::log(acc));
}

/// Best path under strict comparison in enumeration order, which matches the
/// Viterbi tie-break (lowest label id, resolved from the last position).
template <typename T>
Decoded<T> brute_force_best(const Tensor<T>& em, const Tensor<T>& trans)
{
    Decoded<T> best;
    bool first = true;
    detail::for_each_path(em.rows(), em.cols(), [&](const std::vector<std::size_t>& y) {
        const T s = sequence_score(em, trans, std::span<const std::size_t>(y));
        if (first || s > best.score) {
            best.path = y;
            best.score = s;
            first = false;
        }
    });
    return best;
}

/// p(y_t = l) by summing normalized path probabilities.
template <typename T>
Tensor<T> brute_force_marginals(const Tensor<T>& em, const Tensor<T>& trans)
{
    const T log_z = brute_force_log_z(em, trans);
    Tensor<T> out(em.rows(), em.cols());
    detail::for_each_path(em.rows(), em.cols(), [&](const std::vector<std::size_t>& y) {
        const T p = std::exp(sequence_score(em, trans, std::span<const std::size_t>(y)) - log_z);
        for (std::size_t t = 0; t < y.size(); ++t)
            out(t, y[t]) += p;
    });
    return out;
}

} // namespace nerae::crf::oracle

#endif // NERAE_CRF_ORACLE_HPP
