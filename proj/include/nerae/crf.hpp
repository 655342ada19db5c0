#ifndef NERAE_CRF_HPP
#define NERAE_CRF_HPP

// Linear-chain CRF over T x L emission scores and an (L+2) x (L+2)
// transition table. Row/column L is the virtual START state and L+1 the
// virtual STOP state; transitions into START and out of STOP are masked.

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "error.hpp"
#include "numcore.hpp"
#include "tensor.hpp"

namespace nerae::crf {

/// Score used for masked (impossible) transitions. Kept finite so that
/// single-precision arithmetic never produces Inf - Inf.
inline constexpr double masked_score = -1e4;

inline std::size_t start_state(std::size_t labels) { return labels; }
inline std::size_t stop_state(std::size_t labels) { return labels + 1; }

template <typename T>
void apply_mask(Tensor<T>& trans)
{
    const std::size_t n = trans.rows();
    const std::size_t start = n - 2, stop = n - 1;
    for (std::size_t i = 0; i < n; ++i) {
        trans(i, start) = static_cast<T>(masked_score);
        trans(stop, i) = static_cast<T>(masked_score);
    }
}

/// Zero transition table with START/STOP masking applied.
template <typename T>
Tensor<T> make_transitions(std::size_t labels)
{
    Tensor<T> trans(labels + 2, labels + 2);
    apply_mask(trans);
    return trans;
}

namespace detail {

template <typename T>
void check_shapes(const Tensor<T>& em, const Tensor<T>& trans)
{
    if (em.rows() == 0)
        throw ShapeError("crf: empty sequence");
    if (trans.rows() != em.cols() + 2 || trans.cols() != em.cols() + 2)
        throw ShapeError("crf: transitions " + trans.shape() + " do not match " +
                         std::to_string(em.cols()) + " labels");
}

} // namespace detail

template <typename T>
T sequence_score(const Tensor<T>& em, const Tensor<T>& trans, std::span<const std::size_t> y)
{
    detail::check_shapes(em, trans);
    const std::size_t L = em.cols();
    if (y.size() != em.rows())
        throw ShapeError("crf: label sequence length " + std::to_string(y.size()) +
                         " differs from emission length " + std::to_string(em.rows()));
    for (std::size_t i = 0; i < y.size(); ++i)
        if (y[i] >= L)
            throw Error("crf: invalid label id " + std::to_string(y[i]) + " at position " +
                        std::to_string(i));
    T s = trans(start_state(L), y[0]);
    for (std::size_t i = 0; i < y.size(); ++i) {
        s += em(i, y[i]);
        if (i + 1 < y.size())
            s += trans(y[i], y[i + 1]);
    }
    return s + trans(y.back(), stop_state(L));
}

/// Forward log-potentials: alpha(t, j) = log-sum over prefixes ending in j at
/// t, including the emission at t.
template <typename T>
Tensor<T> forward_scores(const Tensor<T>& em, const Tensor<T>& trans)
{
    detail::check_shapes(em, trans);
    const std::size_t n = em.rows(), L = em.cols();
    Tensor<T> alpha(n, L);
    for (std::size_t j = 0; j < L; ++j)
        alpha(0, j) = trans(start_state(L), j) + em(0, j);
    std::vector<T> buf(L);
    for (std::size_t t = 1; t < n; ++t)
        for (std::size_t j = 0; j < L; ++j) {
            for (std::size_t i = 0; i < L; ++i)
                buf[i] = alpha(t - 1, i) + trans(i, j);
            alpha(t, j) = kernels::log_sum_exp<T>(buf) + em(t, j);
        }
    return alpha;
}

/// Backward log-potentials: beta(t, i) = log-sum over suffixes after t given
/// label i at t (excluding the emission at t, including STOP).
template <typename T>
Tensor<T> backward_scores(const Tensor<T>& em, const Tensor<T>& trans)
{
    detail::check_shapes(em, trans);
    const std::size_t n = em.rows(), L = em.cols();
    Tensor<T> beta(n, L);
    for (std::size_t i = 0; i < L; ++i)
        beta(n - 1, i) = trans(i, stop_state(L));
    std::vector<T> buf(L);
    for (std::size_t t = n - 1; t-- > 0;)
        for (std::size_t i = 0; i < L; ++i) {
            for (std::size_t j = 0; j < L; ++j)
                buf[j] = trans(i, j) + em(t + 1, j) + beta(t + 1, j);
            beta(t, i) = kernels::log_sum_exp<T>(buf);
        }
    return beta;
}

template <typename T>
T log_partition(const Tensor<T>& em, const Tensor<T>& trans)
{
    const Tensor<T> alpha = forward_scores(em, trans);
    const std::size_t L = em.cols();
    std::vector<T> last(L);
    for (std::size_t j = 0; j < L; ++j)
        last[j] = alpha(em.rows() - 1, j) + trans(j, stop_state(L));
    return kernels::log_sum_exp<T>(last);
}

/// log p(y | x); always <= 0 up to rounding.
template <typename T>
T log_likelihood(const Tensor<T>& em, const Tensor<T>& trans, std::span<const std::size_t> y)
{
    return sequence_score(em, trans, y) - log_partition(em, trans);
}

/// Expected sufficient statistics of the CRF distribution.
template <typename T>
struct Marginals
{
    Tensor<T> unary;       ///< T x L: p(y_t = l)
    Tensor<T> transitions; ///< (L+2) x (L+2): expected transition counts
    T log_z{};
};

template <typename T>
Marginals<T> marginals(const Tensor<T>& em, const Tensor<T>& trans)
{
    const std::size_t n = em.rows(), L = em.cols();
    const Tensor<T> alpha = forward_scores(em, trans);
    const Tensor<T> beta = backward_scores(em, trans);
    std::vector<T> last(L);
    for (std::size_t j = 0; j < L; ++j)
        last[j] = alpha(n - 1, j) + beta(n - 1, j);
    const T log_z = kernels::log_sum_exp<T>(last);

    Marginals<T> m{Tensor<T>(n, L), Tensor<T>(L + 2, L + 2), log_z};
    for (std::size_t t = 0; t < n; ++t)
        for (std::size_t j = 0; j < L; ++j)
            m.unary(t, j) = std::exp(alpha(t, j) + beta(t, j) - log_z);
    for (std::size_t j = 0; j < L; ++j) {
        m.transitions(start_state(L), j) = m.unary(0, j);
        m.transitions(j, stop_state(L)) = m.unary(n - 1, j);
    }
    for (std::size_t t = 0; t + 1 < n; ++t)
        for (std::size_t i = 0; i < L; ++i)
            for (std::size_t j = 0; j < L; ++j)
                m.transitions(i, j) +=
                    std::exp(alpha(t, i) + trans(i, j) + em(t + 1, j) + beta(t + 1, j) - log_z);
    return m;
}

template <typename T>
struct Decoded
{
    std::vector<std::size_t> path;
    T score{};
};

/// Highest-scoring label sequence. Ties resolve toward the lowest label id
/// at every step, so among equally good paths the one that is smallest when
/// compared from the last position backwards is returned.
template <typename T>
Decoded<T> viterbi_decode(const Tensor<T>& em, const Tensor<T>& trans)
{
    detail::check_shapes(em, trans);
    const std::size_t n = em.rows(), L = em.cols();
    std::vector<T> score(L), next(L);
    std::vector<std::size_t> back(n * L, 0);
    for (std::size_t j = 0; j < L; ++j)
        score[j] = trans(start_state(L), j) + em(0, j);
    for (std::size_t t = 1; t < n; ++t) {
        for (std::size_t j = 0; j < L; ++j) {
            std::size_t best = 0;
            T best_score = score[0] + trans(0, j);
            for (std::size_t i = 1; i < L; ++i) {
                const T s = score[i] + trans(i, j);
                if (s > best_score) {
                    best_score = s;
                    best = i;
                }
            }
            next[j] = best_score + em(t, j);
            back[t * L + j] = best;
        }
        std::swap(score, next);
    }
    std::size_t last = 0;
    T best_score = score[0] + trans(0, stop_state(L));
    for (std::size_t j = 1; j < L; ++j) {
        const T s = score[j] + trans(j, stop_state(L));
        if (s > best_score) {
            best_score = s;
            last = j;
        }
    }
    Decoded<T> out;
    out.path.resize(n);
    out.path[n - 1] = last;
    for (std::size_t t = n - 1; t > 0; --t)
        out.path[t - 1] = back[t * L + out.path[t]];
    out.score = best_score;
    return out;
}

// ------------------------------------------------------- differentiable ops

/// log Z as a graph node; its gradient is the marginal distribution.
template <typename T>
Var log_partition(Graph<T>& g, Var em, Var trans)
{
    Marginals<T> m = marginals(g.value(em), g.value(trans));
    const T log_z = m.log_z;
    return g.record(Tensor<T>::scalar(log_z), {em, trans},
                    [em, trans, m = std::move(m)](Graph<T>& g, const Tensor<T>& go) {
                        if (g.requires_grad(em)) {
                            auto& ge = g.grad_acc(em);
                            for (std::size_t i = 0; i < ge.size(); ++i)
                                ge[i] += go[0] * m.unary[i];
                        }
                        if (g.requires_grad(trans)) {
                            auto& gt = g.grad_acc(trans);
                            for (std::size_t i = 0; i < gt.size(); ++i)
                                gt[i] += go[0] * m.transitions[i];
                        }
                    });
}

template <typename T>
Var sequence_score(Graph<T>& g, Var em, Var trans, std::vector<std::size_t> y)
{
    const T s = sequence_score(g.value(em), g.value(trans), std::span<const std::size_t>(y));
    return g.record(Tensor<T>::scalar(s), {em, trans},
                    [em, trans, y = std::move(y)](Graph<T>& g, const Tensor<T>& go) {
                        const std::size_t L = g.value(em).cols();
                        if (g.requires_grad(em)) {
                            auto& ge = g.grad_acc(em);
                            for (std::size_t t = 0; t < y.size(); ++t)
                                ge(t, y[t]) += go[0];
                        }
                        if (g.requires_grad(trans)) {
                            auto& gt = g.grad_acc(trans);
                            gt(start_state(L), y.front()) += go[0];
                            for (std::size_t t = 0; t + 1 < y.size(); ++t)
                                gt(y[t], y[t + 1]) += go[0];
                            gt(y.back(), stop_state(L)) += go[0];
                        }
                    });
}

/// Negative log-likelihood -log p(y | x) = log Z - score(y).
template <typename T>
Var negative_log_likelihood(Graph<T>& g, Var em, Var trans, std::vector<std::size_t> y)
{
    const Var log_z = log_partition(g, em, trans);
    const Var gold = sequence_score(g, em, trans, std::move(y));
    return g.weighted_sum({log_z, gold}, {T(1), T(-1)});
}

} // namespace nerae::crf

#endif // NERAE_CRF_HPP
