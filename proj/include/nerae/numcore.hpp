#ifndef NERAE_NUMCORE_HPP
#define NERAE_NUMCORE_HPP

// Tape-based reverse-mode differentiation over dense matrices.
//
// A Graph is rebuilt for every sentence. Parameters live in a ParamStore and
// enter a graph as leaves that alias the stored value; their gradients are
// accumulated straight into the store, so several graphs (one per sentence of
// a batch) can contribute to one update.

#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "error.hpp"
#include "tensor.hpp"

namespace nerae {

template <typename T>
struct Param
{
    Tensor<T> value;
    Tensor<T> grad;
    bool trainable = true;
    /// Rows whose gradient is discarded before every update (e.g. PAD rows).
    std::vector<std::size_t> frozen_rows;
};

/// Named trainable parameters, iterated in lexicographic name order.
template <typename T>
class ParamStore
{
public:
    Param<T>& add(const std::string& name, Tensor<T> value, bool trainable = true)
    {
        if (params_.count(name))
            throw Error("param store: duplicate parameter '" + name + "'");
        Param<T> p;
        p.grad = Tensor<T>(value.rows(), value.cols());
        p.value = std::move(value);
        p.trainable = trainable;
        return params_.emplace(name, std::move(p)).first->second;
    }

    bool contains(const std::string& name) const { return params_.count(name) != 0; }

    Param<T>& get(const std::string& name)
    {
        auto it = params_.find(name);
        if (it == params_.end())
            throw Error("param store: unknown parameter '" + name + "'");
        return it->second;
    }
    const Param<T>& get(const std::string& name) const
    {
        auto it = params_.find(name);
        if (it == params_.end())
            throw Error("param store: unknown parameter '" + name + "'");
        return it->second;
    }

    std::vector<std::string> names() const
    {
        std::vector<std::string> out;
        out.reserve(params_.size());
        for (const auto& [k, v] : params_)
            out.push_back(k);
        return out;
    }

    std::size_t size() const noexcept { return params_.size(); }

    void zero_grad()
    {
        for (auto& [k, p] : params_)
            p.grad.fill(T(0));
    }

    auto begin() { return params_.begin(); }
    auto end() { return params_.end(); }
    auto begin() const { return params_.begin(); }
    auto end() const { return params_.end(); }

private:
    std::map<std::string, Param<T>> params_;
};

/// Handle to a node of a Graph.
struct Var
{
    std::uint32_t id = 0;
};

template <typename T>
class Graph
{
public:
    using Backward = std::function<void(Graph&, const Tensor<T>& out_grad)>;

    Graph() = default;
    Graph(const Graph&) = delete;
    Graph& operator=(const Graph&) = delete;

    std::size_t node_count() const noexcept { return nodes_.size(); }

    const Tensor<T>& value(Var v) const
    {
        const Node& n = nodes_.at(v.id);
        return n.ref ? *n.ref : n.own;
    }
    bool requires_grad(Var v) const { return nodes_.at(v.id).requires_grad; }

    /// Gradient of a node after backward(); empty tensor if none reached it.
    const Tensor<T>& grad(Var v) const
    {
        const Node& n = nodes_.at(v.id);
        return n.param ? n.param->grad : n.grad;
    }

    /// Accumulation target for a node's gradient, allocated on first use.
    Tensor<T>& grad_acc(Var v)
    {
        Node& n = nodes_[v.id];
        if (n.param)
            return n.param->grad;
        if (n.grad.empty() && !value(v).empty())
            n.grad = Tensor<T>(value(v).rows(), value(v).cols());
        return n.grad;
    }

    // ---------------------------------------------------------------- leaves

    Var constant(Tensor<T> value) { return push(std::move(value), false, nullptr); }

    Var param(Param<T>& p)
    {
        Node n;
        n.ref = &p.value;
        n.param = &p;
        n.requires_grad = p.trainable;
        check_open();
        nodes_.push_back(std::move(n));
        return Var{static_cast<std::uint32_t>(nodes_.size() - 1)};
    }

    /// Record a node with a caller-supplied backward rule. The rule runs only
    /// if at least one input requires a gradient.
    Var record(Tensor<T> value, std::initializer_list<Var> inputs, Backward backward)
    {
        bool rg = false;
        for (Var in : inputs)
            rg = rg || nodes_.at(in.id).requires_grad;
        return push(std::move(value), rg, rg ? std::move(backward) : nullptr);
    }
    Var record(Tensor<T> value, const std::vector<Var>& inputs, Backward backward)
    {
        bool rg = false;
        for (Var in : inputs)
            rg = rg || nodes_.at(in.id).requires_grad;
        return push(std::move(value), rg, rg ? std::move(backward) : nullptr);
    }

    // ------------------------------------------------------------ primitives

    Var matmul(Var a, Var b)
    {
        const auto& A = value(a);
        const auto& B = value(b);
        if (A.cols() != B.rows())
            throw shape_error("matmul", A, B);
        Tensor<T> out(A.rows(), B.cols());
        kernels::gemm_nn(A, B, out);
        return record(std::move(out), {a, b}, [a, b](Graph& g, const Tensor<T>& go) {
            if (g.requires_grad(a))
                kernels::gemm_nt(go, g.value(b), g.grad_acc(a));
            if (g.requires_grad(b))
                kernels::gemm_tn(g.value(a), go, g.grad_acc(b));
        });
    }

    Var add(Var a, Var b)
    {
        const auto& A = value(a);
        const auto& B = value(b);
        if (!A.same_shape(B))
            throw shape_error("add", A, B);
        Tensor<T> out = A;
        out += B;
        return record(std::move(out), {a, b}, [a, b](Graph& g, const Tensor<T>& go) {
            if (g.requires_grad(a))
                g.grad_acc(a) += go;
            if (g.requires_grad(b))
                g.grad_acc(b) += go;
        });
    }

    /// a (n x m) plus a 1 x m row added to every row.
    Var add_bias(Var a, Var bias)
    {
        const auto& A = value(a);
        const auto& B = value(bias);
        if (B.rows() != 1 || B.cols() != A.cols())
            throw shape_error("add_bias", A, B);
        Tensor<T> out = A;
        for (std::size_t r = 0; r < A.rows(); ++r)
            for (std::size_t c = 0; c < A.cols(); ++c)
                out(r, c) += B[c];
        return record(std::move(out), {a, bias}, [a, bias](Graph& g, const Tensor<T>& go) {
            if (g.requires_grad(a))
                g.grad_acc(a) += go;
            if (g.requires_grad(bias)) {
                auto& gb = g.grad_acc(bias);
                for (std::size_t r = 0; r < go.rows(); ++r)
                    for (std::size_t c = 0; c < go.cols(); ++c)
                        gb[c] += go(r, c);
            }
        });
    }

    /// Elementwise product.
    Var mul(Var a, Var b)
    {
        const auto& A = value(a);
        const auto& B = value(b);
        if (!A.same_shape(B))
            throw shape_error("mul", A, B);
        Tensor<T> out = A;
        for (std::size_t i = 0; i < out.size(); ++i)
            out[i] *= B[i];
        return record(std::move(out), {a, b}, [a, b](Graph& g, const Tensor<T>& go) {
            if (g.requires_grad(a)) {
                auto& ga = g.grad_acc(a);
                const auto& B = g.value(b);
                for (std::size_t i = 0; i < go.size(); ++i)
                    ga[i] += go[i] * B[i];
            }
            if (g.requires_grad(b)) {
                auto& gb = g.grad_acc(b);
                const auto& A = g.value(a);
                for (std::size_t i = 0; i < go.size(); ++i)
                    gb[i] += go[i] * A[i];
            }
        });
    }

    Var scale(Var a, T s)
    {
        Tensor<T> out = value(a);
        out *= s;
        return record(std::move(out), {a}, [a, s](Graph& g, const Tensor<T>& go) {
            auto& ga = g.grad_acc(a);
            for (std::size_t i = 0; i < go.size(); ++i)
                ga[i] += s * go[i];
        });
    }

    /// Concatenate along columns; all inputs share a row count.
    Var concat_cols(const std::vector<Var>& parts)
    {
        if (parts.empty())
            throw ShapeError("concat_cols: no inputs");
        const std::size_t rows = value(parts[0]).rows();
        std::size_t cols = 0;
        for (Var p : parts) {
            if (value(p).rows() != rows)
                throw shape_error("concat_cols", value(parts[0]), value(p));
            cols += value(p).cols();
        }
        Tensor<T> out(rows, cols);
        std::vector<std::size_t> offsets;
        std::size_t off = 0;
        for (Var p : parts) {
            const auto& P = value(p);
            for (std::size_t r = 0; r < rows; ++r)
                std::copy(P.row_span(r).begin(), P.row_span(r).end(), out.row_span(r).begin() + off);
            offsets.push_back(off);
            off += P.cols();
        }
        return record(std::move(out), parts, [parts, offsets](Graph& g, const Tensor<T>& go) {
            for (std::size_t k = 0; k < parts.size(); ++k) {
                if (!g.requires_grad(parts[k]))
                    continue;
                auto& gp = g.grad_acc(parts[k]);
                for (std::size_t r = 0; r < gp.rows(); ++r)
                    for (std::size_t c = 0; c < gp.cols(); ++c)
                        gp(r, c) += go(r, offsets[k] + c);
            }
        });
    }

    /// Stack inputs vertically; all inputs share a column count.
    Var concat_rows(const std::vector<Var>& parts)
    {
        if (parts.empty())
            throw ShapeError("concat_rows: no inputs");
        const std::size_t cols = value(parts[0]).cols();
        std::size_t rows = 0;
        for (Var p : parts) {
            if (value(p).cols() != cols)
                throw shape_error("concat_rows", value(parts[0]), value(p));
            rows += value(p).rows();
        }
        Tensor<T> out(rows, cols);
        std::vector<std::size_t> offsets;
        std::size_t off = 0;
        for (Var p : parts) {
            const auto& P = value(p);
            std::copy(P.data().begin(), P.data().end(), out.data().begin() + off * cols);
            offsets.push_back(off);
            off += P.rows();
        }
        return record(std::move(out), parts, [parts, offsets](Graph& g, const Tensor<T>& go) {
            for (std::size_t k = 0; k < parts.size(); ++k) {
                if (!g.requires_grad(parts[k]))
                    continue;
                auto& gp = g.grad_acc(parts[k]);
                const std::size_t base = offsets[k] * go.cols();
                for (std::size_t i = 0; i < gp.size(); ++i)
                    gp[i] += go[base + i];
            }
        });
    }

    Var slice_cols(Var a, std::size_t start, std::size_t len)
    {
        const auto& A = value(a);
        if (start + len > A.cols())
            throw ShapeError("slice_cols: range [" + std::to_string(start) + ", " +
                             std::to_string(start + len) + ") out of bounds for " + A.shape());
        Tensor<T> out(A.rows(), len);
        for (std::size_t r = 0; r < A.rows(); ++r)
            for (std::size_t c = 0; c < len; ++c)
                out(r, c) = A(r, start + c);
        return record(std::move(out), {a}, [a, start](Graph& g, const Tensor<T>& go) {
            auto& ga = g.grad_acc(a);
            for (std::size_t r = 0; r < go.rows(); ++r)
                for (std::size_t c = 0; c < go.cols(); ++c)
                    ga(r, start + c) += go(r, c);
        });
    }

    Var row(Var a, std::size_t r)
    {
        const auto& A = value(a);
        if (r >= A.rows())
            throw ShapeError("row: index " + std::to_string(r) + " out of bounds for " + A.shape());
        Tensor<T> out(1, A.cols());
        std::copy(A.row_span(r).begin(), A.row_span(r).end(), out.data().begin());
        return record(std::move(out), {a}, [a, r](Graph& g, const Tensor<T>& go) {
            auto row = g.grad_acc(a).row_span(r);
            for (std::size_t c = 0; c < go.cols(); ++c)
                row[c] += go[c];
        });
    }

    /// Row-major reinterpretation with the same element count.
    Var reshape(Var a, std::size_t rows, std::size_t cols)
    {
        const auto& A = value(a);
        if (rows * cols != A.size())
            throw ShapeError("reshape: cannot view " + A.shape() + " as " +
                             Tensor<T>::shape_string(rows, cols));
        Tensor<T> out(rows, cols, A.data());
        return record(std::move(out), {a}, [a](Graph& g, const Tensor<T>& go) {
            auto& ga = g.grad_acc(a);
            for (std::size_t i = 0; i < go.size(); ++i)
                ga[i] += go[i];
        });
    }

    /// Embedding lookup: out row k = table row ids[k].
    Var gather_rows(Var table, std::vector<std::size_t> ids)
    {
        const auto& W = value(table);
        Tensor<T> out(ids.size(), W.cols());
        for (std::size_t k = 0; k < ids.size(); ++k) {
            if (ids[k] >= W.rows())
                throw ShapeError("gather_rows: id " + std::to_string(ids[k]) +
                                 " out of bounds for " + W.shape());
            std::copy(W.row_span(ids[k]).begin(), W.row_span(ids[k]).end(), out.row_span(k).begin());
        }
        return record(std::move(out), {table}, [table, ids = std::move(ids)](Graph& g, const Tensor<T>& go) {
            auto& gw = g.grad_acc(table);
            for (std::size_t k = 0; k < ids.size(); ++k) {
                auto dst = gw.row_span(ids[k]);
                for (std::size_t c = 0; c < go.cols(); ++c)
                    dst[c] += go(k, c);
            }
        });
    }

    Var sigmoid(Var a)
    {
        Tensor<T> out = value(a);
        for (auto& v : out.data())
            v = sigmoid_scalar(v);
        return unary(a, std::move(out), [](T, T y) { return y * (T(1) - y); });
    }

    Var tanh(Var a)
    {
        Tensor<T> out = value(a);
        for (auto& v : out.data())
            v = std::tanh(v);
        return unary(a, std::move(out), [](T, T y) { return T(1) - y * y; });
    }

    Var relu(Var a)
    {
        Tensor<T> out = value(a);
        for (auto& v : out.data())
            v = v > T(0) ? v : T(0);
        return unary(a, std::move(out), [](T x, T) { return x > T(0) ? T(1) : T(0); });
    }

    /// Elementwise clamp; gradient is zero where the input was clamped.
    Var clamp(Var a, T lo, T hi)
    {
        Tensor<T> out = value(a);
        for (auto& v : out.data())
            v = std::clamp(v, lo, hi);
        return unary(a, std::move(out), [lo, hi](T x, T) { return (x >= lo && x <= hi) ? T(1) : T(0); });
    }

    /// Column-wise max over consecutive row groups. The result has one row per
    /// segment; with a single segment spanning all rows this is max-over-time
    /// pooling.
    Var segment_max_rows(Var a, std::vector<std::size_t> lengths)
    {
        const auto& A = value(a);
        std::size_t total = 0;
        for (auto l : lengths) {
            if (l == 0)
                throw ShapeError("segment_max_rows: empty segment");
            total += l;
        }
        if (total != A.rows())
            throw ShapeError("segment_max_rows: segments cover " + std::to_string(total) +
                             " rows of " + A.shape());
        Tensor<T> out(lengths.size(), A.cols());
        std::vector<std::size_t> argmax(lengths.size() * A.cols());
        std::size_t start = 0;
        for (std::size_t s = 0; s < lengths.size(); ++s) {
            for (std::size_t c = 0; c < A.cols(); ++c) {
                std::size_t best = start;
                for (std::size_t r = start + 1; r < start + lengths[s]; ++r)
                    if (A(r, c) > A(best, c))
                        best = r;
                out(s, c) = A(best, c);
                argmax[s * A.cols() + c] = best;
            }
            start += lengths[s];
        }
        return record(std::move(out), {a}, [a, argmax = std::move(argmax)](Graph& g, const Tensor<T>& go) {
            auto& ga = g.grad_acc(a);
            for (std::size_t s = 0; s < go.rows(); ++s)
                for (std::size_t c = 0; c < go.cols(); ++c)
                    ga(argmax[s * go.cols() + c], c) += go(s, c);
        });
    }

    Var max_over_rows(Var a) { return segment_max_rows(a, {value(a).rows()}); }

    /// Inverted dropout: keep with probability 1-p and scale kept entries by
    /// 1/(1-p). Identity when p == 0.
    Var dropout(Var a, T p, std::mt19937_64& rng)
    {
        if (p <= T(0))
            return a;
        if (p >= T(1))
            throw Error("dropout: probability must be < 1");
        const auto& A = value(a);
        Tensor<T> mask(A.rows(), A.cols());
        std::uniform_real_distribution<double> u(0.0, 1.0);
        const T keep_scale = T(1) / (T(1) - p);
        for (auto& m : mask.data())
            m = u(rng) >= static_cast<double>(p) ? keep_scale : T(0);
        return mul(a, constant(std::move(mask)));
    }

    enum class Axis { rows, cols };

    /// log-sum-exp reducing along `axis`: Axis::cols gives one value per row
    /// (n x 1); Axis::rows gives one value per column (1 x m).
    Var logsumexp(Var a, Axis axis)
    {
        const auto& A = value(a);
        const bool per_row = axis == Axis::cols;
        const std::size_t outer = per_row ? A.rows() : A.cols();
        const std::size_t inner = per_row ? A.cols() : A.rows();
        if (inner == 0)
            throw ShapeError("logsumexp: empty reduction axis for " + A.shape());
        Tensor<T> out(per_row ? A.rows() : 1, per_row ? 1 : A.cols());
        std::vector<T> buf(inner);
        for (std::size_t o = 0; o < outer; ++o) {
            for (std::size_t i = 0; i < inner; ++i)
                buf[i] = per_row ? A(o, i) : A(i, o);
            out[o] = kernels::log_sum_exp<T>(buf);
        }
        Tensor<T> saved = out;
        return record(std::move(out), {a}, [a, per_row, saved](Graph& g, const Tensor<T>& go) {
            const auto& A = g.value(a);
            auto& ga = g.grad_acc(a);
            for (std::size_t r = 0; r < A.rows(); ++r)
                for (std::size_t c = 0; c < A.cols(); ++c) {
                    const std::size_t o = per_row ? r : c;
                    ga(r, c) += go[o] * std::exp(A(r, c) - saved[o]);
                }
        });
    }

    /// Summed binary cross-entropy of predictions `pred` in (0,1) against a
    /// 0/1 target of the same shape. Returns a scalar.
    Var binary_cross_entropy(const Tensor<T>& target, Var pred)
    {
        const auto& P = value(pred);
        if (!P.same_shape(target))
            throw shape_error("binary_cross_entropy", target, P);
        T loss = T(0);
        for (std::size_t i = 0; i < P.size(); ++i)
            loss -= target[i] * std::log(P[i]) + (T(1) - target[i]) * std::log(T(1) - P[i]);
        return record(Tensor<T>::scalar(loss), {pred}, [pred, target](Graph& g, const Tensor<T>& go) {
            const auto& P = g.value(pred);
            auto& gp = g.grad_acc(pred);
            for (std::size_t i = 0; i < P.size(); ++i)
                gp[i] += go[0] * (-target[i] / P[i] + (T(1) - target[i]) / (T(1) - P[i]));
        });
    }

    Var sum(Var a)
    {
        T s = T(0);
        for (T v : value(a).data())
            s += v;
        return record(Tensor<T>::scalar(s), {a}, [a](Graph& g, const Tensor<T>& go) {
            auto& ga = g.grad_acc(a);
            for (auto& v : ga.data())
                v += go[0];
        });
    }

    /// Σ_k w_k · s_k over scalar inputs.
    Var weighted_sum(const std::vector<Var>& scalars, const std::vector<T>& weights)
    {
        if (scalars.size() != weights.size())
            throw ShapeError("weighted_sum: " + std::to_string(scalars.size()) + " inputs but " +
                             std::to_string(weights.size()) + " weights");
        T s = T(0);
        for (std::size_t k = 0; k < scalars.size(); ++k) {
            if (!value(scalars[k]).is_scalar())
                throw ShapeError("weighted_sum: input " + std::to_string(k) + " has shape " +
                                 value(scalars[k]).shape());
            s += weights[k] * value(scalars[k])[0];
        }
        return record(Tensor<T>::scalar(s), scalars, [scalars, weights](Graph& g, const Tensor<T>& go) {
            for (std::size_t k = 0; k < scalars.size(); ++k)
                if (g.requires_grad(scalars[k]))
                    g.grad_acc(scalars[k])[0] += weights[k] * go[0];
        });
    }

    // -------------------------------------------------------------- reverse

    /// Propagate d(loss)/d(node) to every node and into the gradients of the
    /// parameters referenced by this graph. The tape is spent afterwards.
    void backward(Var loss)
    {
        if (spent_)
            throw Error("backward: tape already consumed; record a new forward pass");
        if (!value(loss).is_scalar())
            throw ShapeError("backward: loss must be scalar, got " + value(loss).shape());
        spent_ = true;
        if (!nodes_[loss.id].requires_grad)
            return;
        grad_acc(loss)[0] += T(1);
        for (std::size_t i = loss.id + 1; i-- > 0;) {
            Node& n = nodes_[i];
            if (!n.backward || n.grad.empty())
                continue;
            n.backward(*this, n.grad);
        }
    }

    /// Clear the tape for reuse.
    void reset()
    {
        nodes_.clear();
        spent_ = false;
    }

    static T sigmoid_scalar(T x)
    {
        if (x >= T(0))
            return T(1) / (T(1) + std::exp(-x));
        const T e = std::exp(x);
        return e / (T(1) + e);
    }

private:
    struct Node
    {
        Tensor<T> own;
        const Tensor<T>* ref = nullptr;
        Param<T>* param = nullptr;
        Tensor<T> grad;
        bool requires_grad = false;
        Backward backward;
    };

    void check_open() const
    {
        if (spent_)
            throw Error("graph: cannot record after backward; call reset()");
    }

    Var push(Tensor<T> value, bool requires_grad, Backward backward)
    {
        check_open();
        Node n;
        n.own = std::move(value);
        n.requires_grad = requires_grad;
        n.backward = std::move(backward);
        nodes_.push_back(std::move(n));
        return Var{static_cast<std::uint32_t>(nodes_.size() - 1)};
    }

    // dy/dx supplied as a function of (x, y)
    template <typename D>
    Var unary(Var a, Tensor<T> out, D deriv)
    {
        return record(std::move(out), {a}, [a, deriv, self = nodes_.size()](Graph& g, const Tensor<T>& go) {
            const auto& X = g.value(a);
            const auto& Y = g.nodes_[self].own;
            auto& ga = g.grad_acc(a);
            for (std::size_t i = 0; i < go.size(); ++i)
                ga[i] += go[i] * deriv(X[i], Y[i]);
        });
    }

    static ShapeError shape_error(const char* op, const Tensor<T>& a, const Tensor<T>& b)
    {
        return ShapeError(std::string(op) + ": incompatible shapes " + a.shape() + " and " + b.shape());
    }

    std::vector<Node> nodes_;
    bool spent_ = false;
};

/// Compares reverse-mode gradients of `build` against central finite
/// differences and returns the largest relative error
/// |analytic - numeric| / max(1, |analytic|, |numeric|).
///
/// `build` must record a deterministic scalar loss on the graph it is given.
/// When `coords_per_param` is non-zero, that many coordinates are sampled
/// per parameter instead of probing every entry.
template <typename T>
double grad_check(const std::function<Var(Graph<T>&)>& build, ParamStore<T>& params, T eps,
                  std::size_t coords_per_param = 0, std::uint64_t seed = 0)
{
    if (!(eps > T(0)))
        throw Error("grad_check: eps must be positive");

    auto eval = [&]() -> T {
        Graph<T> g;
        const Var loss = build(g);
        const T v = g.value(loss)[0];
        if (!std::isfinite(v))
            throw NumericError("grad_check: non-finite loss at probe");
        return v;
    };

    params.zero_grad();
    {
        Graph<T> g;
        const Var loss = build(g);
        if (!std::isfinite(g.value(loss)[0]))
            throw NumericError("grad_check: non-finite loss");
        g.backward(loss);
    }

    std::mt19937_64 rng(seed);
    double worst = 0.0;
    for (auto& [name, p] : params) {
        if (!p.trainable || p.value.empty())
            continue;
        const Tensor<T> analytic = p.grad;
        std::vector<std::size_t> coords;
        if (coords_per_param == 0 || coords_per_param >= p.value.size()) {
            coords.resize(p.value.size());
            for (std::size_t i = 0; i < coords.size(); ++i)
                coords[i] = i;
        } else {
            std::uniform_int_distribution<std::size_t> pick(0, p.value.size() - 1);
            for (std::size_t k = 0; k < coords_per_param; ++k)
                coords.push_back(pick(rng));
        }
        for (std::size_t i : coords) {
            const T saved = p.value[i];
            p.value[i] = saved + eps;
            const T up = eval();
            p.value[i] = saved - eps;
            const T down = eval();
            p.value[i] = saved;
            const double numeric = (static_cast<double>(up) - static_cast<double>(down)) / (2.0 * eps);
            const double a = analytic[i];
            const double denom = std::max({1.0, std::abs(a), std::abs(numeric)});
            worst = std::max(worst, std::abs(a - numeric) / denom);
        }
    }
    return worst;
}

} // namespace nerae

#endif // NERAE_NUMCORE_HPP
