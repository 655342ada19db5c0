#ifndef NERAE_TRAINING_HPP
#define NERAE_TRAINING_HPP

// Mini-batch SGD with classical momentum, step-wise exponential learning
// rate decay and global-norm gradient clipping. The best epoch on the dev
// set is kept; the run itself always completes all epochs.

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "error.hpp"
#include "eval.hpp"
#include "model.hpp"
#include "numcore.hpp"

namespace nerae {

struct TrainConfig
{
    double lr0 = 0.015;
    double momentum = 0.9;
    double decay_factor = 0.8;
    std::size_t decay_every = 5;
    double clip_norm = 5.0;
    std::size_t epochs = 40;
    std::size_t batch_size = 10;
    std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
    /// Also score the training split after every epoch.
    bool eval_train = false;

    void validate() const
    {
        if (!(lr0 > 0.0))
            throw ConfigError("training.lr0 must be > 0");
        if (!(momentum >= 0.0 && momentum < 1.0))
            throw ConfigError("training.momentum must lie in [0, 1)");
        if (!(decay_factor > 0.0 && decay_factor <= 1.0))
            throw ConfigError("training.decay_factor must lie in (0, 1]");
        if (decay_every == 0)
            throw ConfigError("training.decay_every must be >= 1");
        if (!(clip_norm > 0.0))
            throw ConfigError("training.clip_norm must be > 0");
        if (batch_size == 0)
            throw ConfigError("training.batch_size must be >= 1");
        if (seeds.empty())
            throw ConfigError("training.seeds must not be empty");
    }
};

/// lr0 * decay_factor^floor(epoch / decay_every), epochs counted from 0.
inline double lr_at(std::size_t epoch, const TrainConfig& cfg)
{
    return cfg.lr0 * std::pow(cfg.decay_factor, static_cast<double>(epoch / cfg.decay_every));
}

/// Rescale so that the joint L2 norm of all gradients is at most clip_norm.
/// Returns the norm before clipping.
template <typename T>
double clip_global_norm(std::span<const std::span<T>> grads, double clip_norm)
{
    double sq = 0.0;
    for (auto g : grads)
        for (T v : g) {
            if (!std::isfinite(v))
                throw NumericError("clip_global_norm: non-finite gradient");
            sq += static_cast<double>(v) * static_cast<double>(v);
        }
    const double norm = std::sqrt(sq);
    if (norm > clip_norm) {
        const T s = static_cast<T>(clip_norm / norm);
        for (auto g : grads)
            for (T& v : g)
                v *= s;
    }
    return norm;
}

/// ParamStore variant; a non-finite gradient error names the parameter.
template <typename T>
double clip_global_norm(ParamStore<T>& params, double clip_norm)
{
    std::vector<std::span<T>> grads;
    for (auto& [name, p] : params) {
        if (!p.trainable)
            continue;
        if (!p.grad.all_finite())
            throw NumericError("non-finite gradient in parameter '" + name + "'");
        grads.emplace_back(p.grad.data());
    }
    return clip_global_norm<T>(std::span<const std::span<T>>(grads), clip_norm);
}

/// Classical momentum: v <- momentum * v - lr * g; theta <- theta + v.
template <typename T>
class MomentumSgd
{
public:
    void step(ParamStore<T>& params, double lr, double momentum)
    {
        for (auto& [name, p] : params) {
            if (!p.trainable)
                continue;
            auto [it, fresh] = velocity_.try_emplace(name, p.value.rows(), p.value.cols());
            Tensor<T>& v = it->second;
            const T m = static_cast<T>(momentum), a = static_cast<T>(lr);
            for (std::size_t i = 0; i < v.size(); ++i) {
                v[i] = m * v[i] - a * p.grad[i];
                p.value[i] += v[i];
            }
        }
    }

    const std::map<std::string, Tensor<T>>& velocity() const noexcept { return velocity_; }

private:
    std::map<std::string, Tensor<T>> velocity_;
};

/// Zero gradients of rows that must never move (PAD embeddings).
template <typename T>
void drop_frozen_rows(ParamStore<T>& params)
{
    for (auto& [name, p] : params)
        for (auto r : p.frozen_rows)
            for (auto& v : p.grad.row_span(r))
                v = T(0);
}

struct EpochRecord
{
    std::size_t epoch = 0;
    double lr = 0.0;
    double loss = 0.0; ///< mean joint loss per sentence
    double nll = 0.0;  ///< mean CRF negative log-likelihood per sentence
    std::map<std::string, double> ae; ///< mean reconstruction loss per feature type
    double grad_norm = 0.0;          ///< mean pre-clip gradient norm per update
    double dev_precision = 0.0, dev_recall = 0.0, dev_f1 = 0.0;
    std::optional<double> train_f1;
    bool best = false;
};

template <typename T>
struct TrainResult
{
    std::vector<EpochRecord> history;
    std::size_t best_epoch = 0;
    double best_dev_f1 = -1.0;
    std::map<std::string, Tensor<T>> best_values;
};

/// Labels predicted for a batch of already encoded sentences.
template <typename T>
std::vector<std::vector<std::string>> predict_labels(Model<T>& model, const std::vector<EncodedSentence<T>>& data)
{
    std::vector<std::vector<std::string>> out;
    out.reserve(data.size());
    for (const auto& e : data) {
        std::vector<std::string> labels;
        for (auto id : model.decode(e))
            labels.push_back(model.vocab().labels.at(id));
        out.push_back(std::move(labels));
    }
    return out;
}

template <typename T>
std::vector<std::vector<std::string>> gold_labels(const Model<T>& model, const std::vector<EncodedSentence<T>>& data)
{
    std::vector<std::vector<std::string>> out;
    for (const auto& e : data) {
        std::vector<std::string> labels;
        for (auto id : e.labels)
            labels.push_back(model.vocab().labels.at(id));
        out.push_back(std::move(labels));
    }
    return out;
}

template <typename T>
SpanReport evaluate(Model<T>& model, const std::vector<EncodedSentence<T>>& data)
{
    return span_f1(gold_labels(model, data), predict_labels(model, data));
}

struct BatchStats
{
    double loss = 0.0;
    double nll = 0.0;
    std::map<std::string, double> ae;
    double grad_norm = 0.0;
};

/// One optimisation step on a batch: gradients of the joint loss summed over
/// the batch, frozen rows dropped, clipped, then applied. Returns the summed
/// loss parts for bookkeeping.
template <typename T>
BatchStats train_step(Model<T>& model, MomentumSgd<T>& opt, std::span<const EncodedSentence<T>* const> batch,
                         double lr, const TrainConfig& cfg, std::mt19937_64* dropout_rng)
{
    BatchStats st;
    auto& params = model.params();
    params.zero_grad();
    for (const auto* e : batch) {
        Graph<T> g;
        const LossParts parts = model.joint_loss(g, *e, dropout_rng);
        const double total = g.value(parts.total)[0];
        if (!std::isfinite(total))
            throw NumericError("non-finite training loss");
        st.loss += total;
        st.nll += g.value(*parts.nll)[0];
        for (const auto& [t, v] : parts.ae)
            st.ae[to_string(t)] += g.value(v)[0];
        g.backward(parts.total);
    }
    drop_frozen_rows(params);
    st.grad_norm = clip_global_norm(params, cfg.clip_norm);
    opt.step(params, lr, cfg.momentum);
    return st;
}

/// Full training run. `seed` drives shuffling and dropout.
template <typename T>
TrainResult<T> train(Model<T>& model, const std::vector<EncodedSentence<T>>& train_set,
                     const std::vector<EncodedSentence<T>>& dev_set, const TrainConfig& cfg, std::uint64_t seed,
                     const std::function<void(const EpochRecord&)>& on_epoch = {})
{
    cfg.validate();
    if (train_set.empty())
        throw Error("train: empty training split");
    for (const auto& e : train_set)
        if (e.labels.size() != e.size())
            throw Error("train: training sentence without gold labels");

    std::mt19937_64 shuffle_rng(seed);
    std::mt19937_64 dropout_rng(seed ^ 0x9e3779b97f4a7c15ULL);
    MomentumSgd<T> opt;
    TrainResult<T> result;
    std::vector<const EncodedSentence<T>*> order;
    for (const auto& e : train_set)
        order.push_back(&e);

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        EpochRecord rec;
        rec.epoch = epoch;
        rec.lr = lr_at(epoch, cfg);
        std::shuffle(order.begin(), order.end(), shuffle_rng);
        std::size_t updates = 0;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t n = std::min(cfg.batch_size, order.size() - start);
            const auto st = train_step<T>(model, opt, std::span<const EncodedSentence<T>* const>(order.data() + start, n),
                                          rec.lr, cfg, &dropout_rng);
            rec.loss += st.loss;
            rec.nll += st.nll;
            for (const auto& [k, v] : st.ae)
                rec.ae[k] += v;
            rec.grad_norm += st.grad_norm;
            ++updates;
        }
        const double n = static_cast<double>(order.size());
        rec.loss /= n;
        rec.nll /= n;
        for (auto& [k, v] : rec.ae)
            v /= n;
        rec.grad_norm /= static_cast<double>(updates);

        if (!dev_set.empty()) {
            const auto dev = evaluate(model, dev_set);
            rec.dev_precision = dev.precision();
            rec.dev_recall = dev.recall();
            rec.dev_f1 = dev.f1();
        }
        if (cfg.eval_train)
            rec.train_f1 = evaluate(model, train_set).f1();

        if (rec.dev_f1 > result.best_dev_f1) {
            result.best_dev_f1 = rec.dev_f1;
            result.best_epoch = epoch;
            result.best_values.clear();
            for (const auto& [name, p] : model.params())
                result.best_values.emplace(name, p.value);
            rec.best = true;
        }
        result.history.push_back(rec);
        if (on_epoch)
            on_epoch(rec);
    }
    return result;
}

/// Copy stored values back into the model's parameters.
template <typename T>
void restore(Model<T>& model, const std::map<std::string, Tensor<T>>& values)
{
    for (const auto& [name, v] : values)
        model.params().get(name).value = v;
}

} // namespace nerae

#endif // NERAE_TRAINING_HPP
