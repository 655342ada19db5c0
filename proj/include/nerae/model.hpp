#ifndef NERAE_MODEL_HPP
#define NERAE_MODEL_HPP

// Char-CNN + Bi-LSTM + CRF sequence labeller with auto-encoder heads that
// reconstruct the hand-crafted feature segments from the Bi-LSTM states.

#include <cmath>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "corpus.hpp"
#include "crf.hpp"
#include "embeddings.hpp"
#include "error.hpp"
#include "features.hpp"
#include "numcore.hpp"

namespace nerae {

/// How hand-crafted features enter the network.
enum class FeatureMode { none, input_only, output_only, both };

inline std::string to_string(FeatureMode m)
{
    switch (m) {
    case FeatureMode::none: return "none";
    case FeatureMode::input_only: return "input_only";
    case FeatureMode::output_only: return "output_only";
    case FeatureMode::both: return "both";
    }
    return "?";
}

inline FeatureMode feature_mode_from_string(const std::string& s)
{
    for (auto m : {FeatureMode::none, FeatureMode::input_only, FeatureMode::output_only, FeatureMode::both})
        if (to_string(m) == s)
            return m;
    throw ConfigError("unknown feature mode '" + s + "' (expected none, input_only, output_only or both)");
}

inline bool features_as_input(FeatureMode m) { return m == FeatureMode::input_only || m == FeatureMode::both; }
inline bool features_as_output(FeatureMode m) { return m == FeatureMode::output_only || m == FeatureMode::both; }

struct ModelConfig
{
    std::size_t word_dim = 300;
    std::size_t char_dim = 30;
    std::size_t char_filters = 30;
    std::size_t char_window = 3;
    std::size_t lstm_hidden = 200;
    double dropout = 0.5;
    FeatureMode mode = FeatureMode::both;
    FeatureConfig features;
    std::map<FeatureType, double> lambda{{FeatureType::pos, 1.0},
                                         {FeatureType::shape, 1.0},
                                         {FeatureType::gazetteer, 1.0},
                                         {FeatureType::dep, 1.0}};
    bool ae_bias = true;
    bool emission_bias = true;

    double lambda_for(FeatureType t) const
    {
        auto it = lambda.find(t);
        return it == lambda.end() ? 1.0 : it->second;
    }

    void validate() const
    {
        if (!word_dim || !char_dim || !char_filters || !char_window || !lstm_hidden)
            throw ConfigError("model dimensions must be positive");
        if (!(dropout >= 0.0 && dropout < 1.0))
            throw ConfigError("model.dropout must lie in [0, 1)");
        for (const auto& [t, l] : lambda)
            if (!(l >= 0.0))
                throw ConfigError("lambda for '" + to_string(t) + "' must be >= 0");
    }
};

/// Probability clamp applied to reconstructed features before the
/// cross-entropy.
inline constexpr double ae_clamp = 1e-7;

/// Model inputs for one sentence, independent of parameters.
template <typename T>
struct EncodedSentence
{
    std::vector<std::size_t> word_ids;
    std::vector<std::size_t> char_window_ids; ///< flattened conv windows over all words
    std::vector<std::size_t> char_positions;  ///< windows per word
    Tensor<T> feature_input;                  ///< T x |f| multi-hot rows
    std::vector<std::pair<FeatureType, Tensor<T>>> feature_targets; ///< per active type, T x dim_t
    std::vector<std::size_t> labels;          ///< empty if unlabelled

    std::size_t size() const noexcept { return word_ids.size(); }
};

/// Pieces of the joint objective for one sentence.
struct LossParts
{
    Var total;
    std::optional<Var> nll;
    std::vector<std::pair<FeatureType, Var>> ae;
};

/// One LSTM direction over the rows of x (T x D). Gate layout along the 4H
/// axis is input, forget, output, candidate.
template <typename T>
Var lstm_layer(Graph<T>& g, Var x, Var w_ih, Var w_hh, Var bias, bool reverse)
{
    const std::size_t steps = g.value(x).rows();
    const std::size_t hidden = g.value(w_hh).rows();
    if (g.value(w_ih).rows() != g.value(x).cols())
        throw ShapeError("lstm: input dim " + std::to_string(g.value(x).cols()) + " but W_ih is " +
                         g.value(w_ih).shape());
    const Var projected = g.add_bias(g.matmul(x, w_ih), bias);
    Var h = g.constant(Tensor<T>(1, hidden));
    Var c = g.constant(Tensor<T>(1, hidden));
    std::vector<Var> outputs(steps);
    for (std::size_t k = 0; k < steps; ++k) {
        const std::size_t t = reverse ? steps - 1 - k : k;
        const Var gates = g.add(g.row(projected, t), g.matmul(h, w_hh));
        const Var in = g.sigmoid(g.slice_cols(gates, 0, hidden));
        const Var forget = g.sigmoid(g.slice_cols(gates, hidden, hidden));
        const Var out = g.sigmoid(g.slice_cols(gates, 2 * hidden, hidden));
        const Var cand = g.tanh(g.slice_cols(gates, 3 * hidden, hidden));
        c = g.add(g.mul(forget, c), g.mul(in, cand));
        h = g.mul(out, g.tanh(c));
        outputs[t] = h;
    }
    return g.concat_rows(outputs);
}

template <typename T>
class Model
{
public:
    /// Fresh model with initialised parameters.
    Model(ModelConfig config, Vocabulary vocab, Gazetteer gazetteer, const PretrainedVectors& pretrained,
          std::uint64_t seed)
        : config_(std::move(config)), vocab_(std::move(vocab)), gazetteer_(std::move(gazetteer))
    {
        config_.validate();
        std::mt19937_64 rng(seed);
        init_parameters(pretrained, rng);
    }

    /// Model around existing parameters (e.g. from a checkpoint). Shapes are
    /// checked against the configuration.
    Model(ModelConfig config, Vocabulary vocab, Gazetteer gazetteer, ParamStore<T> params)
        : config_(std::move(config)), vocab_(std::move(vocab)), gazetteer_(std::move(gazetteer)),
          params_(std::move(params))
    {
        config_.validate();
        const auto want = expected_shapes();
        if (want.size() != params_.size())
            throw Error("model: parameter set does not match configuration");
        for (const auto& [name, shape] : want) {
            if (!params_.contains(name))
                throw Error("model: missing parameter '" + name + "'");
            auto& p = params_.get(name);
            if (p.value.rows() != shape.first || p.value.cols() != shape.second)
                throw Error("model: parameter '" + name + "' has shape " + p.value.shape() + ", expected " +
                            Tensor<T>::shape_string(shape.first, shape.second));
            if (p.grad.empty())
                p.grad = Tensor<T>(p.value.rows(), p.value.cols());
        }
        params_.get("char.embed").frozen_rows = {Vocabulary::pad};
        params_.get("word.embed").frozen_rows = {Vocabulary::pad};
    }

    /// Name -> (rows, cols) of every parameter this configuration owns.
    std::map<std::string, std::pair<std::size_t, std::size_t>> expected_shapes() const
    {
        const std::size_t H = config_.lstm_hidden;
        const std::size_t L = label_count();
        const std::size_t D = lstm_input_dim();
        std::map<std::string, std::pair<std::size_t, std::size_t>> s;
        s["char.embed"] = {vocab_.chars.size(), config_.char_dim};
        s["char.conv.W"] = {config_.char_window * config_.char_dim, config_.char_filters};
        s["char.conv.b"] = {1, config_.char_filters};
        s["word.embed"] = {vocab_.words.size(), config_.word_dim};
        for (const char* dir : {"fw", "bw"}) {
            const std::string base = std::string("lstm.") + dir;
            s[base + ".W_ih"] = {D, 4 * H};
            s[base + ".W_hh"] = {H, 4 * H};
            s[base + ".b"] = {1, 4 * H};
        }
        s["emit.W"] = {2 * H, L};
        if (config_.emission_bias)
            s["emit.b"] = {1, L};
        s["crf.trans"] = {L + 2, L + 2};
        for (auto t : ae_heads()) {
            const std::string base = "ae." + to_string(t);
            s[base + ".W"] = {2 * H, feature_dim(t, vocab_)};
            if (config_.ae_bias)
                s[base + ".b"] = {1, feature_dim(t, vocab_)};
        }
        return s;
    }

    const ModelConfig& config() const noexcept { return config_; }
    ModelConfig& mutable_config() noexcept { return config_; }
    const Vocabulary& vocab() const noexcept { return vocab_; }
    const Gazetteer& gazetteer() const noexcept { return gazetteer_; }
    ParamStore<T>& params() noexcept { return params_; }
    const ParamStore<T>& params() const noexcept { return params_; }
    std::size_t label_count() const noexcept { return vocab_.labels.size(); }

    /// Feature types that participate in the graph under the current mode.
    std::vector<FeatureType> active_features() const
    {
        if (config_.mode == FeatureMode::none)
            return {};
        return config_.features.active();
    }

    /// Feature types with an auto-encoder head.
    std::vector<FeatureType> ae_heads() const
    {
        return features_as_output(config_.mode) ? active_features() : std::vector<FeatureType>{};
    }

    std::size_t feature_input_dim() const
    {
        if (!features_as_input(config_.mode))
            return 0;
        std::size_t d = 0;
        for (auto t : active_features())
            d += feature_dim(t, vocab_);
        return d;
    }

    std::size_t lstm_input_dim() const { return config_.word_dim + config_.char_filters + feature_input_dim(); }

    EncodedSentence<T> encode(const SentenceRecord& s) const
    {
        if (s.tokens.empty())
            throw Error("encode: empty sentence");
        EncodedSentence<T> e;
        const std::size_t n = s.size();
        const std::size_t window = config_.char_window;
        const std::size_t left = (window - 1) / 2;
        for (const auto& tok : s.tokens) {
            e.word_ids.push_back(vocab_.word_id(tok.surface));
            std::vector<std::size_t> padded(left, Vocabulary::pad);
            for (const auto& ch : utf8_chars(tok.surface))
                padded.push_back(vocab_.chars.id_or(ch, Vocabulary::unk));
            const std::size_t len = padded.size() - left;
            padded.resize(padded.size() + (window - 1 - left), Vocabulary::pad);
            const std::size_t positions = std::max<std::size_t>(len, 1);
            if (len == 0)
                padded.resize(window, Vocabulary::pad);
            for (std::size_t p = 0; p < positions; ++p)
                for (std::size_t k = 0; k < window; ++k)
                    e.char_window_ids.push_back(padded[p + k]);
            e.char_positions.push_back(positions);
        }

        const auto types = active_features();
        std::vector<FeatureVector> fvs;
        fvs.reserve(n);
        for (const auto& tok : s.tokens)
            fvs.push_back(assemble_features(tok, gazetteer_, vocab_, featured_config(types)));

        if (features_as_input(config_.mode)) {
            const std::size_t d = feature_input_dim();
            e.feature_input = Tensor<T>(n, d);
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < d; ++j)
                    e.feature_input(i, j) = static_cast<T>(fvs[i].flat[j]);
        }
        if (features_as_output(config_.mode))
            for (std::size_t k = 0; k < types.size(); ++k) {
                Tensor<T> target(n, feature_dim(types[k], vocab_));
                for (std::size_t i = 0; i < n; ++i)
                    target(i, fvs[i].segments[k].hot) = T(1);
                e.feature_targets.emplace_back(types[k], std::move(target));
            }

        if (!s.tokens.front().gold_label.empty())
            for (const auto& tok : s.tokens)
                e.labels.push_back(vocab_.label_id(tok.gold_label));
        return e;
    }

    // ------------------------------------------------------------- graph

    /// Character representation of every word: T x filters.
    Var char_cnn(Graph<T>& g, const EncodedSentence<T>& e)
    {
        const Var table = g.param(params_.get("char.embed"));
        const Var chars = g.gather_rows(table, e.char_window_ids);
        std::size_t total = 0;
        for (auto p : e.char_positions)
            total += p;
        const Var windows = g.reshape(chars, total, config_.char_window * config_.char_dim);
        const Var conv = g.add_bias(g.matmul(windows, g.param(params_.get("char.conv.W"))),
                                    g.param(params_.get("char.conv.b")));
        return g.segment_max_rows(g.relu(conv), e.char_positions);
    }

    /// Per-token Bi-LSTM input [w; c; f].
    Var lstm_input(Graph<T>& g, const EncodedSentence<T>& e)
    {
        std::vector<Var> parts{g.gather_rows(g.param(params_.get("word.embed")), e.word_ids), char_cnn(g, e)};
        if (features_as_input(config_.mode) && feature_input_dim() > 0)
            parts.push_back(g.constant(e.feature_input));
        return g.concat_cols(parts);
    }

    /// T x 2H states [forward; backward].
    Var bilstm(Graph<T>& g, Var x)
    {
        if (g.value(x).cols() != lstm_input_dim())
            throw ShapeError("bilstm: token inputs have dim " + std::to_string(g.value(x).cols()) +
                             ", expected " + std::to_string(lstm_input_dim()));
        const Var fw = lstm_layer(g, x, g.param(params_.get("lstm.fw.W_ih")), g.param(params_.get("lstm.fw.W_hh")),
                                  g.param(params_.get("lstm.fw.b")), false);
        const Var bw = lstm_layer(g, x, g.param(params_.get("lstm.bw.W_ih")), g.param(params_.get("lstm.bw.W_hh")),
                                  g.param(params_.get("lstm.bw.b")), true);
        return g.concat_cols({fw, bw});
    }

    /// T x L emission scores.
    Var emissions(Graph<T>& g, Var h)
    {
        Var scores = g.matmul(h, g.param(params_.get("emit.W")));
        if (config_.emission_bias)
            scores = g.add_bias(scores, g.param(params_.get("emit.b")));
        return scores;
    }

    /// Summed binary cross-entropy of one reconstruction head.
    Var ae_loss(Graph<T>& g, Var h, FeatureType t, const Tensor<T>& target)
    {
        const std::string base = "ae." + to_string(t);
        Var logits = g.matmul(h, g.param(params_.get(base + ".W")));
        if (config_.ae_bias)
            logits = g.add_bias(logits, g.param(params_.get(base + ".b")));
        const Var probs = g.clamp(g.sigmoid(logits), static_cast<T>(ae_clamp), static_cast<T>(1.0 - ae_clamp));
        return g.binary_cross_entropy(target, probs);
    }

    struct Forward
    {
        Var emissions;
        Var hidden;
    };

    /// Emissions and hidden states. Dropout applies only when `rng` is given.
    Forward forward(Graph<T>& g, const EncodedSentence<T>& e, std::mt19937_64* rng = nullptr)
    {
        Var h = bilstm(g, lstm_input(g, e));
        if (rng)
            h = g.dropout(h, static_cast<T>(config_.dropout), *rng);
        return {emissions(g, h), h};
    }

    /// -log p(y|x) + Σ_t λ_t · AE_t for one labelled sentence.
    LossParts joint_loss(Graph<T>& g, const EncodedSentence<T>& e, std::mt19937_64* rng = nullptr)
    {
        if (e.labels.size() != e.size())
            throw Error("joint_loss: sentence has no gold labels");
        const Forward f = forward(g, e, rng);
        LossParts parts;
        parts.nll = crf::negative_log_likelihood(g, f.emissions, g.param(params_.get("crf.trans")), e.labels);
        std::vector<Var> terms{*parts.nll};
        std::vector<T> weights{T(1)};
        for (const auto& [t, target] : e.feature_targets) {
            const Var l = ae_loss(g, f.hidden, t, target);
            parts.ae.emplace_back(t, l);
            terms.push_back(l);
            weights.push_back(static_cast<T>(config_.lambda_for(t)));
        }
        parts.total = g.weighted_sum(terms, weights);
        return parts;
    }

    /// Viterbi label ids (dropout off).
    std::vector<std::size_t> decode(const EncodedSentence<T>& e)
    {
        Graph<T> g;
        const Forward f = forward(g, e);
        return crf::viterbi_decode(g.value(f.emissions), params_.get("crf.trans").value).path;
    }

    std::vector<std::string> predict(const SentenceRecord& s)
    {
        std::vector<std::string> out;
        for (auto id : decode(encode(s)))
            out.push_back(vocab_.labels.at(id));
        return out;
    }

private:
    static FeatureConfig featured_config(const std::vector<FeatureType>& types)
    {
        FeatureConfig fc{false, false, false, false};
        for (auto t : types)
            fc.set(t, true);
        return fc;
    }

    static Tensor<T> glorot(std::size_t in, std::size_t out, std::mt19937_64& rng)
    {
        const double bound = std::sqrt(6.0 / static_cast<double>(in + out));
        std::uniform_real_distribution<double> u(-bound, bound);
        Tensor<T> m(in, out);
        for (auto& v : m.data())
            v = static_cast<T>(u(rng));
        return m;
    }

    void init_parameters(const PretrainedVectors& pretrained, std::mt19937_64& rng)
    {
        const std::size_t H = config_.lstm_hidden;
        const std::size_t L = label_count();

        auto& chars = params_.add("char.embed", init_uniform<T>(vocab_.chars.size(), config_.char_dim, rng));
        for (std::size_t c = 0; c < config_.char_dim; ++c)
            chars.value(Vocabulary::pad, c) = T(0);
        chars.frozen_rows = {Vocabulary::pad};
        params_.add("char.conv.W", glorot(config_.char_window * config_.char_dim, config_.char_filters, rng));
        params_.add("char.conv.b", Tensor<T>(1, config_.char_filters));

        auto& words = params_.add("word.embed", build_word_table<T>(vocab_, pretrained, config_.word_dim, rng));
        words.frozen_rows = {Vocabulary::pad};

        const std::size_t D = lstm_input_dim();
        for (const char* dir : {"fw", "bw"}) {
            const std::string base = std::string("lstm.") + dir;
            params_.add(base + ".W_ih", glorot(D, 4 * H, rng));
            params_.add(base + ".W_hh", glorot(H, 4 * H, rng));
            Tensor<T> b(1, 4 * H);
            for (std::size_t k = H; k < 2 * H; ++k)
                b[k] = T(1); // forget gate
            params_.add(base + ".b", std::move(b));
        }

        params_.add("emit.W", glorot(2 * H, L, rng));
        if (config_.emission_bias)
            params_.add("emit.b", Tensor<T>(1, L));
        params_.add("crf.trans", crf::make_transitions<T>(L));

        for (auto t : ae_heads()) {
            const std::string base = "ae." + to_string(t);
            const std::size_t d = feature_dim(t, vocab_);
            params_.add(base + ".W", glorot(2 * H, d, rng));
            if (config_.ae_bias)
                params_.add(base + ".b", Tensor<T>(1, d));
        }
    }

    ModelConfig config_;
    Vocabulary vocab_;
    Gazetteer gazetteer_;
    ParamStore<T> params_;
};

} // namespace nerae

#endif // NERAE_MODEL_HPP
