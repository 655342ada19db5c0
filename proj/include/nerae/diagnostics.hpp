#ifndef NERAE_DIAGNOSTICS_HPP
#define NERAE_DIAGNOSTICS_HPP

// Finite-difference check of the full joint loss on a tiny fixed sentence.

#include <cstdint>
#include <string>

#include "corpus.hpp"
#include "embeddings.hpp"
#include "features.hpp"
#include "model.hpp"
#include "numcore.hpp"

namespace nerae {

/// Three tokens, two labels (O, S-PER), every feature type present.
inline SentenceRecord grad_check_sentence()
{
    SentenceRecord s;
    s.tokens = {Token{"Ekeus", "NNP", "I-NP", "nsubj", "S-PER"}, Token{"visits", "VBZ", "I-VP", "root", "O"},
                Token{"Baghdad", "NNP", "I-NP", "dobj", "O"}};
    return s;
}

inline Gazetteer grad_check_gazetteer()
{
    Gazetteer g;
    g.person_tokens = {"ekeus"};
    g.location_tokens = {"baghdad"};
    return g;
}

inline Vocabulary grad_check_vocab()
{
    const SentenceRecord s = grad_check_sentence();
    Vocabulary v = build_vocab(std::vector<SentenceRecord>{s});
    v.labels = IdMap(std::vector<std::string>{"O", "S-PER"});
    return v;
}

inline ModelConfig grad_check_model_config(FeatureMode mode)
{
    ModelConfig mc;
    mc.word_dim = 4;
    mc.char_dim = 3;
    mc.char_filters = 3;
    mc.char_window = 3;
    mc.lstm_hidden = 3;
    mc.dropout = 0.0;
    mc.mode = mode;
    mc.features = FeatureConfig{true, true, true, true};
    return mc;
}

struct GradCheckReport
{
    FeatureMode mode;
    std::size_t parameters = 0;
    std::size_t coordinates = 0;
    double max_rel_error = 0.0;
};

/// Largest relative error between reverse-mode and central-difference
/// gradients of the joint loss (double precision, dropout off).
inline GradCheckReport grad_check_joint_loss(FeatureMode mode, double eps = 1e-5, std::uint64_t seed = 7)
{
    PretrainedVectors none;
    none.dim = 4;
    Model<double> model(grad_check_model_config(mode), grad_check_vocab(), grad_check_gazetteer(), none, seed);
    const auto e = model.encode(grad_check_sentence());
    GradCheckReport r;
    r.mode = mode;
    r.parameters = model.params().size();
    for (const auto& [name, p] : model.params())
        r.coordinates += p.value.size();
    r.max_rel_error = grad_check<double>(
        [&](Graph<double>& g) { return model.joint_loss(g, e).total; }, model.params(), eps);
    return r;
}

} // namespace nerae

#endif // NERAE_DIAGNOSTICS_HPP
