#ifndef NERAE_FEATURES_HPP
#define NERAE_FEATURES_HPP

// Hand-crafted token features: POS tag, word shape, gazetteer membership and
// (optionally) the incoming dependency label, each one-hot encoded and
// concatenated into a multi-hot vector.

#include <array>
#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "corpus.hpp"
#include "error.hpp"
#include "text.hpp"

namespace nerae {

enum class FeatureType { pos, shape, gazetteer, dep };

inline constexpr std::array<FeatureType, 4> all_feature_types{FeatureType::pos, FeatureType::shape,
                                                              FeatureType::gazetteer, FeatureType::dep};

inline std::string to_string(FeatureType t)
{
    switch (t) {
    case FeatureType::pos: return "pos";
    case FeatureType::shape: return "shape";
    case FeatureType::gazetteer: return "gazetteer";
    case FeatureType::dep: return "dep";
    }
    return "?";
}

inline FeatureType feature_type_from_string(const std::string& s)
{
    for (auto t : all_feature_types)
        if (to_string(t) == s)
            return t;
    throw ConfigError("unknown feature type '" + s + "' (expected pos, shape, gazetteer or dep)");
}

// --------------------------------------------------------------- gazetteer

enum class GazetteerMatch : std::size_t { none = 0, person = 1, location = 2 };

inline std::string to_string(GazetteerMatch m)
{
    switch (m) {
    case GazetteerMatch::none: return "O";
    case GazetteerMatch::person: return "PER";
    case GazetteerMatch::location: return "LOC";
    }
    return "?";
}

struct Gazetteer
{
    std::set<std::string> person_tokens;   ///< case-folded
    std::set<std::string> location_tokens; ///< case-folded

    bool operator==(const Gazetteer&) const = default;
};

/// Token-level lookup after case folding. PER wins when a token is in both
/// lists.
inline GazetteerMatch gazetteer_lookup(const std::string& surface, const Gazetteer& gaz)
{
    const std::string key = fold_case(surface);
    if (gaz.person_tokens.count(key))
        return GazetteerMatch::person;
    if (gaz.location_tokens.count(key))
        return GazetteerMatch::location;
    return GazetteerMatch::none;
}

/// Whitespace-separated tokens of a name list; `#` starts a comment line.
inline std::vector<std::string> read_name_list(std::istream& in)
{
    std::vector<std::string> out;
    std::string line;
    while (std::getline(in, line)) {
        const auto body = trim(line);
        if (body.empty() || body.front() == '#')
            continue;
        for (auto& tok : split_ws(body))
            out.push_back(fold_case(tok));
    }
    return out;
}

/// `token<TAB>count` lines. Counts of tokens equal after case folding add up.
inline std::map<std::string, std::uint64_t> read_frequency_list(std::istream& in)
{
    std::map<std::string, std::uint64_t> freq;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto body = trim(line);
        if (body.empty() || body.front() == '#')
            continue;
        const auto tab = body.find('\t');
        if (tab == std::string_view::npos)
            throw ParseError("frequency line must be token<TAB>count", lineno);
        const auto tok = trim(body.substr(0, tab));
        const auto cnt = trim(body.substr(tab + 1));
        if (tok.empty() || cnt.empty() || cnt.find_first_not_of("0123456789") != std::string_view::npos)
            throw ParseError("malformed frequency entry '" + std::string(body) + "'", lineno);
        freq[fold_case(tok)] += std::stoull(std::string(cnt));
    }
    return freq;
}

inline constexpr std::uint64_t default_frequency_threshold = 10'000;

/// Build a gazetteer, dropping tokens whose reference frequency is at least
/// `threshold`.
inline Gazetteer compile_gazetteer(std::istream& person_list, std::istream& location_list,
                                   std::istream& frequency_list,
                                   std::uint64_t threshold = default_frequency_threshold)
{
    const auto freq = read_frequency_list(frequency_list);
    auto frequent = [&](const std::string& tok) {
        auto it = freq.find(tok);
        return it != freq.end() && it->second >= threshold;
    };
    Gazetteer g;
    for (auto& tok : read_name_list(person_list))
        if (!frequent(tok))
            g.person_tokens.insert(std::move(tok));
    for (auto& tok : read_name_list(location_list))
        if (!frequent(tok))
            g.location_tokens.insert(std::move(tok));
    return g;
}

/// File variant; an empty frequency path disables filtering.
inline Gazetteer load_gazetteer(const std::string& person_path, const std::string& location_path,
                                const std::string& frequency_path,
                                std::uint64_t threshold = default_frequency_threshold)
{
    auto open = [](const std::string& p) {
        std::ifstream in(p);
        if (!in)
            throw Error("cannot open gazetteer file '" + p + "'");
        return in;
    };
    std::ifstream person = open(person_path);
    std::ifstream location = open(location_path);
    if (frequency_path.empty()) {
        std::istringstream none;
        return compile_gazetteer(person, location, none, threshold);
    }
    std::ifstream freq = open(frequency_path);
    return compile_gazetteer(person, location, freq, threshold);
}

// ------------------------------------------------------------- assembly

/// Which feature types are active. The order of segments is always
/// POS, shape, gazetteer, dep.
struct FeatureConfig
{
    bool pos = true;
    bool shape = true;
    bool gazetteer = true;
    bool dep = false;

    bool enabled(FeatureType t) const
    {
        switch (t) {
        case FeatureType::pos: return pos;
        case FeatureType::shape: return shape;
        case FeatureType::gazetteer: return gazetteer;
        case FeatureType::dep: return dep;
        }
        return false;
    }
    void set(FeatureType t, bool on)
    {
        switch (t) {
        case FeatureType::pos: pos = on; break;
        case FeatureType::shape: shape = on; break;
        case FeatureType::gazetteer: gazetteer = on; break;
        case FeatureType::dep: dep = on; break;
        }
    }
    std::vector<FeatureType> active() const
    {
        std::vector<FeatureType> out;
        for (auto t : all_feature_types)
            if (enabled(t))
                out.push_back(t);
        return out;
    }
    bool operator==(const FeatureConfig&) const = default;
};

inline std::size_t feature_dim(FeatureType t, const Vocabulary& vocab)
{
    switch (t) {
    case FeatureType::pos: return vocab.pos.size();
    case FeatureType::shape: return vocab.shapes.size();
    case FeatureType::gazetteer: return 3;
    case FeatureType::dep: return vocab.deps.size();
    }
    return 0;
}

struct FeatureSegment
{
    FeatureType type;
    std::size_t dim = 0;
    std::size_t hot = 0; ///< index of the single 1 within the segment
};

struct FeatureVector
{
    std::vector<FeatureSegment> segments;
    std::vector<std::uint8_t> flat;
};

inline FeatureVector assemble_features(const Token& token, const Gazetteer& gaz, const Vocabulary& vocab,
                                       const FeatureConfig& config)
{
    FeatureVector fv;
    for (auto t : config.active()) {
        FeatureSegment seg{t, feature_dim(t, vocab), 0};
        switch (t) {
        case FeatureType::pos:
            if (!token.pos)
                throw Error("feature 'pos' is enabled but token '" + token.surface + "' has no POS column");
            seg.hot = vocab.pos.id_or(*token.pos, Vocabulary::oov);
            break;
        case FeatureType::shape:
            seg.hot = vocab.shapes.id_or(word_shape(token.surface), Vocabulary::oov);
            break;
        case FeatureType::gazetteer:
            seg.hot = static_cast<std::size_t>(gazetteer_lookup(token.surface, gaz));
            break;
        case FeatureType::dep:
            if (!token.dep_label)
                throw Error("feature 'dep' is enabled but token '" + token.surface +
                            "' has no dependency column");
            seg.hot = vocab.deps.id_or(*token.dep_label, Vocabulary::oov);
            break;
        }
        if (seg.hot >= seg.dim)
            throw Error("feature '" + to_string(t) + "' has an empty vocabulary");
        const std::size_t base = fv.flat.size();
        fv.flat.resize(base + seg.dim, 0);
        fv.flat[base + seg.hot] = 1;
        fv.segments.push_back(seg);
    }
    return fv;
}

} // namespace nerae

#endif // NERAE_FEATURES_HPP
