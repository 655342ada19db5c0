#ifndef NERAE_CONFIG_HPP
#define NERAE_CONFIG_HPP

// Run configuration as a JSON tree. A config file is merged over the
// defaults below, then `--set dotted.key=value` overrides are applied. Keys
// that do not exist in the defaults are rejected.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "corpus.hpp"
#include "error.hpp"
#include "features.hpp"
#include "model.hpp"
#include "text.hpp"
#include "training.hpp"

namespace nerae {

using json = nlohmann::json;

inline json default_config()
{
    return json::parse(R"({
  "corpus": {
    "train": "",
    "dev": "",
    "test": "",
    "columns": ["word", "pos", "chunk", "ner"],
    "scheme": "auto",
    "keep_docstart": false
  },
  "embeddings": {
    "path": ""
  },
  "gazetteer": {
    "person": "",
    "location": "",
    "frequency": "",
    "threshold": 10000
  },
  "features": {
    "pos": true,
    "shape": true,
    "gazetteer": true,
    "dep": false
  },
  "model": {
    "word_dim": 300,
    "char_dim": 30,
    "char_filters": 30,
    "char_window": 3,
    "lstm_hidden": 200,
    "dropout": 0.5,
    "feature_mode": "both",
    "lambda": {"pos": 1.0, "shape": 1.0, "gazetteer": 1.0, "dep": 1.0},
    "ae_bias": true,
    "emission_bias": true
  },
  "training": {
    "lr0": 0.015,
    "momentum": 0.9,
    "decay_factor": 0.8,
    "decay_every": 5,
    "clip_norm": 5.0,
    "epochs": 40,
    "batch_size": 10,
    "seeds": [1, 2, 3, 4, 5],
    "eval_train": false,
    "train_fraction": 1.0,
    "precision": "float32",
    "jobs": 1
  },
  "output": {
    "dir": "runs/default"
  }
})");
}

namespace detail {

inline void check_keys(const json& given, const json& schema, const std::string& path)
{
    if (!given.is_object() || !schema.is_object())
        return;
    for (auto it = given.begin(); it != given.end(); ++it) {
        const std::string key = path.empty() ? it.key() : path + "." + it.key();
        if (!schema.contains(it.key()))
            throw ConfigError("unknown config key '" + key + "'");
        check_keys(it.value(), schema.at(it.key()), key);
    }
}

inline bool is_file(const std::string& p)
{
    std::error_code ec;
    return std::filesystem::is_regular_file(p, ec);
}

} // namespace detail

/// Apply `a.b.c=value`. The value is parsed as JSON when possible, otherwise
/// taken as a string.
inline void apply_override(json& cfg, const std::string& assignment)
{
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0)
        throw ConfigError("override '" + assignment + "' is not of the form key=value");
    const std::string key = assignment.substr(0, eq);
    const std::string raw = assignment.substr(eq + 1);
    json value = json::parse(raw, nullptr, false);
    if (value.is_discarded())
        value = raw;

    json* node = &cfg;
    std::size_t start = 0;
    while (true) {
        const auto dot = key.find('.', start);
        const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
        if (!node->is_object() || !node->contains(part))
            throw ConfigError("unknown config key '" + key + "'");
        node = &(*node)[part];
        if (dot == std::string::npos)
            break;
        start = dot + 1;
    }
    *node = std::move(value);
}

/// Defaults, merged with the file at `path` (if non-empty), then overrides.
inline json load_config(const std::string& path, const std::vector<std::string>& overrides = {})
{
    json cfg = default_config();
    if (!path.empty()) {
        std::ifstream in(path);
        if (!in)
            throw ConfigError("cannot open config file '" + path + "'");
        json file;
        try {
            file = json::parse(in);
        } catch (const json::parse_error& e) {
            throw ConfigError("config file '" + path + "': " + e.what());
        }
        detail::check_keys(file, cfg, "");
        cfg.merge_patch(file);
    }
    for (const auto& o : overrides)
        apply_override(cfg, o);
    return cfg;
}

inline std::string config_hash(const json& cfg) { return hex64(fnv1a(cfg.dump())); }

// ------------------------------------------------------ typed views

inline ReaderOptions reader_options(const json& cfg)
{
    ReaderOptions o;
    o.columns = cfg.at("corpus").at("columns").get<std::vector<std::string>>();
    o.keep_docstart = cfg.at("corpus").at("keep_docstart").get<bool>();
    return o;
}

inline FeatureConfig feature_config(const json& cfg)
{
    const auto& f = cfg.at("features");
    FeatureConfig fc;
    fc.pos = f.at("pos").get<bool>();
    fc.shape = f.at("shape").get<bool>();
    fc.gazetteer = f.at("gazetteer").get<bool>();
    fc.dep = f.at("dep").get<bool>();
    return fc;
}

inline ModelConfig model_config(const json& cfg)
{
    try {
        const auto& m = cfg.at("model");
        ModelConfig mc;
        mc.word_dim = m.at("word_dim").get<std::size_t>();
        mc.char_dim = m.at("char_dim").get<std::size_t>();
        mc.char_filters = m.at("char_filters").get<std::size_t>();
        mc.char_window = m.at("char_window").get<std::size_t>();
        mc.lstm_hidden = m.at("lstm_hidden").get<std::size_t>();
        mc.dropout = m.at("dropout").get<double>();
        mc.mode = feature_mode_from_string(m.at("feature_mode").get<std::string>());
        mc.features = feature_config(cfg);
        mc.lambda.clear();
        for (auto it = m.at("lambda").begin(); it != m.at("lambda").end(); ++it)
            mc.lambda[feature_type_from_string(it.key())] = it.value().get<double>();
        mc.ae_bias = m.at("ae_bias").get<bool>();
        mc.emission_bias = m.at("emission_bias").get<bool>();
        mc.validate();
        return mc;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("model config: ") + e.what());
    }
}

inline TrainConfig train_config(const json& cfg)
{
    try {
        const auto& t = cfg.at("training");
        TrainConfig tc;
        tc.lr0 = t.at("lr0").get<double>();
        tc.momentum = t.at("momentum").get<double>();
        tc.decay_factor = t.at("decay_factor").get<double>();
        tc.decay_every = t.at("decay_every").get<std::size_t>();
        tc.clip_norm = t.at("clip_norm").get<double>();
        tc.epochs = t.at("epochs").get<std::size_t>();
        tc.batch_size = t.at("batch_size").get<std::size_t>();
        tc.seeds = t.at("seeds").get<std::vector<std::uint64_t>>();
        tc.eval_train = t.at("eval_train").get<bool>();
        tc.validate();
        return tc;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("training config: ") + e.what());
    }
}

/// Full validation of a run configuration, before any work starts.
inline void validate_run_config(const json& cfg, bool need_splits = true)
{
    model_config(cfg);
    train_config(cfg);
    const auto cols = reader_options(cfg).columns;
    auto has = [&](const char* c) { return std::find(cols.begin(), cols.end(), c) != cols.end(); };
    if (!has("word"))
        throw ConfigError("corpus.columns must include \"word\"");
    const auto fc = feature_config(cfg);
    const auto mode = feature_mode_from_string(cfg.at("model").at("feature_mode").get<std::string>());
    if (mode != FeatureMode::none) {
        if (fc.pos && !has("pos"))
            throw ConfigError("feature 'pos' is enabled but corpus.columns has no \"pos\" column");
        if (fc.dep && !has("dep"))
            throw ConfigError("feature 'dep' is enabled but corpus.columns has no \"dep\" column");
    }
    const double frac = cfg.at("training").at("train_fraction").get<double>();
    if (!(frac > 0.0 && frac <= 1.0))
        throw ConfigError("training.train_fraction must lie in (0, 1]");
    const auto prec = cfg.at("training").at("precision").get<std::string>();
    if (prec != "float32" && prec != "float64")
        throw ConfigError("training.precision must be float32 or float64");
    if (!need_splits)
        return;
    if (!has("ner"))
        throw ConfigError("corpus.columns must include \"ner\" for training");
    for (const char* split : {"train", "dev", "test"}) {
        const auto p = cfg.at("corpus").at(split).get<std::string>();
        if (p.empty())
            throw ConfigError(std::string("corpus.") + split + " is not set");
        if (!detail::is_file(p))
            throw ConfigError(std::string("corpus.") + split + " file '" + p + "' is missing or not a regular file");
    }
    for (const char* key : {"person", "location", "frequency"}) {
        const auto p = cfg.at("gazetteer").at(key).get<std::string>();
        if (!p.empty() && !detail::is_file(p))
            throw ConfigError(std::string("gazetteer.") + key + " file '" + p + "' is missing or not a regular file");
    }
    const auto emb = cfg.at("embeddings").at("path").get<std::string>();
    if (!emb.empty() && !detail::is_file(emb))
        throw ConfigError("embeddings.path file '" + emb + "' is missing or not a regular file");
}

} // namespace nerae

#endif // NERAE_CONFIG_HPP
