#ifndef NERAE_EXPERIMENT_HPP
#define NERAE_EXPERIMENT_HPP

// Experiment harness: single and multi-seed runs, and the ablation,
// input/output, learning-curve and lambda-sweep studies built on them.
//
// Layout of a run directory:
//   manifest.json        config hash, seeds, data file hashes
//   config.json          the fully resolved configuration
//   summary.json         mean / std / variance of dev and test F1 over seeds
//   seed_<s>/history.jsonl, metrics.json, vocab.json, predictions.txt,
//            checkpoint.bin
// A study directory holds one run directory per row plus table.txt and
// table.json.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <future>
#include <iomanip>
#include <iostream>
#include <mutex>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "checkpoint.hpp"
#include "config.hpp"
#include "corpus.hpp"
#include "embeddings.hpp"
#include "eval.hpp"
#include "features.hpp"
#include "model.hpp"
#include "training.hpp"

namespace nerae {

namespace fs = std::filesystem;

/// Corpus splits and resources shared by every seed of a run.
struct DataBundle
{
    std::vector<SentenceRecord> train, dev, test;
    PretrainedVectors pretrained;
    Gazetteer gazetteer;
    std::map<std::string, std::string> file_hashes; ///< path -> fnv1a hex
};

inline std::string file_hash(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error("cannot open '" + path + "'");
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return hex64(fnv1a(bytes));
}

inline DataBundle load_data(const json& cfg)
{
    validate_run_config(cfg);
    DataBundle d;
    const auto opts = reader_options(cfg);
    const auto scheme = cfg.at("corpus").at("scheme").get<std::string>();
    for (auto [split, dst] : {std::pair{"train", &d.train}, {"dev", &d.dev}, {"test", &d.test}}) {
        const auto path = cfg.at("corpus").at(split).get<std::string>();
        *dst = load_corpus(path, opts, scheme);
        d.file_hashes[path] = file_hash(path);
    }
    const auto mc = model_config(cfg);
    const auto emb = cfg.at("embeddings").at("path").get<std::string>();
    d.pretrained.dim = mc.word_dim;
    if (!emb.empty()) {
        d.pretrained = load_pretrained_file(emb, mc.word_dim);
        d.file_hashes[emb] = file_hash(emb);
    }
    const auto& gz = cfg.at("gazetteer");
    const auto person = gz.at("person").get<std::string>();
    const auto location = gz.at("location").get<std::string>();
    const auto freq = gz.at("frequency").get<std::string>();
    if (!person.empty() && !location.empty()) {
        d.gazetteer = load_gazetteer(person, location, freq, gz.at("threshold").get<std::uint64_t>());
        for (const auto& p : {person, location, freq})
            if (!p.empty())
                d.file_hashes[p] = file_hash(p);
    } else if (mc.features.gazetteer && mc.mode != FeatureMode::none) {
        throw ConfigError("gazetteer feature is enabled but gazetteer.person / gazetteer.location are not set");
    }
    return d;
}

/// Seed-deterministic subsample: shuffle sentence indices with `seed` and
/// keep the first ceil(fraction * n), in their original order.
inline std::vector<SentenceRecord> subsample(const std::vector<SentenceRecord>& data, double fraction,
                                             std::uint64_t seed)
{
    if (!(fraction > 0.0 && fraction <= 1.0))
        throw ConfigError("training fraction must lie in (0, 1]");
    if (fraction == 1.0)
        return data;
    std::vector<std::size_t> idx(data.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::mt19937_64 rng(seed);
    std::shuffle(idx.begin(), idx.end(), rng);
    const auto keep = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(data.size()) - 1e-9)));
    idx.resize(std::min(keep, idx.size()));
    std::sort(idx.begin(), idx.end());
    std::vector<SentenceRecord> out;
    for (auto i : idx)
        out.push_back(data[i]);
    return out;
}

inline json to_json(const EpochRecord& r)
{
    json j;
    j["epoch"] = r.epoch;
    j["lr"] = r.lr;
    j["loss"] = r.loss;
    j["nll"] = r.nll;
    j["ae"] = r.ae;
    j["grad_norm"] = r.grad_norm;
    j["dev_precision"] = r.dev_precision;
    j["dev_recall"] = r.dev_recall;
    j["dev_f1"] = r.dev_f1;
    if (r.train_f1)
        j["train_f1"] = *r.train_f1;
    j["best"] = r.best;
    return j;
}

inline json to_json(const SpanReport& r)
{
    auto counts = [](const SpanCounts& c) {
        return json{{"gold", c.gold},
                    {"predicted", c.predicted},
                    {"matched", c.matched},
                    {"precision", c.precision()},
                    {"recall", c.recall()},
                    {"f1", c.f1()}};
    };
    json j = counts(r.total);
    j["per_type"] = json::object();
    for (const auto& [t, c] : r.per_type)
        j["per_type"][t] = counts(c);
    return j;
}

inline json to_json(const Summary& s)
{
    return json{{"n", s.n}, {"mean", s.mean}, {"std", s.stddev}, {"variance", s.variance}};
}

inline void write_text(const fs::path& path, const std::string& text)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw Error("cannot write '" + path.string() + "'");
    out << text;
}

inline void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

/// Labelled sentences as "word gold pred" lines, the layout read by the
/// conlleval script and by `evaluate`.
inline std::string format_predictions(const std::vector<SentenceRecord>& data,
                                      const std::vector<std::vector<std::string>>& pred)
{
    std::ostringstream out;
    for (std::size_t k = 0; k < data.size(); ++k) {
        for (std::size_t i = 0; i < data[k].size(); ++i)
            out << data[k].tokens[i].surface << ' ' << data[k].tokens[i].gold_label << ' ' << pred[k][i] << '\n';
        out << '\n';
    }
    return out.str();
}

struct SeedResult
{
    std::uint64_t seed = 0;
    std::size_t best_epoch = 0;
    double dev_f1 = 0.0;
    SpanReport test;
    std::vector<EpochRecord> history;
};

/// Progress sink shared by concurrently running seeds.
class Log
{
public:
    explicit Log(std::ostream* out = nullptr) : out_(out) {}
    void line(const std::string& s)
    {
        if (!out_)
            return;
        std::lock_guard lock(mu_);
        *out_ << s << '\n' << std::flush;
    }

private:
    std::ostream* out_;
    std::mutex mu_;
};

/// Train one seed, restore its best-dev parameters, score the test split
/// once, and (if `dir` is non-empty) write the per-seed artifacts.
template <typename T>
SeedResult run_seed(const json& cfg, const DataBundle& data, std::uint64_t seed, const fs::path& dir, Log* log = nullptr)
{
    const auto mc = model_config(cfg);
    const auto tc = train_config(cfg);
    const double fraction = cfg.at("training").at("train_fraction").get<double>();
    const auto train_records = subsample(data.train, fraction, seed);

    Vocabulary vocab = build_vocab(train_records, data.pretrained.words);
    Model<T> model(mc, std::move(vocab), data.gazetteer, data.pretrained, seed);
    auto encode_all = [&](const std::vector<SentenceRecord>& xs) {
        std::vector<EncodedSentence<T>> out;
        out.reserve(xs.size());
        for (const auto& s : xs)
            out.push_back(model.encode(s));
        return out;
    };
    const auto train_set = encode_all(train_records);
    const auto dev_set = encode_all(data.dev);
    const auto test_set = encode_all(data.test);

    std::ofstream history;
    if (!dir.empty()) {
        fs::create_directories(dir);
        history.open(dir / "history.jsonl", std::ios::binary);
    }
    auto result = train<T>(model, train_set, dev_set, tc, seed, [&](const EpochRecord& r) {
        if (history)
            history << to_json(r).dump() << '\n';
        if (log) {
            std::ostringstream s;
            s << "seed " << seed << " epoch " << r.epoch << " lr " << r.lr << " loss " << r.loss << " dev_f1 "
              << r.dev_f1 << (r.best ? " *" : "");
            log->line(s.str());
        }
    });
    restore(model, result.best_values);

    SeedResult out;
    out.seed = seed;
    out.best_epoch = result.best_epoch;
    out.dev_f1 = result.best_dev_f1;
    out.history = result.history;
    const auto pred = predict_labels(model, test_set);
    out.test = span_f1(gold_labels(model, test_set), pred);

    if (!dir.empty()) {
        json metrics;
        metrics["seed"] = seed;
        metrics["best_epoch"] = out.best_epoch;
        metrics["dev_f1"] = out.dev_f1;
        metrics["test"] = to_json(out.test);
        metrics["train_sentences"] = train_records.size();
        write_json(dir / "metrics.json", metrics);
        write_json(dir / "vocab.json", vocab_hashes(model.vocab()));
        write_text(dir / "predictions.txt", format_predictions(data.test, pred));
        save_checkpoint(dir / "checkpoint.bin",
                        Checkpoint<T>{cfg, model.vocab(), model.gazetteer(), model.params()});
    }
    return out;
}

struct RunSummary
{
    std::vector<SeedResult> seeds;
    Summary dev_f1;
    Summary test_f1;

    std::vector<double> test_scores() const
    {
        std::vector<double> xs;
        for (const auto& s : seeds)
            xs.push_back(s.test.f1());
        return xs;
    }
};

inline json manifest(const json& cfg, const DataBundle& data, const std::string& command)
{
    return json{{"command", command},
                {"config_hash", config_hash(cfg)},
                {"seeds", cfg.at("training").at("seeds")},
                {"data", data.file_hashes}};
}

/// All seeds of one configuration. Seeds run concurrently when
/// training.jobs > 1; each seed is internally deterministic.
inline RunSummary run_config(const json& cfg, const DataBundle& data, const fs::path& dir, Log* log = nullptr,
                             const std::string& command = "train")
{
    const auto tc = train_config(cfg);
    const auto jobs = std::max<std::size_t>(1, cfg.at("training").at("jobs").get<std::size_t>());
    const bool f64 = cfg.at("training").at("precision").get<std::string>() == "float64";
    if (!dir.empty()) {
        fs::create_directories(dir);
        write_json(dir / "config.json", cfg);
        write_json(dir / "manifest.json", manifest(cfg, data, command));
    }
    auto one = [&](std::uint64_t seed) {
        const fs::path sub = dir.empty() ? fs::path() : dir / ("seed_" + std::to_string(seed));
        return f64 ? run_seed<double>(cfg, data, seed, sub, log) : run_seed<float>(cfg, data, seed, sub, log);
    };

    RunSummary rs;
    if (jobs == 1) {
        for (auto s : tc.seeds)
            rs.seeds.push_back(one(s));
    } else {
        for (std::size_t start = 0; start < tc.seeds.size(); start += jobs) {
            std::vector<std::future<SeedResult>> pending;
            for (std::size_t k = start; k < std::min(start + jobs, tc.seeds.size()); ++k)
                pending.push_back(std::async(std::launch::async, one, tc.seeds[k]));
            for (auto& f : pending)
                rs.seeds.push_back(f.get());
        }
    }
    std::vector<double> dev;
    for (const auto& s : rs.seeds)
        dev.push_back(s.dev_f1);
    rs.dev_f1 = summarize(dev);
    rs.test_f1 = summarize(rs.test_scores());

    if (!dir.empty()) {
        json j;
        j["dev_f1"] = to_json(rs.dev_f1);
        j["test_f1"] = to_json(rs.test_f1);
        j["seeds"] = json::array();
        for (const auto& s : rs.seeds)
            j["seeds"].push_back(json{{"seed", s.seed},
                                      {"best_epoch", s.best_epoch},
                                      {"dev_f1", s.dev_f1},
                                      {"test_precision", s.test.precision()},
                                      {"test_recall", s.test.recall()},
                                      {"test_f1", s.test.f1()}});
        write_json(dir / "summary.json", j);
    }
    return rs;
}

// ---------------------------------------------------------------- studies

struct TableRow
{
    std::string name;
    json setting; ///< what distinguishes this row, e.g. {"feature_mode": "both"}
    RunSummary run;
    std::optional<TTestResult> vs_reference;
};

struct Table
{
    std::string title;
    std::string reference; ///< row the t-tests compare against, may be empty
    std::vector<TableRow> rows;
};

inline json to_json(const Table& t)
{
    json j;
    j["title"] = t.title;
    j["reference"] = t.reference.empty() ? json(nullptr) : json(t.reference);
    j["rows"] = json::array();
    for (const auto& r : t.rows) {
        json row{{"name", r.name},
                 {"setting", r.setting},
                 {"dev_f1", to_json(r.run.dev_f1)},
                 {"test_f1", to_json(r.run.test_f1)},
                 {"test_scores", r.run.test_scores()}};
        if (r.vs_reference)
            row["t_test"] = json{{"t", std::isfinite(r.vs_reference->t) ? json(r.vs_reference->t)
                                                                         : json(r.vs_reference->t > 0 ? "inf" : "-inf")},
                                 {"df", r.vs_reference->df},
                                 {"p_value", r.vs_reference->p_value},
                                 {"significant", r.vs_reference->significant}};
        else
            row["t_test"] = nullptr;
        j["rows"].push_back(row);
    }
    return j;
}

inline std::string format_table(const Table& t)
{
    std::ostringstream out;
    out << t.title << '\n';
    out << std::left << std::setw(22) << "variant" << std::right << std::setw(10) << "dev F1" << std::setw(10)
        << "test F1" << std::setw(9) << "std" << std::setw(11) << "variance" << std::setw(9) << "t" << "  sig\n";
    out << std::fixed;
    for (const auto& r : t.rows) {
        out << std::left << std::setw(22) << r.name << std::right << std::setprecision(2) << std::setw(10)
            << 100.0 * r.run.dev_f1.mean << std::setw(10) << 100.0 * r.run.test_f1.mean << std::setw(9)
            << 100.0 * r.run.test_f1.stddev << std::setprecision(4) << std::setw(11)
            << 1e4 * r.run.test_f1.variance;
        if (r.vs_reference)
            out << std::setprecision(2) << std::setw(9) << r.vs_reference->t << "  "
                << (r.vs_reference->significant ? "*" : "");
        else
            out << std::setw(9) << "-";
        out << '\n';
    }
    return out.str();
}

/// Attach t-tests against the reference row (when there are at least two
/// seeds) and write table.txt / table.json.
inline void finish_table(Table& t, const fs::path& dir)
{
    const TableRow* ref = nullptr;
    for (const auto& r : t.rows)
        if (r.name == t.reference)
            ref = &r;
    if (ref && ref->run.seeds.size() >= 2)
        for (auto& r : t.rows)
            if (&r != ref && r.run.seeds.size() >= 2)
                r.vs_reference = two_sample_t_test(r.run.test_scores(), ref->run.test_scores());
    if (!dir.empty()) {
        fs::create_directories(dir);
        write_text(dir / "table.txt", format_table(t));
        write_json(dir / "table.json", to_json(t));
    }
}

/// A feature delta such as "-pos" or "+dep".
struct FeatureDelta
{
    FeatureType type;
    bool enable;
    std::string name() const { return std::string(enable ? "+" : "-") + to_string(type); }
};

inline std::vector<FeatureDelta> parse_plan(const std::vector<std::string>& plan)
{
    std::vector<FeatureDelta> out;
    for (const auto& p : plan) {
        if (p.size() < 2 || (p[0] != '+' && p[0] != '-'))
            throw ConfigError("ablation step '" + p + "' must look like -pos or +dep");
        out.push_back({feature_type_from_string(p.substr(1)), p[0] == '+'});
    }
    return out;
}

inline const std::vector<std::string> default_ablation_plan{"-pos", "-shape", "-gazetteer", "+dep"};

/// Base row plus one multi-seed run per feature delta.
inline Table ablate(const json& cfg, const std::vector<std::string>& plan, const fs::path& dir, Log* log = nullptr)
{
    const auto deltas = parse_plan(plan);
    std::vector<json> variants;
    for (const auto& d : deltas) {
        json v = cfg;
        v["features"][to_string(d.type)] = d.enable;
        validate_run_config(v);
        variants.push_back(std::move(v));
    }
    const DataBundle data = load_data(cfg);
    Table t{"feature ablation", "base", {}};
    t.rows.push_back({"base", json::object(), run_config(cfg, data, dir.empty() ? dir : dir / "base", log, "ablate"), {}});
    for (std::size_t k = 0; k < deltas.size(); ++k) {
        const auto name = deltas[k].name();
        t.rows.push_back({name, json{{"feature", to_string(deltas[k].type)}, {"enabled", deltas[k].enable}},
                          run_config(variants[k], data, dir.empty() ? dir : dir / name, log, "ablate"), {}});
    }
    finish_table(t, dir);
    return t;
}

/// One multi-seed run per feature mode.
inline Table io_study(const json& cfg, const fs::path& dir, Log* log = nullptr)
{
    const DataBundle data = load_data(cfg);
    Table t{"features as input / output", "none", {}};
    for (auto m : {FeatureMode::none, FeatureMode::input_only, FeatureMode::output_only, FeatureMode::both}) {
        json v = cfg;
        v["model"]["feature_mode"] = to_string(m);
        validate_run_config(v);
        t.rows.push_back({to_string(m), json{{"feature_mode", to_string(m)}},
                          run_config(v, data, dir.empty() ? dir : dir / to_string(m), log, "io-study"), {}});
    }
    finish_table(t, dir);
    return t;
}

inline std::vector<double> default_fractions()
{
    std::vector<double> f;
    for (int p = 10; p <= 100; p += 10)
        f.push_back(p);
    return f;
}

/// One multi-seed run per training fraction, given in percent.
inline Table learning_curve(const json& cfg, const std::vector<double>& percents, const fs::path& dir,
                            Log* log = nullptr)
{
    if (percents.empty())
        throw ConfigError("learning curve needs at least one fraction");
    for (double p : percents)
        if (!(p > 0.0 && p <= 100.0))
            throw ConfigError("learning-curve fraction " + std::to_string(p) + " must lie in (0, 100]");
    const DataBundle data = load_data(cfg);
    Table t{"training data fraction", "", {}};
    for (double p : percents) {
        json v = cfg;
        v["training"]["train_fraction"] = p / 100.0;
        std::ostringstream pct;
        pct << p;
        t.rows.push_back({pct.str() + "%", json{{"percent", p}},
                          run_config(v, data, dir.empty() ? dir : dir / ("fraction_" + pct.str()), log, "learning-curve"),
                          {}});
    }
    finish_table(t, dir);
    return t;
}

inline std::vector<double> default_lambda_grid()
{
    std::vector<double> g;
    for (int e = -8; e <= 1; ++e)
        g.push_back(std::pow(10.0, e));
    return g;
}

/// One multi-seed run per λ value for `feature`, all other λ held at 1.
inline Table lambda_sweep(const json& cfg, const std::string& feature, const std::vector<double>& grid,
                          const fs::path& dir, Log* log = nullptr)
{
    const FeatureType ft = feature_type_from_string(feature);
    const auto mc = model_config(cfg);
    if (!mc.features.enabled(ft))
        throw ConfigError("lambda sweep: feature '" + feature + "' is not enabled");
    if (!features_as_output(mc.mode))
        throw ConfigError("lambda sweep: feature_mode '" + to_string(mc.mode) + "' has no auto-encoder loss");
    if (grid.empty())
        throw ConfigError("lambda sweep needs at least one grid value");
    for (double l : grid)
        if (!(l >= 0.0) || !std::isfinite(l))
            throw ConfigError("lambda values must be finite and >= 0");
    const DataBundle data = load_data(cfg);
    Table t{"lambda sweep for " + feature, "", {}};
    for (double l : grid) {
        json v = cfg;
        for (auto other : all_feature_types)
            v["model"]["lambda"][to_string(other)] = 1.0;
        v["model"]["lambda"][feature] = l;
        std::ostringstream name;
        name << "lambda=" << l;
        if (l == 1.0)
            t.reference = name.str();
        t.rows.push_back({name.str(), json{{"feature", feature}, {"lambda", l}},
                          run_config(v, data, dir.empty() ? dir : dir / name.str(), log, "lambda-sweep"), {}});
    }
    finish_table(t, dir);
    return t;
}

} // namespace nerae

#endif // NERAE_EXPERIMENT_HPP
