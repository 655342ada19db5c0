// nerae command-line entry point.

#include <algorithm>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include <nerae/checkpoint.hpp>
#include <nerae/config.hpp>
#include <nerae/diagnostics.hpp>
#include <nerae/experiment.hpp>

namespace {

using nerae::json;
namespace fs = std::filesystem;

struct Common
{
    std::string config_path;
    std::vector<std::string> overrides;
    std::string out_dir;
    bool quiet = false;

    json load() const
    {
        json cfg = nerae::load_config(config_path, overrides);
        if (!out_dir.empty())
            cfg["output"]["dir"] = out_dir;
        return cfg;
    }
};

void add_common(CLI::App* cmd, Common& c)
{
    cmd->add_option("--config", c.config_path, "JSON config file merged over the defaults");
    cmd->add_option("--set", c.overrides, "dotted override, e.g. training.lr0=0.01 (repeatable)");
    cmd->add_option("--out", c.out_dir, "output directory (overrides output.dir)");
    cmd->add_flag("-q,--quiet", c.quiet, "no per-epoch progress on stderr");
}

std::vector<std::string> split_list(const std::string& s)
{
    std::vector<std::string> out;
    std::stringstream in(s);
    std::string item;
    while (std::getline(in, item, ','))
        if (!item.empty())
            out.push_back(item);
    return out;
}

std::vector<double> parse_numbers(const std::string& s, const char* what)
{
    std::vector<double> out;
    for (const auto& item : split_list(s)) {
        try {
            std::size_t used = 0;
            out.push_back(std::stod(item, &used));
            if (used != item.size())
                throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw nerae::ConfigError(std::string(what) + ": '" + item + "' is not a number");
        }
    }
    return out;
}

void print_summary(const nerae::RunSummary& rs)
{
    std::cout << std::fixed;
    for (const auto& s : rs.seeds)
        std::cout << "seed " << s.seed << ": best epoch " << s.best_epoch << ", dev F1 " << std::setprecision(2)
                  << 100.0 * s.dev_f1 << ", test F1 " << 100.0 * s.test.f1() << '\n';
    std::cout << "test F1 mean " << std::setprecision(2) << 100.0 * rs.test_f1.mean << " std "
              << 100.0 * rs.test_f1.stddev << " over " << rs.test_f1.n << " seed(s)\n";
}

// ------------------------------------------------------------ checkpoints

template <typename F>
auto with_checkpoint(const std::string& path, F&& f)
{
    if (nerae::checkpoint_scalar_bytes(path) == 8)
        return f(nerae::load_checkpoint<double>(path));
    return f(nerae::load_checkpoint<float>(path));
}

/// Compare the checkpoint's vocabulary hashes with an expected set, e.g. the
/// vocab.json written next to it during training.
void check_vocab(const nerae::Vocabulary& v, const std::string& expected_path)
{
    std::ifstream in(expected_path);
    if (!in)
        throw nerae::Error("cannot open vocabulary hash file '" + expected_path + "'");
    const json expected = json::parse(in);
    const auto actual = nerae::vocab_hashes(v);
    for (auto it = expected.begin(); it != expected.end(); ++it) {
        auto a = actual.find(it.key());
        const std::string want = it.value().get<std::string>();
        if (a == actual.end())
            throw nerae::Error("vocabulary mismatch: checkpoint has no section '" + it.key() + "'");
        if (a->second != want)
            throw nerae::Error("vocabulary mismatch in section '" + it.key() + "': checkpoint hash " + a->second +
                               ", expected " + want);
    }
}

template <typename T>
nerae::Model<T> model_from(const nerae::Checkpoint<T>& ck)
{
    return nerae::Model<T>(nerae::model_config(ck.config), ck.vocab, ck.gazetteer, ck.params);
}

/// Label every sentence of a raw CoNLL file. Each output line is the input
/// line plus the predicted label; -DOCSTART- lines and blank lines pass
/// through unchanged.
template <typename T>
std::string predict_file(nerae::Model<T>& model, const std::vector<std::string>& columns, std::istream& in)
{
    std::vector<std::string> no_label = columns;
    no_label.erase(std::remove(no_label.begin(), no_label.end(), "ner"), no_label.end());

    std::ostringstream out;
    std::vector<std::string> block;
    std::size_t lineno = 0, block_start = 0;
    auto flush = [&] {
        if (block.empty())
            return;
        const auto fields = nerae::split_ws(block.front()).size();
        nerae::ReaderOptions opts;
        if (fields == columns.size())
            opts.columns = columns;
        else if (fields == no_label.size())
            opts.columns = no_label;
        else
            throw nerae::ParseError("expected " + std::to_string(columns.size()) + " or " +
                                        std::to_string(no_label.size()) + " columns, found " + std::to_string(fields),
                                    block_start);
        std::string text;
        for (const auto& l : block)
            text += l + "\n";
        std::vector<nerae::SentenceRecord> sents;
        try {
            sents = nerae::parse_conll(text, opts);
        } catch (const nerae::ParseError& e) {
            throw nerae::ParseError(std::string(e.what()).substr(std::string(e.what()).find(": ") + 2),
                                    block_start + e.line() - 1);
        }
        auto sentence = sents.at(0);
        for (auto& t : sentence.tokens)
            t.gold_label.clear();
        const auto labels = model.predict(sentence);
        for (std::size_t i = 0; i < block.size(); ++i)
            out << block[i] << ' ' << labels[i] << '\n';
        block.clear();
    };
    std::string line;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        const auto body = nerae::trim(line);
        if (body.empty()) {
            flush();
            out << line << '\n';
            continue;
        }
        if (body.starts_with("-DOCSTART-")) {
            flush();
            out << line << '\n';
            continue;
        }
        if (block.empty())
            block_start = lineno;
        block.push_back(line);
    }
    flush();
    return out.str();
}

json small_manifest(const std::string& command, const std::map<std::string, std::string>& files, const json& extra)
{
    json files_j = json::object();
    for (const auto& [name, path] : files)
        files_j[path] = nerae::file_hash(path);
    json m{{"command", command}, {"data", files_j}};
    m.update(extra);
    return m;
}

// ---------------------------------------------------------------- commands

int cmd_train(const Common& c)
{
    const json cfg = c.load();
    nerae::Log log(c.quiet ? nullptr : &std::cerr);
    const auto data = nerae::load_data(cfg);
    const fs::path dir = cfg.at("output").at("dir").get<std::string>();
    const auto rs = nerae::run_config(cfg, data, dir, &log, "train");
    print_summary(rs);
    std::cout << "wrote " << dir.string() << '\n';
    return 0;
}

int cmd_predict(const std::string& checkpoint, const std::string& input, const std::string& output,
                const std::string& expect_vocab)
{
    std::string vocab_file = expect_vocab;
    if (vocab_file.empty()) {
        const auto sibling = fs::path(checkpoint).parent_path() / "vocab.json";
        if (fs::exists(sibling))
            vocab_file = sibling.string();
    }
    const std::string text = with_checkpoint(checkpoint, [&](auto ck) {
        if (!vocab_file.empty())
            check_vocab(ck.vocab, vocab_file);
        auto model = model_from(ck);
        std::ifstream in(input);
        if (!in)
            throw nerae::Error("cannot open input '" + input + "'");
        return predict_file(model, nerae::reader_options(ck.config).columns, in);
    });
    if (output.empty() || output == "-") {
        std::cout << text;
        return 0;
    }
    nerae::write_text(output, text);
    nerae::write_json(output + ".manifest.json",
                      small_manifest("predict", {{"checkpoint", checkpoint}, {"input", input}}, json::object()));
    return 0;
}

int cmd_evaluate(const std::string& input, const std::string& checkpoint, const std::string& output)
{
    nerae::SpanReport report;
    if (checkpoint.empty()) {
        std::ifstream in(input);
        if (!in)
            throw nerae::Error("cannot open input '" + input + "'");
        const auto pairs = nerae::read_label_pairs(in);
        report = nerae::span_f1(pairs.gold, pairs.pred);
    } else {
        report = with_checkpoint(checkpoint, [&](auto ck) {
            auto model = model_from(ck);
            const auto data = nerae::load_corpus(input, nerae::reader_options(ck.config),
                                                 ck.config.at("corpus").at("scheme").template get<std::string>());
            std::vector<std::vector<std::string>> gold, pred;
            for (const auto& s : data) {
                gold.push_back(s.labels());
                auto unlabelled = s;
                for (auto& t : unlabelled.tokens)
                    t.gold_label.clear();
                pred.push_back(model.predict(unlabelled));
            }
            return nerae::span_f1(gold, pred);
        });
    }
    const json j = nerae::to_json(report);
    std::cout << j.dump(2) << '\n';
    if (!output.empty()) {
        nerae::write_json(output, j);
        std::map<std::string, std::string> files{{"input", input}};
        if (!checkpoint.empty())
            files["checkpoint"] = checkpoint;
        nerae::write_json(output + ".manifest.json", small_manifest("evaluate", files, json::object()));
    }
    return 0;
}

int print_table(const nerae::Table& t, const fs::path& dir)
{
    std::cout << nerae::format_table(t) << "wrote " << dir.string() << '\n';
    return 0;
}

int cmd_grad_check(const std::string& mode, double eps, double tolerance, const std::string& out)
{
    std::vector<nerae::FeatureMode> modes;
    if (mode == "all")
        modes = {nerae::FeatureMode::none, nerae::FeatureMode::input_only, nerae::FeatureMode::output_only,
                 nerae::FeatureMode::both};
    else
        modes = {nerae::feature_mode_from_string(mode)};
    bool ok = true;
    json report = json::array();
    for (auto m : modes) {
        const auto r = nerae::grad_check_joint_loss(m, eps);
        const bool pass = r.max_rel_error < tolerance;
        ok = ok && pass;
        std::cout << (pass ? "PASS " : "FAIL ") << nerae::to_string(m) << ": max relative error "
                  << std::scientific << std::setprecision(3) << r.max_rel_error << " over " << r.coordinates
                  << " coordinates in " << r.parameters << " parameters\n";
        report.push_back(json{{"feature_mode", nerae::to_string(m)},
                              {"max_rel_error", r.max_rel_error},
                              {"coordinates", r.coordinates},
                              {"pass", pass}});
    }
    if (!out.empty()) {
        fs::create_directories(out);
        nerae::write_json(fs::path(out) / "grad_check.json", report);
        nerae::write_json(fs::path(out) / "manifest.json",
                          json{{"command", "grad-check"}, {"eps", eps}, {"tolerance", tolerance}, {"seeds", {7}}});
    }
    return ok ? 0 : 1;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"BiLSTM-CNN-CRF named entity tagger with feature auto-encoders"};
    app.require_subcommand(1);

    Common c;

    auto* train = app.add_subcommand("train", "train every configured seed and score the test split");
    add_common(train, c);

    std::string checkpoint, input, output, expect_vocab;
    auto* predict = app.add_subcommand("predict", "append predicted labels to a CoNLL file");
    predict->add_option("--checkpoint", checkpoint, "checkpoint.bin from a training run")->required();
    predict->add_option("--input", input, "CoNLL file to label")->required();
    predict->add_option("--output", output, "output file (default stdout)");
    predict->add_option("--expect-vocab", expect_vocab, "vocab.json with the expected section hashes");

    auto* evaluate = app.add_subcommand("evaluate", "span-level precision / recall / F1");
    evaluate->add_option("--input", input, "file whose last two columns are gold and predicted labels, or a "
                                           "labelled corpus when --checkpoint is given")
        ->required();
    evaluate->add_option("--checkpoint", checkpoint, "tag --input with this model first");
    evaluate->add_option("--output", output, "also write the JSON report here");

    std::string plan = "-pos,-shape,-gazetteer,+dep";
    auto* ablate = app.add_subcommand("ablate", "one multi-seed run per feature delta");
    add_common(ablate, c);
    ablate->add_option("--plan", plan, "comma-separated deltas, e.g. --plan=-pos,+dep (empty: base only)");

    auto* io_study = app.add_subcommand("io-study", "features as input, output, both or neither");
    add_common(io_study, c);

    std::string fractions = "10,20,30,40,50,60,70,80,90,100";
    auto* curve = app.add_subcommand("learning-curve", "one multi-seed run per training-data percentage");
    add_common(curve, c);
    curve->add_option("--fractions", fractions, "comma-separated percentages in (0, 100]");

    std::string feature = "pos";
    std::string grid = "1e-8,1e-7,1e-6,1e-5,1e-4,1e-3,1e-2,1e-1,1,10";
    auto* sweep = app.add_subcommand("lambda-sweep", "vary one auto-encoder weight, others at 1");
    add_common(sweep, c);
    sweep->add_option("--feature", feature, "pos, shape, gazetteer or dep");
    sweep->add_option("--grid", grid, "comma-separated lambda values");

    std::string mode = "all";
    double eps = 1e-5, tolerance = 1e-4;
    std::string gc_out;
    auto* gc = app.add_subcommand("grad-check", "finite-difference check of the joint loss");
    gc->add_option("--mode", mode, "none, input_only, output_only, both or all");
    gc->add_option("--eps", eps, "central-difference step");
    gc->add_option("--tolerance", tolerance, "largest accepted relative error");
    gc->add_option("--out", gc_out, "directory for grad_check.json and manifest.json");

    CLI11_PARSE(app, argc, argv);

    try {
        if (train->parsed())
            return cmd_train(c);
        if (predict->parsed())
            return cmd_predict(checkpoint, input, output, expect_vocab);
        if (evaluate->parsed())
            return cmd_evaluate(input, checkpoint, output);
        if (gc->parsed())
            return cmd_grad_check(mode, eps, tolerance, gc_out);

        const json cfg = c.load();
        const fs::path dir = cfg.at("output").at("dir").get<std::string>();
        nerae::Log log(c.quiet ? nullptr : &std::cerr);
        if (ablate->parsed())
            return print_table(nerae::ablate(cfg, split_list(plan), dir, &log), dir);
        if (io_study->parsed())
            return print_table(nerae::io_study(cfg, dir, &log), dir);
        if (curve->parsed())
            return print_table(nerae::learning_curve(cfg, parse_numbers(fractions, "--fractions"), dir, &log), dir);
        if (sweep->parsed())
            return print_table(nerae::lambda_sweep(cfg, feature, parse_numbers(grid, "--grid"), dir, &log), dir);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
