#ifndef NERAE_CORPUS_HPP
#define NERAE_CORPUS_HPP

// CoNLL column files, tagging-scheme normalisation and vocabularies.

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "error.hpp"
#include "tagging.hpp"
#include "text.hpp"

namespace nerae {

struct Token
{
    std::string surface;
    std::optional<std::string> pos;
    std::optional<std::string> chunk;
    std::optional<std::string> dep_label;
    std::string gold_label; ///< empty when the input carries no label column

    bool operator==(const Token&) const = default;
};

struct SentenceRecord
{
    std::vector<Token> tokens;

    std::size_t size() const noexcept { return tokens.size(); }
    std::vector<std::string> labels() const
    {
        std::vector<std::string> out;
        out.reserve(tokens.size());
        for (const auto& t : tokens)
            out.push_back(t.gold_label);
        return out;
    }
    bool operator==(const SentenceRecord&) const = default;
};

/// Column layout of a CoNLL file. Recognised names: word, pos, chunk, ner,
/// dep. Any other name marks a column that is read and ignored.
struct ReaderOptions
{
    std::vector<std::string> columns{"word", "pos", "chunk", "ner"};
    bool keep_docstart = false;
};

/// Parse whitespace-separated CoNLL columns. Sentences are separated by blank
/// lines; `-DOCSTART-` lines are dropped unless requested. Column values are
/// kept verbatim.
inline std::vector<SentenceRecord> parse_conll(std::istream& in, const ReaderOptions& opts = {})
{
    const auto& cols = opts.columns;
    if (std::find(cols.begin(), cols.end(), "word") == cols.end())
        throw ConfigError("corpus.columns must contain \"word\"");

    std::vector<SentenceRecord> out;
    SentenceRecord current;
    auto flush = [&] {
        if (!current.tokens.empty())
            out.push_back(std::move(current));
        current = {};
    };

    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto body = trim(line);
        if (body.empty()) {
            flush();
            continue;
        }
        if (!opts.keep_docstart && body.starts_with("-DOCSTART-"))
            continue;
        const auto fields = split_ws(body);
        if (fields.size() != cols.size())
            throw ParseError("expected " + std::to_string(cols.size()) + " columns, found " +
                                 std::to_string(fields.size()),
                             lineno);
        Token tok;
        for (std::size_t c = 0; c < cols.size(); ++c) {
            const auto& name = cols[c];
            if (name == "word")
                tok.surface = fields[c];
            else if (name == "pos")
                tok.pos = fields[c];
            else if (name == "chunk")
                tok.chunk = fields[c];
            else if (name == "dep")
                tok.dep_label = fields[c];
            else if (name == "ner")
                tok.gold_label = fields[c];
        }
        current.tokens.push_back(std::move(tok));
    }
    flush();
    return out;
}

inline std::vector<SentenceRecord> parse_conll(const std::string& text, const ReaderOptions& opts = {})
{
    std::istringstream in(text);
    return parse_conll(in, opts);
}

/// Write sentences in the given layout. Absent optional columns print as "_".
inline std::string serialize_conll(const std::vector<SentenceRecord>& sentences, const ReaderOptions& opts = {})
{
    std::string out;
    for (const auto& s : sentences) {
        for (const auto& t : s.tokens) {
            for (std::size_t c = 0; c < opts.columns.size(); ++c) {
                const auto& name = opts.columns[c];
                if (c)
                    out += ' ';
                if (name == "word")
                    out += t.surface;
                else if (name == "pos")
                    out += t.pos.value_or("_");
                else if (name == "chunk")
                    out += t.chunk.value_or("_");
                else if (name == "dep")
                    out += t.dep_label.value_or("_");
                else if (name == "ner")
                    out += t.gold_label.empty() ? "O" : t.gold_label;
                else
                    out += '_';
            }
            out += '\n';
        }
        out += '\n';
    }
    return out;
}

/// Guess the scheme of a labelled corpus: any E-/S- label means IOBES; an
/// I- label that opens a span means IOB1; otherwise IOB2.
inline Scheme detect_scheme(const std::vector<SentenceRecord>& sentences)
{
    bool iob1 = false;
    for (const auto& s : sentences) {
        std::string prev_type;
        for (const auto& t : s.tokens) {
            auto tag = parse_tag(t.gold_label);
            if (!tag) {
                prev_type.clear();
                continue;
            }
            if (tag->prefix == 'E' || tag->prefix == 'S')
                return Scheme::iobes;
            if (tag->prefix == 'I' && tag->type != prev_type)
                iob1 = true;
            prev_type = tag->type;
        }
    }
    return iob1 ? Scheme::iob1 : Scheme::iob2;
}

/// Rewrite every gold label to IOBES. Errors name the sentence and index.
inline void convert_to_iobes(std::vector<SentenceRecord>& sentences, Scheme source)
{
    for (std::size_t k = 0; k < sentences.size(); ++k) {
        auto& s = sentences[k];
        if (s.tokens.empty() || s.tokens.front().gold_label.empty())
            continue;
        std::vector<std::string> labels;
        try {
            labels = to_iobes(s.labels(), source);
        } catch (const TagSequenceError& e) {
            throw TagSequenceError("sentence " + std::to_string(k) + ": " + e.what(), e.index());
        }
        for (std::size_t i = 0; i < labels.size(); ++i)
            s.tokens[i].gold_label = std::move(labels[i]);
    }
}

// ------------------------------------------------------------- vocabulary

/// Dense string <-> id map.
class IdMap
{
public:
    IdMap() = default;
    explicit IdMap(std::vector<std::string> items)
    {
        for (auto& s : items)
            add(std::move(s));
    }

    std::size_t add(std::string s)
    {
        auto it = index_.find(s);
        if (it != index_.end())
            return it->second;
        const std::size_t id = items_.size();
        index_.emplace(s, id);
        items_.push_back(std::move(s));
        return id;
    }

    std::optional<std::size_t> find(const std::string& s) const
    {
        auto it = index_.find(s);
        if (it == index_.end())
            return std::nullopt;
        return it->second;
    }

    /// Id of `s`, or `fallback` when absent.
    std::size_t id_or(const std::string& s, std::size_t fallback) const { return find(s).value_or(fallback); }

    const std::string& at(std::size_t id) const { return items_.at(id); }
    std::size_t size() const noexcept { return items_.size(); }
    const std::vector<std::string>& items() const noexcept { return items_; }

    std::uint64_t hash() const
    {
        std::uint64_t h = fnv1a("idmap");
        for (const auto& s : items_) {
            h = fnv1a(s, h);
            h = fnv1a("\n", h);
        }
        return h;
    }

    bool operator==(const IdMap& o) const { return items_ == o.items_; }

private:
    std::vector<std::string> items_;
    std::unordered_map<std::string, std::size_t> index_;
};

struct Vocabulary
{
    static constexpr std::size_t unk = 0;
    static constexpr std::size_t pad = 1;
    static constexpr std::size_t oov = 0; ///< OOV slot of the pos/shape/dep maps
    static constexpr std::size_t outside = 0; ///< id of the "O" label

    IdMap words;  ///< <unk>, <pad>, then sorted surfaces
    IdMap chars;  ///< <unk>, <pad>, then sorted code points
    IdMap pos;    ///< <oov>, then sorted tags
    IdMap shapes; ///< <oov>, then sorted shapes
    IdMap deps;   ///< <oov>, then sorted labels
    IdMap labels; ///< O, then sorted IOBES labels
    std::map<std::string, std::size_t> word_counts;

    /// Named sub-vocabularies in a fixed order (used for hashing and I/O).
    std::vector<std::pair<std::string, const IdMap*>> sections() const
    {
        return {{"words", &words}, {"chars", &chars}, {"pos", &pos},
                {"shapes", &shapes}, {"deps", &deps}, {"labels", &labels}};
    }
    std::vector<std::pair<std::string, IdMap*>> sections()
    {
        return {{"words", &words}, {"chars", &chars}, {"pos", &pos},
                {"shapes", &shapes}, {"deps", &deps}, {"labels", &labels}};
    }

    std::size_t word_id(const std::string& surface) const
    {
        if (auto id = words.find(surface))
            return *id;
        return words.id_or(fold_case(surface), unk);
    }

    std::size_t label_id(const std::string& label) const
    {
        auto id = labels.find(label);
        if (!id)
            throw Error("label '" + label + "' is not in the label vocabulary");
        return *id;
    }
};

/// Vocabulary over the training corpus plus the pretrained word list.
/// Every entity type seen in training contributes all four IOBES labels.
template <typename Words = std::vector<std::string>>
Vocabulary build_vocab(const std::vector<SentenceRecord>& train, const Words& pretrained_words = {})
{
    std::set<std::string> words(pretrained_words.begin(), pretrained_words.end());
    std::set<std::string> chars, pos, shapes, deps, types;
    Vocabulary v;
    for (const auto& s : train)
        for (const auto& t : s.tokens) {
            words.insert(t.surface);
            ++v.word_counts[t.surface];
            for (auto& ch : utf8_chars(t.surface))
                chars.insert(std::move(ch));
            shapes.insert(word_shape(t.surface));
            if (t.pos)
                pos.insert(*t.pos);
            if (t.dep_label)
                deps.insert(*t.dep_label);
            if (auto tag = parse_tag(t.gold_label); tag && tag->prefix != 'O')
                types.insert(tag->type);
        }

    v.words.add("<unk>");
    v.words.add("<pad>");
    for (const auto& w : words)
        v.words.add(w);
    v.chars.add("<unk>");
    v.chars.add("<pad>");
    for (const auto& c : chars)
        v.chars.add(c);
    v.pos.add("<oov>");
    for (const auto& p : pos)
        v.pos.add(p);
    v.shapes.add("<oov>");
    for (const auto& s : shapes)
        v.shapes.add(s);
    v.deps.add("<oov>");
    for (const auto& d : deps)
        v.deps.add(d);

    std::set<std::string> labels;
    for (const auto& ty : types)
        for (const char* p : {"B-", "I-", "E-", "S-"})
            labels.insert(p + ty);
    v.labels.add("O");
    for (const auto& l : labels)
        v.labels.add(l);
    return v;
}

inline std::vector<SentenceRecord> read_conll_file(const std::string& path, const ReaderOptions& opts)
{
    std::ifstream in(path);
    if (!in)
        throw Error("cannot open corpus file '" + path + "'");
    return parse_conll(in, opts);
}

/// Read a labelled corpus and normalise its labels to IOBES. `scheme` may be
/// "auto", "iob1", "iob2" or "iobes".
inline std::vector<SentenceRecord> load_corpus(const std::string& path, const ReaderOptions& opts,
                                               const std::string& scheme = "auto")
{
    auto sentences = read_conll_file(path, opts);
    const Scheme source = scheme == "auto" ? detect_scheme(sentences) : scheme_from_string(scheme);
    convert_to_iobes(sentences, source);
    return sentences;
}

} // namespace nerae

#endif // NERAE_CORPUS_HPP
