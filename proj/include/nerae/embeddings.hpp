#ifndef NERAE_EMBEDDINGS_HPP
#define NERAE_EMBEDDINGS_HPP

// Pretrained word vectors (GloVe text layout, optionally gzip-compressed)
// and uniform initialisation of embedding tables.

#include <charconv>
#include <cmath>
#include <cstdint>
#include <istream>
#include <random>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <zlib.h>

#include "corpus.hpp"
#include "error.hpp"
#include "tensor.hpp"
#include "text.hpp"

namespace nerae {

struct PretrainedVectors
{
    std::size_t dim = 0;
    std::vector<std::string> words; ///< file order, first occurrence only
    std::unordered_map<std::string, std::vector<float>> vectors;

    std::size_t size() const noexcept { return words.size(); }
    const std::vector<float>* find(const std::string& w) const
    {
        auto it = vectors.find(w);
        return it == vectors.end() ? nullptr : &it->second;
    }
};

namespace detail {

inline void parse_vector_line(std::string_view line, std::size_t lineno, std::size_t dim, PretrainedVectors& out)
{
    line = trim(line);
    if (line.empty())
        return;
    const auto sp = line.find(' ');
    if (sp == std::string_view::npos)
        throw ParseError("expected a word followed by " + std::to_string(dim) + " values", lineno);
    std::string word(line.substr(0, sp));
    std::vector<float> vec;
    vec.reserve(dim);
    const char* p = line.data() + sp;
    const char* end = line.data() + line.size();
    while (p < end) {
        while (p < end && (*p == ' ' || *p == '\t'))
            ++p;
        if (p == end)
            break;
        float v = 0;
        auto [next, ec] = std::from_chars(p, end, v);
        if (ec != std::errc() || (next < end && *next != ' ' && *next != '\t'))
            throw ParseError("non-numeric vector component for '" + word + "'", lineno);
        vec.push_back(v);
        p = next;
    }
    if (vec.size() != dim)
        throw ParseError("vector for '" + word + "' has " + std::to_string(vec.size()) +
                             " components, expected " + std::to_string(dim),
                         lineno);
    if (out.vectors.emplace(word, std::move(vec)).second)
        out.words.push_back(std::move(word));
}

} // namespace detail

/// Read `word v1 ... v_dim` lines. Duplicate words keep their first vector.
inline PretrainedVectors load_pretrained(std::istream& in, std::size_t expected_dim)
{
    PretrainedVectors out;
    out.dim = expected_dim;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line))
        detail::parse_vector_line(line, ++lineno, expected_dim, out);
    return out;
}

/// File variant. gzip input is detected and decompressed transparently.
inline PretrainedVectors load_pretrained_file(const std::string& path, std::size_t expected_dim)
{
    gzFile f = gzopen(path.c_str(), "rb");
    if (!f)
        throw Error("cannot open embeddings file '" + path + "'");
    PretrainedVectors out;
    out.dim = expected_dim;
    std::string line;
    std::vector<char> buf(1 << 16);
    std::size_t lineno = 0;
    try {
        while (gzgets(f, buf.data(), static_cast<int>(buf.size())) != nullptr) {
            line += buf.data();
            if (line.empty() || line.back() != '\n') {
                if (!gzeof(f))
                    continue;
            }
            detail::parse_vector_line(line, ++lineno, expected_dim, out);
            line.clear();
        }
        if (!line.empty())
            detail::parse_vector_line(line, ++lineno, expected_dim, out);
    } catch (...) {
        gzclose(f);
        throw;
    }
    gzclose(f);
    return out;
}

/// rows x dim matrix drawn uniformly from [-sqrt(3/dim), +sqrt(3/dim)].
template <typename T>
Tensor<T> init_uniform(std::size_t rows, std::size_t dim, std::mt19937_64& rng)
{
    if (dim == 0)
        throw Error("init_uniform: dim must be >= 1");
    const double bound = std::sqrt(3.0 / static_cast<double>(dim));
    std::uniform_real_distribution<double> u(-bound, bound);
    Tensor<T> m(rows, dim);
    for (auto& v : m.data())
        v = static_cast<T>(u(rng));
    return m;
}

template <typename T>
Tensor<T> init_uniform(std::size_t rows, std::size_t dim, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    return init_uniform<T>(rows, dim, rng);
}

/// Word table aligned with `vocab.words`: pretrained vector when the word (or
/// its case-folded form) has one, uniform noise otherwise, zero PAD row.
template <typename T>
Tensor<T> build_word_table(const Vocabulary& vocab, const PretrainedVectors& pretrained, std::size_t dim,
                           std::mt19937_64& rng)
{
    if (pretrained.size() && pretrained.dim != dim)
        throw Error("pretrained vectors have dim " + std::to_string(pretrained.dim) + ", model expects " +
                    std::to_string(dim));
    Tensor<T> table = init_uniform<T>(vocab.words.size(), dim, rng);
    for (std::size_t id = 0; id < vocab.words.size(); ++id) {
        if (id == Vocabulary::unk || id == Vocabulary::pad)
            continue;
        const auto& w = vocab.words.at(id);
        const auto* vec = pretrained.find(w);
        if (!vec)
            vec = pretrained.find(fold_case(w));
        if (vec)
            for (std::size_t c = 0; c < dim; ++c)
                table(id, c) = static_cast<T>((*vec)[c]);
    }
    if (table.rows() > Vocabulary::pad)
        for (std::size_t c = 0; c < dim; ++c)
            table(Vocabulary::pad, c) = T(0);
    return table;
}

/// Row used for `surface`: exact match, then case-folded match, then UNK.
template <typename T>
std::vector<T> lookup_word(const std::string& surface, const Tensor<T>& table, const Vocabulary& vocab)
{
    const auto row = table.row_span(vocab.word_id(surface));
    return {row.begin(), row.end()};
}

} // namespace nerae

#endif // NERAE_EMBEDDINGS_HPP
