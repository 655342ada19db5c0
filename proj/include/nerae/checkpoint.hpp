#ifndef NERAE_CHECKPOINT_HPP
#define NERAE_CHECKPOINT_HPP

// Self-describing binary checkpoint. All integers are little-endian; reals
// are IEEE-754 little-endian of the width recorded in the header.
//
//   magic        8 bytes  "NERAECKP"
//   version      u32      1
//   scalar_bytes u32      4 (float32) or 8 (float64)
//   config       str      run configuration as JSON text
//   sections     u32      count, then per section:
//                           name str, hash u64, entries u64, entries x str
//   params       u32      count, then per parameter (lexicographic order):
//                           name str, rows u64, cols u64, rows*cols reals
//   digest       u64      FNV-1a 64 of every preceding byte
//
//   str = u32 byte length followed by UTF-8 bytes
//
// Sections are the vocabularies "words", "chars", "pos", "shapes", "deps",
// "labels" followed by "gazetteer.person" and "gazetteer.location". A
// section's hash is IdMap::hash() of its entries in order.

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "corpus.hpp"
#include "error.hpp"
#include "features.hpp"
#include "numcore.hpp"
#include "text.hpp"

namespace nerae {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

inline constexpr char checkpoint_magic[8] = {'N', 'E', 'R', 'A', 'E', 'C', 'K', 'P'};
inline constexpr std::uint32_t checkpoint_version = 1;

/// Everything needed to rebuild a trained model.
template <typename T>
struct Checkpoint
{
    nlohmann::json config;
    Vocabulary vocab;
    Gazetteer gazetteer;
    ParamStore<T> params;
};

namespace detail {

class ByteWriter
{
public:
    template <typename U>
    void put(U v)
    {
        char b[sizeof(U)];
        std::memcpy(b, &v, sizeof(U));
        bytes_.append(b, sizeof(U));
    }
    void put_str(const std::string& s)
    {
        put<std::uint32_t>(static_cast<std::uint32_t>(s.size()));
        bytes_ += s;
    }
    void raw(const char* p, std::size_t n) { bytes_.append(p, n); }
    const std::string& bytes() const noexcept { return bytes_; }

private:
    std::string bytes_;
};

class ByteReader
{
public:
    explicit ByteReader(const std::string& bytes) : bytes_(bytes) {}

    template <typename U>
    U get()
    {
        need(sizeof(U));
        U v;
        std::memcpy(&v, bytes_.data() + pos_, sizeof(U));
        pos_ += sizeof(U);
        return v;
    }
    std::string get_str()
    {
        const auto n = get<std::uint32_t>();
        need(n);
        std::string s = bytes_.substr(pos_, n);
        pos_ += n;
        return s;
    }
    std::size_t pos() const noexcept { return pos_; }

private:
    void need(std::size_t n) const
    {
        if (pos_ + n > bytes_.size())
            throw Error("checkpoint: truncated file");
    }
    const std::string& bytes_;
    std::size_t pos_ = 0;
};

inline std::vector<std::pair<std::string, IdMap>> checkpoint_sections(const Vocabulary& v, const Gazetteer& g)
{
    std::vector<std::pair<std::string, IdMap>> out;
    for (const auto& [name, map] : v.sections())
        out.emplace_back(name, *map);
    out.emplace_back("gazetteer.person",
                     IdMap(std::vector<std::string>(g.person_tokens.begin(), g.person_tokens.end())));
    out.emplace_back("gazetteer.location",
                     IdMap(std::vector<std::string>(g.location_tokens.begin(), g.location_tokens.end())));
    return out;
}

} // namespace detail

template <typename T>
std::string serialize_checkpoint(const Checkpoint<T>& ck)
{
    detail::ByteWriter w;
    w.raw(checkpoint_magic, sizeof checkpoint_magic);
    w.put<std::uint32_t>(checkpoint_version);
    w.put<std::uint32_t>(sizeof(T));
    w.put_str(ck.config.dump());

    const auto sections = detail::checkpoint_sections(ck.vocab, ck.gazetteer);
    w.put<std::uint32_t>(static_cast<std::uint32_t>(sections.size()));
    for (const auto& [name, map] : sections) {
        w.put_str(name);
        w.put<std::uint64_t>(map.hash());
        w.put<std::uint64_t>(map.size());
        for (const auto& s : map.items())
            w.put_str(s);
    }

    w.put<std::uint32_t>(static_cast<std::uint32_t>(ck.params.size()));
    for (const auto& [name, p] : ck.params) {
        w.put_str(name);
        w.put<std::uint64_t>(p.value.rows());
        w.put<std::uint64_t>(p.value.cols());
        for (T v : p.value.data())
            w.put<T>(v);
    }
    const std::uint64_t digest = fnv1a(w.bytes());
    w.put<std::uint64_t>(digest);
    return w.bytes();
}

template <typename T>
Checkpoint<T> deserialize_checkpoint(const std::string& bytes)
{
    if (bytes.size() < sizeof checkpoint_magic + 8 ||
        std::memcmp(bytes.data(), checkpoint_magic, sizeof checkpoint_magic) != 0)
        throw Error("checkpoint: bad magic");
    {
        std::uint64_t stored;
        std::memcpy(&stored, bytes.data() + bytes.size() - 8, 8);
        if (fnv1a(std::string_view(bytes.data(), bytes.size() - 8)) != stored)
            throw Error("checkpoint: digest mismatch (file corrupted)");
    }
    detail::ByteReader r(bytes);
    for (std::size_t i = 0; i < sizeof checkpoint_magic; ++i)
        r.get<char>();
    const auto version = r.get<std::uint32_t>();
    if (version != checkpoint_version)
        throw Error("checkpoint: unsupported version " + std::to_string(version));
    const auto width = r.get<std::uint32_t>();
    if (width != 4 && width != 8)
        throw Error("checkpoint: unsupported scalar width " + std::to_string(width));

    Checkpoint<T> ck;
    ck.config = nlohmann::json::parse(r.get_str());

    const auto n_sections = r.get<std::uint32_t>();
    std::map<std::string, IdMap> sections;
    for (std::uint32_t s = 0; s < n_sections; ++s) {
        const std::string name = r.get_str();
        const auto stored_hash = r.get<std::uint64_t>();
        const auto n = r.get<std::uint64_t>();
        IdMap map;
        for (std::uint64_t k = 0; k < n; ++k)
            map.add(r.get_str());
        if (map.hash() != stored_hash)
            throw Error("checkpoint: vocabulary hash mismatch in section '" + name + "': stored " +
                        hex64(stored_hash) + ", computed " + hex64(map.hash()));
        sections.emplace(name, std::move(map));
    }
    for (auto& [name, map] : ck.vocab.sections()) {
        auto it = sections.find(name);
        if (it == sections.end())
            throw Error("checkpoint: missing vocabulary section '" + name + "'");
        *map = it->second;
    }
    if (auto it = sections.find("gazetteer.person"); it != sections.end())
        ck.gazetteer.person_tokens.insert(it->second.items().begin(), it->second.items().end());
    if (auto it = sections.find("gazetteer.location"); it != sections.end())
        ck.gazetteer.location_tokens.insert(it->second.items().begin(), it->second.items().end());

    const auto n_params = r.get<std::uint32_t>();
    for (std::uint32_t k = 0; k < n_params; ++k) {
        const std::string name = r.get_str();
        const auto rows = r.get<std::uint64_t>();
        const auto cols = r.get<std::uint64_t>();
        Tensor<T> v(rows, cols);
        for (auto& x : v.data())
            x = width == 4 ? static_cast<T>(r.get<float>()) : static_cast<T>(r.get<double>());
        ck.params.add(name, std::move(v));
    }
    if (r.pos() + 8 != bytes.size())
        throw Error("checkpoint: trailing bytes after parameters");
    return ck;
}

/// Expected section hashes of a vocabulary, keyed by section name.
inline std::map<std::string, std::string> vocab_hashes(const Vocabulary& v)
{
    std::map<std::string, std::string> out;
    for (const auto& [name, map] : v.sections())
        out[name] = hex64(map->hash());
    return out;
}

template <typename T>
void save_checkpoint(const std::string& path, const Checkpoint<T>& ck)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw Error("cannot write checkpoint '" + path + "'");
    const std::string bytes = serialize_checkpoint(ck);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

/// Scalar width (4 or 8) recorded in a checkpoint header.
inline std::uint32_t checkpoint_scalar_bytes(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    char head[sizeof checkpoint_magic + 8];
    if (!in.read(head, sizeof head) || std::memcmp(head, checkpoint_magic, sizeof checkpoint_magic) != 0)
        throw Error("'" + path + "' is not a checkpoint");
    std::uint32_t width;
    std::memcpy(&width, head + sizeof checkpoint_magic + 4, 4);
    return width;
}

template <typename T>
Checkpoint<T> load_checkpoint(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error("cannot open checkpoint '" + path + "'");
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return deserialize_checkpoint<T>(bytes);
}

} // namespace nerae

#endif // NERAE_CHECKPOINT_HPP
