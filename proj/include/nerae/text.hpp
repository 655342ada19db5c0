#ifndef NERAE_TEXT_HPP
#define NERAE_TEXT_HPP

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace nerae {

/// Split UTF-8 text into code point substrings. Invalid lead bytes are kept
/// as single-byte units.
inline std::vector<std::string> utf8_chars(std::string_view s)
{
    std::vector<std::string> out;
    std::size_t i = 0;
    while (i < s.size()) {
        const auto c = static_cast<unsigned char>(s[i]);
        std::size_t len = 1;
        if (c >= 0xF0)
            len = 4;
        else if (c >= 0xE0)
            len = 3;
        else if (c >= 0xC0)
            len = 2;
        if (i + len > s.size())
            len = 1;
        out.emplace_back(s.substr(i, len));
        i += len;
    }
    return out;
}

/// ASCII case folding; bytes outside ASCII are left alone.
inline std::string fold_case(std::string_view s)
{
    std::string out(s);
    for (auto& ch : out)
        if (ch >= 'A' && ch <= 'Z')
            ch = static_cast<char>(ch - 'A' + 'a');
    return out;
}

/// Character-class abstraction of a token: uppercase -> X, lowercase -> x,
/// digit -> d, anything else kept as is; runs of one symbol are cut at 4.
///
///     "U.N." -> "X.X."   "official" -> "xxxx"   "Baghdad" -> "Xxxxx"
inline std::string word_shape(std::string_view surface)
{
    constexpr std::size_t max_run = 4;
    std::string out;
    std::string prev;
    std::size_t run = 0;
    for (const auto& ch : utf8_chars(surface)) {
        std::string mapped = ch;
        if (ch.size() == 1) {
            const char c = ch[0];
            if (c >= 'A' && c <= 'Z')
                mapped = "X";
            else if (c >= 'a' && c <= 'z')
                mapped = "x";
            else if (c >= '0' && c <= '9')
                mapped = "d";
        }
        run = mapped == prev ? run + 1 : 1;
        prev = mapped;
        if (run <= max_run)
            out += mapped;
    }
    return out;
}

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a(std::string_view bytes, std::uint64_t h = 0xcbf29ce484222325ULL)
{
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::string hex64(std::uint64_t v)
{
    static constexpr char digits[] = "0123456789abcdef";
    std::string s(16, '0');
    for (int i = 15; i >= 0; --i, v >>= 4)
        s[static_cast<std::size_t>(i)] = digits[v & 0xF];
    return s;
}

inline std::vector<std::string> split_ws(std::string_view line)
{
    std::vector<std::string> out;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && (line[i] == ' ' || line[i] == '\t'))
            ++i;
        std::size_t j = i;
        while (j < line.size() && line[j] != ' ' && line[j] != '\t')
            ++j;
        if (j > i)
            out.emplace_back(line.substr(i, j - i));
        i = j;
    }
    return out;
}

inline std::string_view trim(std::string_view s)
{
    const auto ws = [](char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n'; };
    while (!s.empty() && ws(s.front()))
        s.remove_prefix(1);
    while (!s.empty() && ws(s.back()))
        s.remove_suffix(1);
    return s;
}

} // namespace nerae

#endif // NERAE_TEXT_HPP
