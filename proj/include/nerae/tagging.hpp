#ifndef NERAE_TAGGING_HPP
#define NERAE_TAGGING_HPP

// Entity spans and strict readers/writers for the IOB1, IOB2 and IOBES
// tagging schemes.

#include <algorithm>
#include <compare>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "error.hpp"

namespace nerae {

struct SpanEntity
{
    std::string type;
    std::size_t start = 0;
    std::size_t end = 0; ///< inclusive

    auto operator<=>(const SpanEntity&) const = default;
};

enum class Scheme { iob1, iob2, iobes };

inline std::string to_string(Scheme s)
{
    switch (s) {
    case Scheme::iob1: return "iob1";
    case Scheme::iob2: return "iob2";
    case Scheme::iobes: return "iobes";
    }
    return "?";
}

inline Scheme scheme_from_string(std::string_view s)
{
    if (s == "iob1" || s == "IOB1")
        return Scheme::iob1;
    if (s == "iob2" || s == "IOB2" || s == "bio" || s == "BIO")
        return Scheme::iob2;
    if (s == "iobes" || s == "IOBES")
        return Scheme::iobes;
    throw Error("unknown tagging scheme '" + std::string(s) + "'");
}

/// A label split into prefix letter and entity type. 'O' has an empty type.
struct Tag
{
    char prefix = 'O';
    std::string type;
};

inline std::optional<Tag> parse_tag(std::string_view label)
{
    if (label == "O")
        return Tag{};
    if (label.size() < 3 || label[1] != '-')
        return std::nullopt;
    const char p = label[0];
    if (p != 'B' && p != 'I' && p != 'E' && p != 'S')
        return std::nullopt;
    return Tag{p, std::string(label.substr(2))};
}

class TagSequenceError : public Error
{
public:
    TagSequenceError(const std::string& what, std::size_t index)
        : Error("invalid tag sequence at index " + std::to_string(index) + ": " + what), index_(index)
    {
    }
    std::size_t index() const noexcept { return index_; }

private:
    std::size_t index_;
};

namespace detail {

inline Tag require_tag(const std::vector<std::string>& labels, std::size_t i)
{
    auto t = parse_tag(labels[i]);
    if (!t)
        throw TagSequenceError("malformed label '" + labels[i] + "'", i);
    return *t;
}

} // namespace detail

/// Strictly decode spans from a sequence in the given scheme. Throws
/// TagSequenceError naming the first offending index.
inline std::vector<SpanEntity> decode_spans(const std::vector<std::string>& labels, Scheme scheme)
{
    std::vector<SpanEntity> spans;
    std::optional<SpanEntity> open;
    auto close = [&] {
        if (open)
            spans.push_back(*open);
        open.reset();
    };
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const Tag t = detail::require_tag(labels, i);
        const bool continues = open && open->type == t.type && open->end + 1 == i;
        switch (scheme) {
        case Scheme::iob1:
            if (t.prefix == 'E' || t.prefix == 'S')
                throw TagSequenceError("'" + labels[i] + "' is not an IOB1 label", i);
            if (t.prefix == 'B' && !continues)
                throw TagSequenceError("IOB1 B-" + t.type + " must follow a " + t.type + " token", i);
            if (t.prefix == 'O')
                close();
            else if (t.prefix == 'I' && continues)
                open->end = i;
            else {
                close();
                open = SpanEntity{t.type, i, i};
            }
            break;
        case Scheme::iob2:
            if (t.prefix == 'E' || t.prefix == 'S')
                throw TagSequenceError("'" + labels[i] + "' is not an IOB2 label", i);
            if (t.prefix == 'I' && !continues)
                throw TagSequenceError("I-" + t.type + " without a preceding B-/I-" + t.type, i);
            if (t.prefix == 'O')
                close();
            else if (t.prefix == 'I')
                open->end = i;
            else {
                close();
                open = SpanEntity{t.type, i, i};
            }
            break;
        case Scheme::iobes:
            if (open && !(t.prefix == 'I' || t.prefix == 'E'))
                throw TagSequenceError("unterminated " + open->type + " span before '" + labels[i] + "'", i);
            if ((t.prefix == 'I' || t.prefix == 'E') && !continues)
                throw TagSequenceError("'" + labels[i] + "' without an open " + t.type + " span", i);
            if (t.prefix == 'B')
                open = SpanEntity{t.type, i, i};
            else if (t.prefix == 'I')
                open->end = i;
            else if (t.prefix == 'E') {
                open->end = i;
                close();
            } else if (t.prefix == 'S')
                spans.push_back(SpanEntity{t.type, i, i});
            break;
        }
    }
    if (scheme == Scheme::iobes && open)
        throw TagSequenceError("unterminated " + open->type + " span at end of sequence", labels.size() - 1);
    close();
    return spans;
}

/// Emit an IOBES sequence of `length` labels for non-overlapping spans.
inline std::vector<std::string> emit_iobes(std::vector<SpanEntity> spans, std::size_t length)
{
    std::vector<std::string> out(length, "O");
    std::sort(spans.begin(), spans.end(), [](const auto& a, const auto& b) { return a.start < b.start; });
    std::size_t next_free = 0;
    for (const auto& s : spans) {
        if (s.start > s.end || s.end >= length || s.start < next_free)
            throw Error("emit_iobes: span (" + s.type + ", " + std::to_string(s.start) + ", " +
                        std::to_string(s.end) + ") is out of range or overlaps");
        if (s.start == s.end)
            out[s.start] = "S-" + s.type;
        else {
            out[s.start] = "B-" + s.type;
            for (std::size_t i = s.start + 1; i < s.end; ++i)
                out[i] = "I-" + s.type;
            out[s.end] = "E-" + s.type;
        }
        next_free = s.end + 1;
    }
    return out;
}

/// Convert a valid IOB1/IOB2/IOBES sequence to IOBES, preserving spans.
inline std::vector<std::string> to_iobes(const std::vector<std::string>& labels, Scheme source)
{
    return emit_iobes(decode_spans(labels, source), labels.size());
}

} // namespace nerae

#endif // NERAE_TAGGING_HPP
