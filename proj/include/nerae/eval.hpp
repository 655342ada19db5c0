#ifndef NERAE_EVAL_HPP
#define NERAE_EVAL_HPP

// Span-level precision / recall / F1 with CoNLL semantics, and Welch's
// two-sample t-test for comparing multi-seed runs.

#include <cmath>
#include <istream>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <boost/math/distributions/students_t.hpp>

#include "error.hpp"
#include "tagging.hpp"
#include "text.hpp"

namespace nerae {

/// Spans of a possibly malformed IOBES sequence. Repairs: an I-/E- that does
/// not continue an open span of its type opens a new one, a type change
/// closes the open span, and a span still open at O or the end is kept.
inline std::vector<SpanEntity> spans_from_iobes(const std::vector<std::string>& labels)
{
    std::vector<SpanEntity> spans;
    std::optional<SpanEntity> open;
    auto close = [&] {
        if (open)
            spans.push_back(*open);
        open.reset();
    };
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const auto tag = parse_tag(labels[i]);
        if (!tag || tag->prefix == 'O') {
            close();
            continue;
        }
        const bool continues = open && open->type == tag->type;
        switch (tag->prefix) {
        case 'B':
            close();
            open = SpanEntity{tag->type, i, i};
            break;
        case 'I':
            if (continues)
                open->end = i;
            else {
                close();
                open = SpanEntity{tag->type, i, i};
            }
            break;
        case 'E':
            if (continues)
                open->end = i;
            else {
                close();
                open = SpanEntity{tag->type, i, i};
            }
            close();
            break;
        case 'S':
            close();
            spans.push_back(SpanEntity{tag->type, i, i});
            break;
        }
    }
    close();
    return spans;
}

struct SpanCounts
{
    std::size_t gold = 0;
    std::size_t predicted = 0;
    std::size_t matched = 0;

    double precision() const { return predicted ? static_cast<double>(matched) / predicted : 0.0; }
    double recall() const { return gold ? static_cast<double>(matched) / gold : 0.0; }
    double f1() const
    {
        const double p = precision(), r = recall();
        return p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0;
    }
};

struct SpanReport
{
    SpanCounts total;
    std::map<std::string, SpanCounts> per_type;

    double precision() const { return total.precision(); }
    double recall() const { return total.recall(); }
    double f1() const { return total.f1(); }
};

/// Exact-match span scores over a corpus. A predicted span counts only if
/// type, start and end all agree with a gold span.
inline SpanReport span_f1(const std::vector<std::vector<std::string>>& gold,
                          const std::vector<std::vector<std::string>>& pred)
{
    if (gold.size() != pred.size())
        throw Error("span_f1: " + std::to_string(gold.size()) + " gold sentences but " +
                    std::to_string(pred.size()) + " predicted");
    SpanReport r;
    for (std::size_t k = 0; k < gold.size(); ++k) {
        if (gold[k].size() != pred[k].size())
            throw Error("span_f1: sentence " + std::to_string(k) + " has " + std::to_string(gold[k].size()) +
                        " gold labels but " + std::to_string(pred[k].size()) + " predicted");
        const auto gs = spans_from_iobes(gold[k]);
        const auto ps = spans_from_iobes(pred[k]);
        const std::set<SpanEntity> gold_set(gs.begin(), gs.end());
        for (const auto& s : gs) {
            ++r.total.gold;
            ++r.per_type[s.type].gold;
        }
        for (const auto& s : ps) {
            ++r.total.predicted;
            auto& pt = r.per_type[s.type];
            ++pt.predicted;
            if (gold_set.count(s)) {
                ++r.total.matched;
                ++pt.matched;
            }
        }
    }
    return r;
}

/// Gold and predicted labels from the last two columns of a CoNLL-style file
/// (the layout consumed by the conlleval script).
struct LabelPairs
{
    std::vector<std::vector<std::string>> gold;
    std::vector<std::vector<std::string>> pred;
};

inline LabelPairs read_label_pairs(std::istream& in)
{
    LabelPairs lp;
    std::vector<std::string> g, p;
    auto flush = [&] {
        if (!g.empty()) {
            lp.gold.push_back(std::move(g));
            lp.pred.push_back(std::move(p));
        }
        g.clear();
        p.clear();
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
        if (body.starts_with("-DOCSTART-"))
            continue;
        const auto f = split_ws(body);
        if (f.size() < 2)
            throw ParseError("need at least gold and predicted columns", lineno);
        g.push_back(f[f.size() - 2]);
        p.push_back(f[f.size() - 1]);
    }
    flush();
    return lp;
}

// ---------------------------------------------------------- statistics

struct Summary
{
    std::size_t n = 0;
    double mean = 0.0;
    double stddev = 0.0;   ///< sample (n-1) standard deviation
    double variance = 0.0; ///< sample variance
};

inline Summary summarize(const std::vector<double>& xs)
{
    Summary s;
    s.n = xs.size();
    if (xs.empty())
        return s;
    s.mean = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
    if (xs.size() > 1) {
        double ss = 0.0;
        for (double x : xs)
            ss += (x - s.mean) * (x - s.mean);
        s.variance = ss / static_cast<double>(xs.size() - 1);
        s.stddev = std::sqrt(s.variance);
    }
    return s;
}

struct TTestResult
{
    double t = 0.0;
    double df = 0.0;
    double p_value = 1.0; ///< two-sided
    double critical = 0.0;
    bool significant = false;
};

/// Welch's unequal-variance two-sample t-test, two-sided at level alpha.
inline TTestResult two_sample_t_test(const std::vector<double>& a, const std::vector<double>& b, double alpha = 0.05)
{
    if (a.size() < 2 || b.size() < 2)
        throw Error("t-test: each group needs at least 2 samples");
    if (!(alpha > 0.0 && alpha < 1.0))
        throw Error("t-test: alpha must lie in (0, 1)");
    const Summary sa = summarize(a), sb = summarize(b);
    const double na = static_cast<double>(sa.n), nb = static_cast<double>(sb.n);
    const double va = sa.variance / na, vb = sb.variance / nb;
    const double diff = sa.mean - sb.mean;

    TTestResult r;
    if (va + vb == 0.0) {
        if (diff == 0.0)
            return r;
        r.t = diff > 0 ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity();
        r.df = na + nb - 2.0;
        r.p_value = 0.0;
        r.critical = boost::math::quantile(boost::math::students_t(r.df), 1.0 - alpha / 2.0);
        r.significant = true;
        return r;
    }
    r.t = diff / std::sqrt(va + vb);
    r.df = (va + vb) * (va + vb) / (va * va / (na - 1.0) + vb * vb / (nb - 1.0));
    const boost::math::students_t dist(r.df);
    r.critical = boost::math::quantile(dist, 1.0 - alpha / 2.0);
    r.p_value = 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(r.t)));
    r.significant = std::abs(r.t) > r.critical;
    return r;
}

} // namespace nerae

#endif // NERAE_EVAL_HPP
