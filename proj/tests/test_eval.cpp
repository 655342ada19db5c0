#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include <nerae/eval.hpp>
#include <nerae/tagging.hpp>

using namespace nerae;

namespace {

using Labels = std::vector<std::string>;

// Random non-overlapping spans over two types.
std::vector<SpanEntity> random_spans(std::mt19937_64& rng, std::size_t length)
{
    std::vector<SpanEntity> spans;
    std::size_t i = 0;
    while (i < length) {
        if (rng() % 3 == 0) {
            const std::size_t len = 1 + rng() % 3;
            const std::size_t end = std::min(length - 1, i + len - 1);
            spans.push_back({rng() % 2 ? "PER" : "LOC", i, end});
            i = end + 1;
        } else {
            ++i;
        }
    }
    return spans;
}

// Counts by set intersection of the generating spans, bypassing label decoding.
std::array<std::size_t, 3> oracle_counts(const std::vector<std::vector<SpanEntity>>& gold,
                                         const std::vector<std::vector<SpanEntity>>& pred)
{
    std::array<std::size_t, 3> c{0, 0, 0};
    for (std::size_t k = 0; k < gold.size(); ++k) {
        c[0] += gold[k].size();
        c[1] += pred[k].size();
        for (const auto& p : pred[k])
            c[2] += std::count(gold[k].begin(), gold[k].end(), p);
    }
    return c;
}

// Two-sided tail of Student's t by Simpson integration of the density.
double t_tail_oracle(double t, double df)
{
    auto pdf = [df](double x) {
        return std::exp(std::lgamma((df + 1) / 2) - std::lgamma(df / 2)) / std::sqrt(df * M_PI) *
               std::pow(1 + x * x / df, -(df + 1) / 2);
    };
    const int n = 200000;
    const double a = 0.0, b = std::abs(t), h = (b - a) / n;
    double s = pdf(a) + pdf(b);
    for (int i = 1; i < n; ++i)
        s += pdf(a + i * h) * (i % 2 ? 4 : 2);
    return 1.0 - 2.0 * s * h / 3.0;
}

} // namespace

TEST(Spans, WellFormedSequences)
{
    const auto s = spans_from_iobes({"B-ORG", "E-ORG", "O", "S-PER", "B-LOC", "I-LOC", "E-LOC"});
    ASSERT_EQ(s.size(), 3u);
    EXPECT_EQ(s[0], (SpanEntity{"ORG", 0, 1}));
    EXPECT_EQ(s[1], (SpanEntity{"PER", 3, 3}));
    EXPECT_EQ(s[2], (SpanEntity{"LOC", 4, 6}));
}

TEST(Spans, RepairsMalformedSequences)
{
    // A span may start with I-.
    EXPECT_EQ(spans_from_iobes({"I-PER", "E-PER"}), (std::vector<SpanEntity>{{"PER", 0, 1}}));
    // An unterminated span is kept.
    EXPECT_EQ(spans_from_iobes({"B-PER", "I-PER", "O"}), (std::vector<SpanEntity>{{"PER", 0, 1}}));
    EXPECT_EQ(spans_from_iobes({"B-PER"}), (std::vector<SpanEntity>{{"PER", 0, 0}}));
    // A type change closes the open span.
    EXPECT_EQ(spans_from_iobes({"B-PER", "E-LOC"}), (std::vector<SpanEntity>{{"PER", 0, 0}, {"LOC", 1, 1}}));
    // A stray E- is a one-token span.
    EXPECT_EQ(spans_from_iobes({"O", "E-MISC"}), (std::vector<SpanEntity>{{"MISC", 1, 1}}));
    EXPECT_TRUE(spans_from_iobes({}).empty());
}

TEST(Spans, AgreeWithStrictDecodingOnWellFormedInputProperty)
{
    std::mt19937_64 rng(21);
    for (int k = 0; k < 1000; ++k) {
        const std::size_t n = 1 + rng() % 12;
        const auto spans = random_spans(rng, n);
        const auto labels = emit_iobes(spans, n);
        EXPECT_EQ(spans_from_iobes(labels), spans);
        EXPECT_EQ(decode_spans(labels, Scheme::iobes), spans);
    }
}

TEST(SpanF1, ThreeOfFiveAgainstFour)
{
    const std::vector<Labels> gold{{"S-PER", "O", "B-LOC", "E-LOC", "O", "S-ORG", "S-MISC"}};
    const std::vector<Labels> pred{{"S-PER", "S-LOC", "B-LOC", "E-LOC", "S-PER", "S-ORG", "O"}};
    const auto r = span_f1(gold, pred);
    EXPECT_EQ(r.total.gold, 4u);
    EXPECT_EQ(r.total.predicted, 5u);
    EXPECT_EQ(r.total.matched, 3u);
    EXPECT_NEAR(r.precision(), 0.6, 1e-12);
    EXPECT_NEAR(r.recall(), 0.75, 1e-12);
    EXPECT_NEAR(r.f1(), 2.0 / 3.0, 1e-12);
}

TEST(SpanF1, BoundaryMismatchScoresZero)
{
    const auto r = span_f1({{"B-PER", "E-PER", "O"}}, {{"B-PER", "I-PER", "E-PER"}});
    EXPECT_EQ(r.total.matched, 0u);
    EXPECT_EQ(r.f1(), 0.0);
    EXPECT_EQ(span_f1({{"O"}}, {{"O"}}).f1(), 0.0);
}

TEST(SpanF1, TypeMismatchScoresZero)
{
    EXPECT_EQ(span_f1({{"S-PER"}}, {{"S-LOC"}}).total.matched, 0u);
}

TEST(SpanF1, MatchesSetIntersectionOracleProperty)
{
    std::mt19937_64 rng(22);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<std::vector<SpanEntity>> gs, ps;
        std::vector<Labels> gl, pl;
        for (int k = 0; k < 5; ++k) {
            const std::size_t n = 1 + rng() % 10;
            gs.push_back(random_spans(rng, n));
            // Prediction: either the gold layout or an unrelated random one.
            std::vector<SpanEntity> p = rng() % 2 ? gs.back() : random_spans(rng, n);
            ps.push_back(p);
            gl.push_back(emit_iobes(gs.back(), n));
            pl.push_back(emit_iobes(p, n));
        }
        const auto r = span_f1(gl, pl);
        const auto c = oracle_counts(gs, ps);
        EXPECT_EQ(r.total.gold, c[0]);
        EXPECT_EQ(r.total.predicted, c[1]);
        EXPECT_EQ(r.total.matched, c[2]);

        // Swapping roles swaps precision and recall and keeps F1.
        const auto swapped = span_f1(pl, gl);
        EXPECT_DOUBLE_EQ(swapped.precision(), r.recall());
        EXPECT_DOUBLE_EQ(swapped.recall(), r.precision());
        EXPECT_DOUBLE_EQ(swapped.f1(), r.f1());

        // Sentence order does not matter.
        std::vector<std::size_t> idx(gl.size());
        std::iota(idx.begin(), idx.end(), std::size_t{0});
        std::shuffle(idx.begin(), idx.end(), rng);
        std::vector<Labels> gl2, pl2;
        for (auto i : idx) {
            gl2.push_back(gl[i]);
            pl2.push_back(pl[i]);
        }
        EXPECT_EQ(span_f1(gl2, pl2).total.matched, r.total.matched);

        // Per-type counts add up to the totals.
        SpanCounts sum;
        for (const auto& [t, pc] : r.per_type) {
            sum.gold += pc.gold;
            sum.predicted += pc.predicted;
            sum.matched += pc.matched;
        }
        EXPECT_EQ(sum.gold, r.total.gold);
        EXPECT_EQ(sum.predicted, r.total.predicted);
        EXPECT_EQ(sum.matched, r.total.matched);
        EXPECT_GE(r.f1(), 0.0);
        EXPECT_LE(r.f1(), 1.0);
    }
}

TEST(SpanF1, PerfectPredictionScoresOne)
{
    const std::vector<Labels> g{{"B-PER", "E-PER", "O", "S-LOC"}};
    EXPECT_DOUBLE_EQ(span_f1(g, g).f1(), 1.0);
}

TEST(SpanF1, LengthMismatchIsAnError)
{
    EXPECT_THROW(span_f1({{"O"}}, {}), Error);
    EXPECT_THROW(span_f1({{"O"}}, {{"O", "O"}}), Error);
}

TEST(LabelPairs, ReadsLastTwoColumns)
{
    std::istringstream in("-DOCSTART- -X- O O\n\nEkeus NNP S-PER S-PER\nheads VBZ O S-LOC\n\n\nBaghdad S-LOC O\n");
    const auto lp = read_label_pairs(in);
    ASSERT_EQ(lp.gold.size(), 2u);
    EXPECT_EQ(lp.gold[0], (Labels{"S-PER", "O"}));
    EXPECT_EQ(lp.pred[0], (Labels{"S-PER", "S-LOC"}));
    EXPECT_EQ(lp.pred[1], (Labels{"O"}));
    std::istringstream bad("word\n");
    EXPECT_THROW(read_label_pairs(bad), ParseError);
}

TEST(Summary, SampleStatistics)
{
    const auto s = summarize({90.0, 92.0});
    EXPECT_DOUBLE_EQ(s.mean, 91.0);
    EXPECT_DOUBLE_EQ(s.variance, 2.0);
    EXPECT_DOUBLE_EQ(s.stddev, std::sqrt(2.0));
    EXPECT_EQ(summarize({5.0}).stddev, 0.0);
    EXPECT_EQ(summarize({}).n, 0u);
}

TEST(TTest, HandComputedWelch)
{
    // Means 2 and 5, both variances 1, n = 3: t = -3 / sqrt(2/3), df = 4.
    const auto r = two_sample_t_test({1, 2, 3}, {4, 5, 6});
    EXPECT_NEAR(r.t, -3.0 / std::sqrt(2.0 / 3.0), 1e-12);
    EXPECT_NEAR(r.df, 4.0, 1e-12);
    EXPECT_NEAR(r.critical, 2.7764451051977987, 1e-9); // t_{0.975, 4} from tables
    EXPECT_NEAR(r.p_value, t_tail_oracle(r.t, r.df), 1e-7);
    EXPECT_TRUE(r.significant);
}

TEST(TTest, PValueMatchesIntegratedDensityProperty)
{
    std::mt19937_64 rng(23);
    std::normal_distribution<double> n01;
    for (int k = 0; k < 20; ++k) {
        std::vector<double> a(2 + rng() % 5), b(2 + rng() % 5);
        for (auto& v : a)
            v = n01(rng);
        for (auto& v : b)
            v = 0.5 + 2.0 * n01(rng);
        const auto r = two_sample_t_test(a, b);
        EXPECT_NEAR(r.p_value, t_tail_oracle(r.t, r.df), 1e-6);
        EXPECT_EQ(r.significant, r.p_value < 0.05);
    }
}

TEST(TTest, IdenticalGroupsAreNotSignificant)
{
    const auto r = two_sample_t_test({91.0, 92.0, 93.0}, {91.0, 92.0, 93.0});
    EXPECT_EQ(r.t, 0.0);
    EXPECT_NEAR(r.p_value, 1.0, 1e-12);
    EXPECT_FALSE(r.significant);
    EXPECT_FALSE(two_sample_t_test({1, 1}, {1, 1}).significant);
}

TEST(TTest, ZeroVarianceDifferentMeans)
{
    const auto r = two_sample_t_test({0, 0}, {1, 1});
    EXPECT_TRUE(std::isinf(r.t));
    EXPECT_TRUE(r.significant);
    EXPECT_EQ(r.p_value, 0.0);
}

TEST(TTest, FiveSeedGapIsSignificant)
{
    // Offsets with sample standard deviation exactly 1.
    const double z[] = {std::sqrt(1.6), -std::sqrt(1.6), std::sqrt(0.4), -std::sqrt(0.4), 0.0};
    std::vector<double> a, b;
    for (double v : z) {
        a.push_back(91.89 + 0.23 * v);
        b.push_back(91.06 + 0.18 * v);
    }
    EXPECT_NEAR(summarize(a).stddev, 0.23, 1e-12);
    const auto r = two_sample_t_test(a, b);
    EXPECT_TRUE(r.significant);
    EXPECT_GT(r.t, 6.0);
}

TEST(TTest, NeedsTwoSamplesPerGroup)
{
    EXPECT_THROW(two_sample_t_test({1.0}, {1.0, 2.0}), Error);
}
