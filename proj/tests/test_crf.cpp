#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include <nerae/crf.hpp>
#include <nerae/crf_oracle.hpp>

#include "test_util.hpp"

using namespace nerae;
using nerae::testing::random_tensor;

namespace {

struct Instance
{
    Tensor<double> em;
    Tensor<double> trans;
};

Instance random_instance(std::mt19937_64& rng, std::size_t max_len, std::size_t max_labels, double scale = 2.0)
{
    std::uniform_int_distribution<std::size_t> len(1, max_len), labels(1, max_labels);
    const std::size_t n = len(rng), L = labels(rng);
    Instance x{random_tensor<double>(n, L, rng, -scale, scale), random_tensor<double>(L + 2, L + 2, rng, -scale, scale)};
    crf::apply_mask(x.trans);
    return x;
}

} // namespace

TEST(Crf, TransitionTableMasksStartAndStop)
{
    const auto t = crf::make_transitions<double>(3);
    EXPECT_EQ(t.rows(), 5u);
    for (std::size_t i = 0; i < 5; ++i) {
        EXPECT_EQ(t(i, crf::start_state(3)), crf::masked_score);
        EXPECT_EQ(t(crf::stop_state(3), i), crf::masked_score);
    }
    EXPECT_EQ(t(crf::start_state(3), 0), 0.0);
}

TEST(Crf, SequenceScoreByHand)
{
    // Two labels, two positions.
    Tensor<double> em(2, 2, std::vector<double>{1.0, 2.0, 3.0, 4.0});
    auto tr = crf::make_transitions<double>(2);
    tr(2, 1) = 0.5;  // START -> 1
    tr(1, 0) = -1.0; // 1 -> 0
    tr(0, 3) = 0.25; // 0 -> STOP
    const std::vector<std::size_t> y{1, 0};
    EXPECT_DOUBLE_EQ(crf::sequence_score<double>(em, tr, y), 0.5 + 2.0 - 1.0 + 3.0 + 0.25);
}

TEST(Crf, SequenceScoreRejectsBadInput)
{
    Tensor<double> em(2, 2);
    const auto tr = crf::make_transitions<double>(2);
    const std::vector<std::size_t> short_y{0};
    const std::vector<std::size_t> bad_y{0, 5};
    EXPECT_THROW(crf::sequence_score<double>(em, tr, short_y), Error);
    EXPECT_THROW(crf::sequence_score<double>(em, tr, bad_y), Error);
}

TEST(Crf, LogPartitionMatchesEnumeration)
{
    std::mt19937_64 rng(11);
    for (int k = 0; k < 300; ++k) {
        const auto x = random_instance(rng, 5, 4);
        EXPECT_NEAR(crf::log_partition(x.em, x.trans), crf::oracle::brute_force_log_z(x.em, x.trans), 1e-9);
    }
}

TEST(Crf, ViterbiMatchesEnumeration)
{
    std::mt19937_64 rng(12);
    for (int k = 0; k < 300; ++k) {
        const auto x = random_instance(rng, 5, 4);
        const auto v = crf::viterbi_decode(x.em, x.trans);
        const auto b = crf::oracle::brute_force_best(x.em, x.trans);
        EXPECT_EQ(v.path, b.path);
        EXPECT_NEAR(v.score, b.score, 1e-9);
    }
}

TEST(Crf, ViterbiTieBreakPrefersLowestLabel)
{
    // Every path scores zero: the all-zero path must win, as in enumeration.
    Tensor<double> em(4, 3);
    const auto tr = crf::make_transitions<double>(3);
    const auto v = crf::viterbi_decode(em, tr);
    EXPECT_EQ(v.path, (std::vector<std::size_t>{0, 0, 0, 0}));
    EXPECT_EQ(crf::oracle::brute_force_best(em, tr).path, v.path);

    // Integer-valued scores produce many partial ties.
    std::mt19937_64 rng(5);
    std::uniform_int_distribution<int> small(-1, 1);
    for (int k = 0; k < 200; ++k) {
        auto x = random_instance(rng, 4, 3);
        for (auto& v : x.em.data())
            v = small(rng);
        for (auto& v : x.trans.data())
            v = small(rng);
        crf::apply_mask(x.trans);
        EXPECT_EQ(crf::viterbi_decode(x.em, x.trans).path, crf::oracle::brute_force_best(x.em, x.trans).path);
    }
}

TEST(Crf, MarginalsMatchEnumeration)
{
    std::mt19937_64 rng(13);
    for (int k = 0; k < 200; ++k) {
        const auto x = random_instance(rng, 4, 3);
        const auto m = crf::marginals(x.em, x.trans);
        const auto b = crf::oracle::brute_force_marginals(x.em, x.trans);
        for (std::size_t i = 0; i < b.size(); ++i)
            EXPECT_NEAR(m.unary[i], b[i], 1e-9);
        for (std::size_t t = 0; t < m.unary.rows(); ++t) {
            double s = 0.0;
            for (double p : m.unary.row_span(t))
                s += p;
            EXPECT_NEAR(s, 1.0, 1e-9);
        }
    }
}

TEST(Crf, GraphGradientOfLogZIsMarginals)
{
    std::mt19937_64 rng(14);
    for (int k = 0; k < 100; ++k) {
        const auto x = random_instance(rng, 4, 3);
        ParamStore<double> ps;
        auto& em = ps.add("em", x.em);
        auto& tr = ps.add("tr", x.trans);
        Graph<double> g;
        const Var z = crf::log_partition(g, g.param(em), g.param(tr));
        EXPECT_NEAR(g.value(z)[0], crf::oracle::brute_force_log_z(x.em, x.trans), 1e-9);
        g.backward(z);
        const auto b = crf::oracle::brute_force_marginals(x.em, x.trans);
        for (std::size_t i = 0; i < b.size(); ++i)
            EXPECT_NEAR(em.grad[i], b[i], 1e-9);
        const auto m = crf::marginals(x.em, x.trans);
        for (std::size_t i = 0; i < m.transitions.size(); ++i)
            EXPECT_NEAR(tr.grad[i], m.transitions[i], 1e-9);
    }
}

TEST(Crf, NllGradientMatchesFiniteDifferences)
{
    std::mt19937_64 rng(15);
    for (int k = 0; k < 20; ++k) {
        const auto x = random_instance(rng, 5, 4, 1.0);
        ParamStore<double> ps;
        auto& em = ps.add("em", x.em);
        auto& tr = ps.add("tr", x.trans);
        std::vector<std::size_t> y(x.em.rows());
        std::uniform_int_distribution<std::size_t> lab(0, x.em.cols() - 1);
        for (auto& v : y)
            v = lab(rng);
        const double err = grad_check<double>(
            [&](Graph<double>& g) { return crf::negative_log_likelihood(g, g.param(em), g.param(tr), y); }, ps, 1e-6);
        EXPECT_LT(err, 1e-6);
    }
}

TEST(Crf, ProbabilitiesSumToOne)
{
    std::mt19937_64 rng(16);
    for (int k = 0; k < 50; ++k) {
        const auto x = random_instance(rng, 4, 3);
        double total = 0.0;
        crf::oracle::detail::for_each_path(x.em.rows(), x.em.cols(), [&](const std::vector<std::size_t>& y) {
            total += std::exp(crf::log_likelihood<double>(x.em, x.trans, y));
        });
        EXPECT_NEAR(total, 1.0, 1e-9);
    }
}

TEST(Crf, EmissionShiftInvariance)
{
    // Adding c to every emission adds n*c to logZ and to every path score,
    // so the best path and all probabilities are unchanged.
    std::mt19937_64 rng(17);
    for (int k = 0; k < 100; ++k) {
        const auto x = random_instance(rng, 5, 4);
        Tensor<double> shifted = x.em;
        for (auto& v : shifted.data())
            v += 3.25;
        const double n = static_cast<double>(x.em.rows());
        EXPECT_NEAR(crf::log_partition(shifted, x.trans), crf::log_partition(x.em, x.trans) + 3.25 * n, 1e-9);
        EXPECT_EQ(crf::viterbi_decode(shifted, x.trans).path, crf::viterbi_decode(x.em, x.trans).path);
    }
}

TEST(Crf, LogPartitionBoundsViterbi)
{
    std::mt19937_64 rng(18);
    for (int k = 0; k < 100; ++k) {
        const auto x = random_instance(rng, 5, 4);
        const double z = crf::log_partition(x.em, x.trans);
        const double best = crf::viterbi_decode(x.em, x.trans).score;
        EXPECT_GE(z + 1e-12, best);
        const double paths = std::pow(static_cast<double>(x.em.cols()), static_cast<double>(x.em.rows()));
        EXPECT_LE(z, best + std::log(paths) + 1e-12);
    }
}

TEST(Crf, StableWithLargeScores)
{
    Tensor<double> em(3, 2, std::vector<double>{900, 901, 899, 900, 902, 900});
    const auto tr = crf::make_transitions<double>(2);
    const double z = crf::log_partition(em, tr);
    EXPECT_TRUE(std::isfinite(z));
    EXPECT_NEAR(z, crf::oracle::brute_force_log_z(em, tr), 1e-9);
}

TEST(Crf, SingleLabelSingleToken)
{
    Tensor<double> em(1, 1, 0.7);
    auto tr = crf::make_transitions<double>(1);
    tr(1, 0) = 0.1;
    tr(0, 2) = 0.2;
    EXPECT_NEAR(crf::log_partition(em, tr), 1.0, 1e-12);
    EXPECT_EQ(crf::viterbi_decode(em, tr).path, std::vector<std::size_t>{0});
}

TEST(Crf, OracleRefusesHugeInstances)
{
    Tensor<double> em(30, 4);
    const auto tr = crf::make_transitions<double>(4);
    EXPECT_THROW(crf::oracle::brute_force_log_z(em, tr), Error);
}

TEST(Crf, FloatMatchesDoubleClosely)
{
    std::mt19937_64 rng(19);
    for (int k = 0; k < 50; ++k) {
        const auto x = random_instance(rng, 5, 4);
        const double z64 = crf::log_partition(x.em, x.trans);
        const float z32 = crf::log_partition(x.em.cast<float>(), x.trans.cast<float>());
        EXPECT_NEAR(z32, z64, 1e-4);
    }
}

TEST(Crf, ClosedFormsForUniformPotentials)
{
    const auto tr = crf::make_transitions<double>(2);
    EXPECT_NEAR(crf::log_partition(Tensor<double>(1, 2, 0.0), tr), std::log(2.0), 1e-15);
    EXPECT_NEAR(crf::log_partition(Tensor<double>(3, 2, 0.0), tr), 3.0 * std::log(2.0), 1e-14);
    const std::vector<std::size_t> y{1, 0};
    const Tensor<double> em(2, 2, 0.0);
    EXPECT_EQ(crf::sequence_score<double>(em, tr, y), 0.0);
    EXPECT_NEAR(crf::log_likelihood<double>(em, tr, y), -2.0 * std::log(2.0), 1e-14);
}

TEST(Crf, SingleLabelHasCertainPath)
{
    std::mt19937_64 rng(4);
    auto tr = random_tensor<double>(3, 3, rng);
    crf::apply_mask(tr);
    const auto em = random_tensor<double>(4, 1, rng);
    const std::vector<std::size_t> y(4, 0);
    EXPECT_NEAR(crf::log_likelihood<double>(em, tr, y), 0.0, 1e-12);
    const auto best = crf::viterbi_decode(em, tr);
    EXPECT_EQ(best.path, y);
    double total = tr(1, 0) + tr(0, 2) + 3.0 * tr(0, 0);
    for (std::size_t i = 0; i < 4; ++i)
        total += em(i, 0);
    EXPECT_NEAR(best.score, total, 1e-12);
}

TEST(Crf, PeakedEmissionsDecodePerPosition)
{
    Tensor<double> em(4, 3, 0.0);
    const std::vector<std::size_t> want{2, 0, 1, 2};
    for (std::size_t i = 0; i < 4; ++i)
        em(i, want[i]) = 10.0;
    EXPECT_EQ(crf::viterbi_decode(em, crf::make_transitions<double>(3)).path, want);
}

TEST(Crf, EmissionShiftRaisesLogZByTc)
{
    std::mt19937_64 rng(8);
    for (int k = 0; k < 50; ++k) {
        auto x = random_instance(rng, 5, 4);
        const double z = crf::log_partition(x.em, x.trans);
        for (double& v : x.em.data())
            v += 1.75;
        EXPECT_NEAR(crf::log_partition(x.em, x.trans), z + 1.75 * static_cast<double>(x.em.rows()), 1e-9);
    }
}
