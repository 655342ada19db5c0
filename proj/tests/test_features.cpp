#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include <nerae/corpus.hpp>
#include <nerae/features.hpp>
#include <nerae/text.hpp>

#include "test_util.hpp"

using namespace nerae;
using nerae::testing::data_path;

namespace {

const std::vector<std::string> table1_words{"U.N.", "official", "Ekeus", "heads", "for", "Baghdad", "."};

Gazetteer bundled_gazetteer()
{
    return load_gazetteer(data_path("gazetteer/person.txt"), data_path("gazetteer/location.txt"),
                          data_path("gazetteer/frequency.tsv"));
}

} // namespace

TEST(WordShape, Table1Row)
{
    const std::vector<std::string> want{"X.X.", "xxxx", "Xxxxx", "xxxx", "xxx", "Xxxxx", "."};
    for (std::size_t i = 0; i < table1_words.size(); ++i)
        EXPECT_EQ(word_shape(table1_words[i]), want[i]) << table1_words[i];
}

TEST(WordShape, DigitsAndRunCap)
{
    EXPECT_EQ(word_shape("1996"), "dddd");
    EXPECT_EQ(word_shape("123456"), "dddd");
    EXPECT_EQ(word_shape("AAAAAAb"), "XXXXx");
    EXPECT_EQ(word_shape("3-4"), "d-d");
    EXPECT_EQ(word_shape(""), "");
}

TEST(WordShape, RunsNeverExceedFourProperty)
{
    std::mt19937_64 rng(31);
    const std::string alphabet = "aZ9.-xQ";
    std::uniform_int_distribution<std::size_t> pick(0, alphabet.size() - 1), len(0, 20);
    for (int k = 0; k < 500; ++k) {
        std::string w;
        for (std::size_t i = len(rng); i > 0; --i)
            w += alphabet[pick(rng)];
        const auto s = word_shape(w);
        std::size_t run = 0;
        for (std::size_t i = 0; i < s.size(); ++i) {
            run = i > 0 && s[i] == s[i - 1] ? run + 1 : 1;
            EXPECT_LE(run, 4u) << w;
        }
        EXPECT_LE(s.size(), w.size());
        for (char c : s)
            EXPECT_TRUE(c == 'X' || c == 'x' || c == 'd' || c == '.' || c == '-') << w;
    }
}

TEST(Gazetteer, Table1Row)
{
    const auto gaz = bundled_gazetteer();
    const std::vector<std::string> want{"O", "O", "PER", "O", "O", "LOC", "O"};
    for (std::size_t i = 0; i < table1_words.size(); ++i)
        EXPECT_EQ(to_string(gazetteer_lookup(table1_words[i], gaz)), want[i]) << table1_words[i];
}

TEST(Gazetteer, FrequentTokensAreFiltered)
{
    const auto gaz = bundled_gazetteer();
    // "May" and "Nice" are in the name lists but common words.
    EXPECT_EQ(gazetteer_lookup("May", gaz), GazetteerMatch::none);
    EXPECT_EQ(gazetteer_lookup("Nice", gaz), GazetteerMatch::none);
    EXPECT_EQ(gazetteer_lookup("new", gaz), GazetteerMatch::none);
    EXPECT_EQ(gazetteer_lookup("York", gaz), GazetteerMatch::location);
    EXPECT_EQ(gazetteer_lookup("PARIS", gaz), GazetteerMatch::location);
    const auto unfiltered =
        load_gazetteer(data_path("gazetteer/person.txt"), data_path("gazetteer/location.txt"), "");
    EXPECT_EQ(gazetteer_lookup("May", unfiltered), GazetteerMatch::person);
}

TEST(Gazetteer, PersonWinsOverLocation)
{
    Gazetteer g;
    g.person_tokens = {"jordan"};
    g.location_tokens = {"jordan"};
    EXPECT_EQ(gazetteer_lookup("Jordan", g), GazetteerMatch::person);
}

TEST(Gazetteer, MalformedFrequencyLineNamesTheLine)
{
    std::istringstream p("a\n"), l("b\n"), f("the\t10\nbroken line\n");
    try {
        compile_gazetteer(p, l, f);
        FAIL() << "expected ParseError";
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 2u);
    }
}

TEST(Gazetteer, ThresholdIsInclusive)
{
    std::istringstream p("bush\nsmith\n"), l(""), f("bush\t100\nsmith\t99\n");
    const auto g = compile_gazetteer(p, l, f, 100);
    EXPECT_EQ(g.person_tokens, (std::set<std::string>{"smith"}));
}

TEST(Features, AssembleTable1Token)
{
    const auto sents = parse_conll(std::string("Ekeus NNP I-NP I-PER\nheads VBZ I-VP O\n"));
    const Vocabulary v = build_vocab(sents);
    const auto gaz = bundled_gazetteer();
    const auto fv = assemble_features(sents[0].tokens[0], gaz, v, FeatureConfig{});
    ASSERT_EQ(fv.segments.size(), 3u);
    EXPECT_EQ(fv.segments[0].type, FeatureType::pos);
    EXPECT_EQ(fv.segments[1].type, FeatureType::shape);
    EXPECT_EQ(fv.segments[2].type, FeatureType::gazetteer);
    EXPECT_EQ(v.pos.at(fv.segments[0].hot), "NNP");
    EXPECT_EQ(v.shapes.at(fv.segments[1].hot), "Xxxxx");
    EXPECT_EQ(fv.segments[2].hot, static_cast<std::size_t>(GazetteerMatch::person));
    EXPECT_EQ(fv.flat.size(), v.pos.size() + v.shapes.size() + 3);
}

TEST(Features, ExactlyOneHotPerSegmentProperty)
{
    ReaderOptions o;
    o.columns = {"word", "pos", "chunk", "dep", "ner"};
    const auto train = load_corpus(data_path("toy/train.txt"), o);
    const auto test = load_corpus(data_path("toy/test.txt"), o);
    const Vocabulary v = build_vocab(train);
    const auto gaz = bundled_gazetteer();
    for (int mask = 0; mask < 16; ++mask) {
        FeatureConfig fc{bool(mask & 1), bool(mask & 2), bool(mask & 4), bool(mask & 8)};
        for (const auto* split : {&train, &test})
            for (const auto& s : *split)
                for (const auto& t : s.tokens) {
                    const auto fv = assemble_features(t, gaz, v, fc);
                    ASSERT_EQ(fv.segments.size(), fc.active().size());
                    std::size_t ones = 0, dim = 0;
                    for (auto b : fv.flat)
                        ones += b;
                    for (const auto& seg : fv.segments) {
                        dim += seg.dim;
                        EXPECT_LT(seg.hot, seg.dim);
                    }
                    EXPECT_EQ(ones, fv.segments.size());
                    EXPECT_EQ(dim, fv.flat.size());
                }
    }
}

TEST(Features, UnseenValuesMapToOov)
{
    const auto train = parse_conll(std::string("Ekeus NNP I-NP I-PER\n"));
    const Vocabulary v = build_vocab(train);
    const Token t{"1996", "CD", "I-NP", std::nullopt, "O"};
    const auto fv = assemble_features(t, Gazetteer{}, v, FeatureConfig{});
    EXPECT_EQ(fv.segments[0].hot, Vocabulary::oov);
    EXPECT_EQ(fv.segments[1].hot, Vocabulary::oov);
}

TEST(Features, MissingColumnIsAnError)
{
    const Vocabulary v = build_vocab(parse_conll(std::string("w NN I-NP O\n")));
    const Token t{"word", std::nullopt, std::nullopt, std::nullopt, "O"};
    EXPECT_THROW(assemble_features(t, Gazetteer{}, v, FeatureConfig{}), Error);
    EXPECT_THROW(assemble_features(t, Gazetteer{}, v, FeatureConfig{false, false, false, true}), Error);
    EXPECT_NO_THROW(assemble_features(t, Gazetteer{}, v, FeatureConfig{false, true, true, false}));
    EXPECT_THROW(assemble_features(t, Gazetteer{}, Vocabulary{}, FeatureConfig{false, true, false, false}), Error);
}

TEST(Features, NamesRoundTrip)
{
    for (auto t : all_feature_types)
        EXPECT_EQ(feature_type_from_string(to_string(t)), t);
    EXPECT_THROW(feature_type_from_string("chunk"), ConfigError);
}

TEST(Gazetteer, SmallListsCompileAsExpected)
{
    std::istringstream p1("ekeus\n"), l1(""), f1("");
    EXPECT_EQ(compile_gazetteer(p1, l1, f1, 1).person_tokens, (std::set<std::string>{"ekeus"}));
    std::istringstream p2("will\n"), l2(""), f2("will\t1000000\n");
    EXPECT_TRUE(compile_gazetteer(p2, l2, f2, 10000).person_tokens.empty());
}

TEST(Features, AllDisabledGivesEmptyVector)
{
    const auto sents = parse_conll(std::string("U.N. NNP I-NP I-ORG\n"));
    const Vocabulary v = build_vocab(sents);
    const auto fv = assemble_features(sents[0].tokens[0], bundled_gazetteer(), v, FeatureConfig{false, false, false, false});
    EXPECT_TRUE(fv.segments.empty());
    EXPECT_TRUE(fv.flat.empty());
    const auto def = assemble_features(sents[0].tokens[0], bundled_gazetteer(), v, FeatureConfig{});
    std::size_t ones = 0;
    for (auto b : def.flat)
        ones += b;
    EXPECT_EQ(ones, 3u);
}
