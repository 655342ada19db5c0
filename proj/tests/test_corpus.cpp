#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include <nerae/corpus.hpp>
#include <nerae/eval.hpp>
#include <nerae/tagging.hpp>

#include "test_util.hpp"

using namespace nerae;

namespace {

const char* table1 = "U.N. NNP I-NP I-ORG\n"
                     "official NN I-NP O\n"
                     "Ekeus NNP I-NP I-PER\n"
                     "heads VBZ I-VP O\n"
                     "for IN I-PP O\n"
                     "Baghdad NNP I-NP I-LOC\n"
                     ". . O O\n";

// Random non-overlapping spans over `length` tokens; adjacent spans of the
// same type are allowed.
std::vector<SpanEntity> random_spans(std::mt19937_64& rng, std::size_t length)
{
    static const std::vector<std::string> types{"PER", "LOC", "ORG", "MISC"};
    std::vector<SpanEntity> spans;
    std::size_t i = 0;
    std::uniform_int_distribution<int> coin(0, 2);
    std::uniform_int_distribution<std::size_t> pick(0, types.size() - 1), span_len(1, 4);
    while (i < length) {
        if (coin(rng) == 0) {
            ++i;
            continue;
        }
        const std::size_t end = std::min(length - 1, i + span_len(rng) - 1);
        spans.push_back({types[pick(rng)], i, end});
        i = end + 1;
    }
    return spans;
}

std::vector<std::string> emit_iob2(const std::vector<SpanEntity>& spans, std::size_t length)
{
    std::vector<std::string> out(length, "O");
    for (const auto& s : spans) {
        out[s.start] = "B-" + s.type;
        for (std::size_t i = s.start + 1; i <= s.end; ++i)
            out[i] = "I-" + s.type;
    }
    return out;
}

std::vector<std::string> emit_iob1(const std::vector<SpanEntity>& spans, std::size_t length)
{
    std::vector<std::string> out(length, "O");
    for (std::size_t k = 0; k < spans.size(); ++k) {
        const auto& s = spans[k];
        const bool touches = k > 0 && spans[k - 1].end + 1 == s.start && spans[k - 1].type == s.type;
        for (std::size_t i = s.start; i <= s.end; ++i)
            out[i] = "I-" + s.type;
        if (touches)
            out[s.start] = "B-" + s.type;
    }
    return out;
}

} // namespace

TEST(Tagging, ParseTag)
{
    EXPECT_EQ(parse_tag("O")->prefix, 'O');
    EXPECT_EQ(parse_tag("B-PER")->type, "PER");
    EXPECT_FALSE(parse_tag("X-PER"));
    EXPECT_FALSE(parse_tag("PER"));
}

TEST(Tagging, Table1SentenceToIobes)
{
    const std::vector<std::string> iob1{"I-ORG", "O", "I-PER", "O", "O", "I-LOC", "O"};
    const std::vector<std::string> want{"S-ORG", "O", "S-PER", "O", "O", "S-LOC", "O"};
    EXPECT_EQ(to_iobes(iob1, Scheme::iob1), want);
    const std::vector<std::string> iob2{"B-ORG", "O", "B-PER", "O", "O", "B-LOC", "O"};
    EXPECT_EQ(to_iobes(iob2, Scheme::iob2), want);
}

TEST(Tagging, MultiTokenSpans)
{
    const std::vector<std::string> iob2{"B-PER", "I-PER", "I-PER", "O", "B-LOC", "I-LOC"};
    EXPECT_EQ(to_iobes(iob2, Scheme::iob2),
              (std::vector<std::string>{"B-PER", "I-PER", "E-PER", "O", "B-LOC", "E-LOC"}));
}

TEST(Tagging, Iob1AdjacentSameTypeSpans)
{
    const std::vector<std::string> iob1{"I-PER", "I-PER", "B-PER", "O"};
    EXPECT_EQ(to_iobes(iob1, Scheme::iob1), (std::vector<std::string>{"B-PER", "E-PER", "S-PER", "O"}));
}

TEST(Tagging, StrictDecodingRejectsInvalidSequences)
{
    EXPECT_THROW(decode_spans({"O", "I-PER"}, Scheme::iob2), TagSequenceError);
    EXPECT_THROW(decode_spans({"B-PER", "O"}, Scheme::iob1), TagSequenceError);
    EXPECT_THROW(decode_spans({"B-PER", "O"}, Scheme::iobes), TagSequenceError);
    EXPECT_THROW(decode_spans({"E-PER"}, Scheme::iobes), TagSequenceError);
    EXPECT_THROW(decode_spans({"B-PER", "E-LOC"}, Scheme::iobes), TagSequenceError);
    EXPECT_THROW(decode_spans({"S-PER"}, Scheme::iob2), TagSequenceError);
    EXPECT_THROW(decode_spans({"Q"}, Scheme::iob2), TagSequenceError);
    try {
        decode_spans({"O", "O", "I-LOC"}, Scheme::iob2);
    } catch (const TagSequenceError& e) {
        EXPECT_EQ(e.index(), 2u);
    }
}

TEST(Tagging, EmitRejectsOverlap)
{
    EXPECT_THROW(emit_iobes({{"PER", 0, 2}, {"LOC", 2, 3}}, 5), Error);
    EXPECT_THROW(emit_iobes({{"PER", 3, 5}}, 5), Error);
}

TEST(Tagging, RoundTripThroughEverySchemeProperty)
{
    std::mt19937_64 rng(21);
    std::uniform_int_distribution<std::size_t> len(1, 15);
    for (int k = 0; k < 1000; ++k) {
        const std::size_t n = len(rng);
        const auto spans = random_spans(rng, n);
        const auto iobes = emit_iobes(spans, n);
        EXPECT_EQ(decode_spans(to_iobes(iobes, Scheme::iobes), Scheme::iobes), spans);
        EXPECT_EQ(decode_spans(to_iobes(emit_iob2(spans, n), Scheme::iob2), Scheme::iobes), spans);
        EXPECT_EQ(decode_spans(to_iobes(emit_iob1(spans, n), Scheme::iob1), Scheme::iobes), spans);
        EXPECT_EQ(spans_from_iobes(iobes), spans);
    }
}

TEST(Corpus, ParsesTable1Sentence)
{
    const auto s = parse_conll(std::string(table1));
    ASSERT_EQ(s.size(), 1u);
    ASSERT_EQ(s[0].size(), 7u);
    EXPECT_EQ(s[0].tokens[0].surface, "U.N.");
    EXPECT_EQ(*s[0].tokens[2].pos, "NNP");
    EXPECT_EQ(*s[0].tokens[3].chunk, "I-VP");
    EXPECT_EQ(s[0].tokens[5].gold_label, "I-LOC");
}

TEST(Corpus, SkipsDocstartAndSplitsOnBlankLines)
{
    const std::string text = "-DOCSTART- -X- -X- O\n\nA DT I-NP O\n\n\nB NN I-NP O\nC NN I-NP O\n";
    const auto s = parse_conll(text);
    ASSERT_EQ(s.size(), 2u);
    EXPECT_EQ(s[1].size(), 2u);
    ReaderOptions keep;
    keep.keep_docstart = true;
    EXPECT_EQ(parse_conll(text, keep).size(), 3u);
}

TEST(Corpus, RaggedRowNamesTheLine)
{
    const std::string text = "A DT I-NP O\nB NN O\n";
    try {
        parse_conll(text);
        FAIL() << "expected ParseError";
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 2u);
        EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
    }
}

TEST(Corpus, EmptyInputGivesNoSentences) { EXPECT_TRUE(parse_conll(std::string()).empty()); }

TEST(Corpus, CustomColumnLayout)
{
    ReaderOptions o;
    o.columns = {"word", "dep", "ner"};
    const auto s = parse_conll(std::string("Ekeus nsubj B-PER\n"), o);
    EXPECT_EQ(*s[0].tokens[0].dep_label, "nsubj");
    EXPECT_FALSE(s[0].tokens[0].pos);
    o.columns = {"pos", "ner"};
    EXPECT_THROW(parse_conll(std::string("NN O\n"), o), ConfigError);
}

TEST(Corpus, SerializeParseRoundTripProperty)
{
    std::mt19937_64 rng(22);
    const std::vector<std::string> words{"Ekeus", "heads", "for", "Baghdad", ".", "U.N.", "Mr.", "1996"};
    std::uniform_int_distribution<std::size_t> pick(0, words.size() - 1), len(1, 8), nsent(1, 5);
    ReaderOptions opts;
    opts.columns = {"word", "pos", "chunk", "dep", "ner"};
    for (int k = 0; k < 200; ++k) {
        std::vector<SentenceRecord> corpus(nsent(rng));
        for (auto& s : corpus) {
            const auto n = len(rng);
            const auto labels = emit_iobes(random_spans(rng, n), n);
            for (std::size_t i = 0; i < n; ++i)
                s.tokens.push_back(Token{words[pick(rng)], "NN", "I-NP", "dep", labels[i]});
        }
        EXPECT_EQ(parse_conll(serialize_conll(corpus, opts), opts), corpus);
    }
}

TEST(Corpus, DetectScheme)
{
    EXPECT_EQ(detect_scheme(parse_conll(std::string(table1))), Scheme::iob1);
    EXPECT_EQ(detect_scheme(parse_conll(std::string("A NN I-NP B-PER\nB NN I-NP I-PER\n"))), Scheme::iob2);
    EXPECT_EQ(detect_scheme(parse_conll(std::string("A NN I-NP S-PER\n"))), Scheme::iobes);
}

TEST(Corpus, ConvertErrorNamesSentence)
{
    auto s = parse_conll(std::string("A NN I-NP O\n\nB NN I-NP O\nC NN I-NP I-PER\n"));
    try {
        convert_to_iobes(s, Scheme::iob2);
        FAIL() << "expected TagSequenceError";
    } catch (const TagSequenceError& e) {
        EXPECT_NE(std::string(e.what()).find("sentence 1"), std::string::npos);
        EXPECT_EQ(e.index(), 1u);
    }
}

TEST(Corpus, ToyCorpusLoadsAsIobes)
{
    ReaderOptions o;
    o.columns = {"word", "pos", "chunk", "dep", "ner"};
    const auto train = load_corpus(nerae::testing::data_path("toy/train.txt"), o);
    EXPECT_EQ(train.size(), 20u);
    std::set<std::string> types;
    for (const auto& s : train) {
        EXPECT_NO_THROW(decode_spans(s.labels(), Scheme::iobes));
        for (const auto& sp : decode_spans(s.labels(), Scheme::iobes))
            types.insert(sp.type);
    }
    EXPECT_EQ(types, (std::set<std::string>{"LOC", "PER"}));
}

TEST(Vocabulary, ReservedIdsAndLookup)
{
    const auto s = parse_conll(std::string(table1));
    std::vector<SentenceRecord> iobes = s;
    convert_to_iobes(iobes, Scheme::iob1);
    const auto v = build_vocab(iobes, std::vector<std::string>{"the"});
    EXPECT_EQ(v.words.at(Vocabulary::unk), "<unk>");
    EXPECT_EQ(v.words.at(Vocabulary::pad), "<pad>");
    EXPECT_EQ(v.labels.at(Vocabulary::outside), "O");
    EXPECT_TRUE(v.words.find("the"));
    EXPECT_EQ(v.word_id("Ekeus"), *v.words.find("Ekeus"));
    EXPECT_EQ(v.word_id("unseen-token"), Vocabulary::unk);
    // Every entity type gets all four IOBES labels.
    for (const char* l : {"B-PER", "I-PER", "E-PER", "S-PER", "S-LOC", "S-ORG"})
        EXPECT_NO_THROW(v.label_id(l)) << l;
    EXPECT_THROW(v.label_id("S-MISC"), Error);
}

TEST(Vocabulary, CaseFoldedFallback)
{
    const auto v = build_vocab(std::vector<SentenceRecord>{}, std::vector<std::string>{"baghdad"});
    EXPECT_EQ(v.word_id("Baghdad"), *v.words.find("baghdad"));
}

TEST(Vocabulary, HashIsOrderSensitiveAndStable)
{
    const IdMap a(std::vector<std::string>{"x", "y"});
    const IdMap b(std::vector<std::string>{"y", "x"});
    EXPECT_NE(a.hash(), b.hash());
    EXPECT_EQ(a.hash(), IdMap(std::vector<std::string>{"x", "y"}).hash());
}

TEST(Vocabulary, EmptyCorpusHoldsOnlyReservedEntries)
{
    const auto v = build_vocab(std::vector<SentenceRecord>{}, std::vector<std::string>{});
    EXPECT_EQ(v.words.size(), 2u);
    ASSERT_EQ(v.labels.size(), 1u);
    EXPECT_EQ(v.labels.at(0), "O");
}

TEST(Corpus, SingleTokenFile)
{
    const auto s = parse_conll(std::string("U.N. NNP I-NP I-ORG\n\n"));
    ASSERT_EQ(s.size(), 1u);
    ASSERT_EQ(s[0].tokens.size(), 1u);
    EXPECT_EQ(s[0].tokens[0].gold_label, "I-ORG");
}
