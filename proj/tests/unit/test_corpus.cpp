// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 Sven Contributors

#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <limits>
#include <random>

#include "sven/corpus.hpp"
#include "support/temp_dir.hpp"

using namespace sven;

namespace {

ErrorKind kind_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.kind();
    }
    ADD_FAILURE() << "expected an exception";
    return ErrorKind::InvalidParams;
}

std::vector<std::uint8_t> emb_header(std::uint32_t n, std::uint32_t d) {
    std::vector<std::uint8_t> b = {'E', 'M', 'B', '1'};
    for (auto v : {n, d})
        for (int i = 0; i < 4; ++i) b.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    return b;
}

} // namespace

TEST(Embeddings, SmallestValidFileLoads) {
    auto bytes = emb_header(2, 3);
    const float vals[6] = {1, 2, 3, 4, 5, 6};
    const auto* p = reinterpret_cast<const std::uint8_t*>(vals);
    bytes.insert(bytes.end(), p, p + 24);
    const auto m = decode_embeddings(bytes);
    EXPECT_EQ(m.n_rows, 2u);
    EXPECT_EQ(m.dim, 3u);
    EXPECT_EQ(m.row(1)[2], 6.0f);
}

TEST(Embeddings, ShortPayloadIsDimMismatch) {
    auto bytes = emb_header(2, 3);
    bytes.resize(bytes.size() + 20, 0);
    EXPECT_EQ(kind_of([&] { decode_embeddings(bytes); }), ErrorKind::DimMismatch);
}

TEST(Embeddings, BadMagicAndNonFinite) {
    auto bytes = emb_header(1, 1);
    bytes[3] = '2';
    bytes.resize(16, 0);
    EXPECT_EQ(kind_of([&] { decode_embeddings(bytes); }), ErrorKind::BadMagic);

    auto nan_file = emb_header(1, 1);
    const float nan = std::numeric_limits<float>::quiet_NaN();
    const auto* p = reinterpret_cast<const std::uint8_t*>(&nan);
    nan_file.insert(nan_file.end(), p, p + 4);
    EXPECT_EQ(kind_of([&] { decode_embeddings(nan_file); }), ErrorKind::NonFiniteValue);
}

TEST(Embeddings, OneByOneFileIsSixteenBytes) {
    const EmbeddingMatrix m(1, 1, {0.0f});
    const auto bytes = encode_embeddings(m);
    ASSERT_EQ(bytes.size(), 16u);
    EXPECT_EQ(std::memcmp(bytes.data(), "EMB1", 4), 0);
}

TEST(Embeddings, RoundTripIsBitExactAndDeterministic) {
    sven::testing::TempDir dir;
    std::mt19937 gen(3);
    std::uniform_real_distribution<float> u(-1e6f, 1e6f);
    EmbeddingMatrix m(17, 5);
    for (auto& v : m.data) v = u(gen);
    m.data[0] = -0.0f;
    m.data[1] = std::numeric_limits<float>::denorm_min();

    save_embeddings(m, dir / "a.emb");
    save_embeddings(m, dir / "b.emb");
    const auto back = load_embeddings(dir / "a.emb");
    ASSERT_EQ(back.data.size(), m.data.size());
    EXPECT_EQ(std::memcmp(back.data.data(), m.data.data(), m.data.size() * sizeof(float)), 0);
    EXPECT_EQ(io::read_file(dir / "a.emb"), io::read_file(dir / "b.emb"));
}

TEST(Embeddings, MissingFileIsNotFound) {
    EXPECT_EQ(kind_of([] { load_embeddings("/nonexistent/x.emb"); }), ErrorKind::NotFound);
}

TEST(Qrels, ParsesAndGroups) {
    const auto q = parse_qrels("q1\tp3\nq1\tp7\n");
    ASSERT_EQ(q.relevant.size(), 1u);
    EXPECT_EQ(q.relevant.at("q1"), (std::set<std::string>{"p3", "p7"}));
}

TEST(Qrels, DuplicatesCollapse) {
    const auto q = parse_qrels("q1\tp3\nq1\tp3\n");
    EXPECT_EQ(q.total_relevant(), 1u);
}

TEST(Qrels, ErrorPaths) {
    EXPECT_EQ(kind_of([] { parse_qrels(""); }), ErrorKind::EmptyJudgments);
    EXPECT_EQ(kind_of([] { parse_qrels("q1\tp1\tx\n"); }), ErrorKind::MalformedLine);
    EXPECT_EQ(kind_of([] { parse_qrels("q1 p1\n"); }), ErrorKind::MalformedLine);

    const CorpusIndex index({"p1", "p2"});
    const auto q = parse_qrels("q1\tp1\nq2\tp9\n");
    EXPECT_EQ(kind_of([&] { validate(q, index); }), ErrorKind::UnknownId);
}

TEST(CorpusIndex, RejectsDuplicateIdsAndUnknownDocs) {
    EXPECT_EQ(kind_of([] { CorpusIndex({"a", "a"}); }), ErrorKind::InvalidParams);
    EXPECT_EQ(kind_of([] { CorpusIndex({"a"}, {{"b", "D"}}); }), ErrorKind::UnknownId);
    const CorpusIndex index({"a", "b"}, {{"a", "D"}});
    EXPECT_EQ(index.document_of("a"), "D");
    EXPECT_EQ(index.document_of("b"), "b");
}

TEST(DocumentRun, KeepsBestPassagePerDocument) {
    const CorpusIndex index({"p1", "p2"}, {{"p1", "D"}, {"p2", "D"}});
    RunFile run;
    run.queries["q"] = {{"p1", 0.9, 1, true}, {"p2", 0.7, 2, true}};
    const auto doc = to_document_run(run, index);
    ASSERT_EQ(doc.queries.at("q").size(), 1u);
    EXPECT_EQ(doc.queries.at("q")[0], (RunEntry{"D", 0.9, 1, true}));
}

TEST(DocumentRun, IdentityMapLeavesRunUnchanged) {
    const CorpusIndex index({"a", "b", "c"});
    RunFile run;
    run.queries["q"] = {{"c", 3.0, 1, true}, {"a", 2.0, 2, false}, {"b", 1.0, 3, false}};
    EXPECT_EQ(to_document_run(run, index), run);
}

TEST(DocumentRun, InterleavedDocumentsRankByScore) {
    const CorpusIndex index({"p1", "p2", "p3", "p4"}, {{"p1", "A"}, {"p2", "B"}, {"p3", "A"}, {"p4", "B"}});
    RunFile run;
    run.queries["q"] = {{"p1", 0.9, 1, true}, {"p2", 0.8, 2, true}, {"p3", 0.7, 3, true}, {"p4", 0.95, 0, true}};
    rerank(run.queries["q"]);
    const auto doc = to_document_run(run, index);
    const auto& e = doc.queries.at("q");
    ASSERT_EQ(e.size(), 2u);
    EXPECT_EQ(e[0].id, "B");
    EXPECT_EQ(e[0].rank, 1u);
    EXPECT_EQ(e[1].id, "A");
    EXPECT_EQ(e[1].rank, 2u);
    EXPECT_LE(e.size(), run.queries.at("q").size());
}

TEST(DocumentRun, UnknownPassageThrows) {
    const CorpusIndex index({"p1"});
    RunFile run;
    run.queries["q"] = {{"zz", 1.0, 1, true}};
    EXPECT_EQ(kind_of([&] { to_document_run(run, index); }), ErrorKind::UnknownId);
}

TEST(RunFormat, TrecRoundTripKeepsScoresExactly) {
    RunFile run;
    run.tag = "abc123";
    run.queries["q1"] = {{"p2", 0.1 + 0.2, 1, true}, {"p1", -1.0 / 3.0, 2, false}};
    const auto text = format_trec(run);
    EXPECT_EQ(text.substr(0, text.find('\n')), "q1 Q0 p2 1 0.30000000000000004 abc123");
    const auto back = parse_trec(text, 0.0);
    EXPECT_EQ(back, run);
}

TEST(RunFormat, MalformedLineIsRejected) {
    EXPECT_EQ(kind_of([] { parse_trec("q1 Q0 p1 1\n", 0.5); }), ErrorKind::MalformedLine);
}
