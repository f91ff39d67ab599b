// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 Sven Contributors

#include <gtest/gtest.h>

#include <json.hpp>

#include "sven/config.hpp"
#include "sven/run.hpp"
#include "support/metric_fixture.hpp"
#include "support/run_cli.hpp"
#include "support/temp_dir.hpp"

using sven::testing::run_cli;
using sven::testing::TempDir;

namespace {

const std::string kCli = SVEN_CLI_PATH;

std::map<std::string, std::string> parse_table(const std::string& text) {
    const auto rows = sven::text::lines(text);
    const auto head = sven::text::split(rows.at(0), '\t');
    const auto vals = sven::text::split(rows.at(1), '\t');
    std::map<std::string, std::string> out;
    for (std::size_t i = 0; i < head.size(); ++i) out[std::string(head[i])] = std::string(vals.at(i));
    return out;
}

std::string slurp(const std::filesystem::path& p) {
    const auto b = sven::io::read_file(p);
    return {b.begin(), b.end()};
}

} // namespace

TEST(Cli, MissingModelIsExitTwo) {
    TempDir dir;
    const auto r = run_cli(kCli, "retrieve --model " + (dir / "absent.sven").string() + " --corpus x.emb --queries y.emb -o run.txt",
                           dir.path());
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("model: not found"), std::string::npos) << r.err;
    EXPECT_EQ(std::count(r.err.begin(), r.err.end(), '\n'), 1);
}

TEST(Cli, UnknownConfigKeyIsExitOne) {
    TempDir dir;
    sven::io::write_text(dir / "bad.conf", "k = 5\nflavour = mint\n");
    const auto r = run_cli(kCli, "distances --config " + (dir / "bad.conf").string(), dir.path());
    EXPECT_EQ(r.code, 1);
    EXPECT_EQ(r.err.rfind("error: invalid_config: unknown config key 'flavour'", 0), 0u) << r.err;
}

TEST(Cli, EvaluateFixtureRun) {
    TempDir dir;
    const auto f = sven::testing::metric_fixture();
    sven::save_run(f.run, dir / "run.txt");
    std::string qrels;
    for (const auto& [q, ids] : f.qrels.relevant)
        for (const auto& id : ids) qrels += q + '\t' + id + '\n';
    sven::io::write_text(dir / "qrels.tsv", qrels);

    const auto r = run_cli(kCli, "evaluate --run " + (dir / "run.txt").string() + " --qrels " + (dir / "qrels.tsv").string() +
                                     " --threshold 0.5 --cutoffs 2",
                           dir.path());
    ASSERT_EQ(r.code, 0) << r.err;
    const auto t = parse_table(r.out);
    EXPECT_EQ(t.at("mode"), "P");
    EXPECT_EQ(t.at("n_queries"), "5");
    EXPECT_EQ(sven::text::parse_double(t.at("recall"), "recall"), f.recall);
    EXPECT_EQ(sven::text::parse_double(t.at("recall@2"), "recall@2"), f.recall_at_2);
    EXPECT_EQ(sven::text::parse_double(t.at("hit_rate"), "hit_rate"), f.hit_rate);
    EXPECT_EQ(sven::text::parse_double(t.at("mrr@10"), "mrr"), f.mrr10);
    EXPECT_NEAR(sven::text::parse_double(t.at("ndcg@20"), "ndcg"), f.ndcg20, 1e-15);
}

TEST(Cli, PlanIsReproducible) {
    TempDir dir;
    const std::string args = "plan --n 500 --subsets 6 --overlap 0.4 --seed 3";
    const auto a = run_cli(kCli, args, dir.path());
    const auto b = run_cli(kCli, args, dir.path());
    ASSERT_EQ(a.code, 0) << a.err;
    EXPECT_EQ(a.out, b.out);
    const auto j = nlohmann::json::parse(a.out);
    EXPECT_EQ(j.at("members").size(), 6u);
}

TEST(Cli, SmallPipelineEchoesConfig) {
    TempDir dir;
    const auto d = dir.path().string();
    auto r = run_cli(kCli, "synth -q -o " + d + "/data --n-passages 300 --n-queries 30 --dim 8 --clusters 3", dir.path());
    ASSERT_EQ(r.code, 0) << r.err;
    sven::io::write_text(dir / "exp.conf", "k = 8\nsubsets = 2\nC = 100\ngamma = 0.05\n");
    const std::string data = " --corpus " + d + "/data/corpus.emb --queries " + d + "/data/queries.emb";
    r = run_cli(kCli, "train -q --config " + d + "/exp.conf" + data + " --qrels " + d + "/data/qrels.tsv -o " + d + "/m.sven",
                dir.path());
    ASSERT_EQ(r.code, 0) << r.err;
    const auto report = nlohmann::json::parse(slurp(dir / "m.sven.report.json"));
    EXPECT_EQ(report.at("config").at("k"), "8");
    EXPECT_EQ(report.at("config").at("gamma"), "0.05");
    EXPECT_EQ(report.at("members").size(), 2u);

    r = run_cli(kCli, "retrieve -q --model " + d + "/m.sven" + data + " -o " + d + "/run.txt", dir.path());
    ASSERT_EQ(r.code, 0) << r.err;
    const auto meta = nlohmann::json::parse(slurp(dir / "run.txt.meta.json"));
    EXPECT_EQ(meta.at("model_config").at("subsets"), "2");
    EXPECT_EQ(meta.at("k"), 8);

    r = run_cli(kCli, "evaluate --run " + d + "/run.txt --qrels " + d + "/data/qrels.tsv --report " + d + "/m.sven.report.json",
                dir.path());
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.out.find("weighted_avg"), std::string::npos);
    const auto synth_conf = sven::parse_pairs(slurp(dir / "data/synth.conf"));
    EXPECT_FALSE(synth_conf.empty());
}
