// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 Sven Contributors

// sven: synth / train / retrieve / evaluate / distances / plan.
//
// Settings resolve in order: built-in defaults, --config file, --set
// key=value, then dedicated flags. Unknown keys are rejected everywhere.
// Exit codes: 0 ok, 1 invalid input, 2 missing resource, 3 internal.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "sven/bagging.hpp"
#include "sven/config.hpp"
#include "sven/corpus.hpp"
#include "sven/ensemble.hpp"
#include "sven/knn.hpp"
#include "sven/metrics.hpp"
#include "sven/synth.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

using Pairs = std::vector<std::pair<std::string, std::string>>;

struct Experiment {
    sven::TrainConfig train;
    sven::SynthConfig synth;
    std::map<std::string, std::string> paths = {{"corpus", ""}, {"queries", ""}, {"qrels", ""}, {"docs", ""},
                                                {"model", ""},  {"run", ""},     {"output", ""}};
    std::size_t threads = 0;
    sven::EvalMode mode = sven::EvalMode::passage;
    std::vector<std::size_t> cutoffs;
    std::set<std::string> explicit_keys;

    const std::string& path(const std::string& key) const { return paths.at(key); }
};

std::vector<std::size_t> parse_cutoffs(std::string_view s) {
    std::vector<std::size_t> out;
    for (auto part : sven::text::split(s, ',')) {
        const auto t = sven::text::trim(part);
        if (!t.empty()) out.push_back(sven::text::parse_u64(t, "cutoffs"));
    }
    return out;
}

std::string join_cutoffs(const std::vector<std::size_t>& c) {
    std::string out;
    for (std::size_t i = 0; i < c.size(); ++i) out += (i ? "," : "") + std::to_string(c[i]);
    return out;
}

void apply(Experiment& e, const std::string& key, const std::string& value) {
    using sven::text::parse_double;
    using sven::text::parse_u64;
    e.explicit_keys.insert(key);
    if (sven::apply_setting(e.train, key, value)) return;
    auto& s = e.synth;
    if (key == "n_passages") s.n_passages = parse_u64(value, key);
    else if (key == "n_queries") s.n_queries = parse_u64(value, key);
    else if (key == "dim") s.dim = parse_u64(value, key);
    else if (key == "n_clusters") s.n_clusters = parse_u64(value, key);
    else if (key == "cluster_sigma") s.cluster_sigma = parse_double(value, key);
    else if (key == "noise_sigma") s.noise_sigma = parse_double(value, key);
    else if (key == "passages_per_doc") s.passages_per_doc = parse_u64(value, key);
    else if (key == "synth_seed") s.seed = parse_u64(value, key);
    else if (key == "threads") e.threads = parse_u64(value, key);
    else if (key == "mode") e.mode = sven::parse_mode(sven::text::trim(value));
    else if (key == "cutoffs") e.cutoffs = parse_cutoffs(value);
    else if (e.paths.contains(key)) e.paths[key] = std::string(sven::text::trim(value));
    else sven::fail(sven::ErrorKind::InvalidConfig, "unknown config key '" + key + "'");
}

Pairs to_pairs(const Experiment& e) {
    Pairs p = sven::to_pairs(e.train);
    const auto& s = e.synth;
    p.insert(p.end(), {{"n_passages", std::to_string(s.n_passages)},
                       {"n_queries", std::to_string(s.n_queries)},
                       {"dim", std::to_string(s.dim)},
                       {"n_clusters", std::to_string(s.n_clusters)},
                       {"cluster_sigma", sven::text::format_double(s.cluster_sigma)},
                       {"noise_sigma", sven::text::format_double(s.noise_sigma)},
                       {"passages_per_doc", std::to_string(s.passages_per_doc)},
                       {"synth_seed", std::to_string(s.seed)},
                       {"mode", std::string(sven::to_string(e.mode))},
                       {"cutoffs", join_cutoffs(e.cutoffs)}});
    for (const auto& [k, v] : e.paths) p.emplace_back(k, v);
    return p;
}

json pairs_json(const Pairs& pairs) {
    json j = json::object();
    for (const auto& [k, v] : pairs) j[k] = v;
    return j;
}

/// Collects settings from the command line in resolution order.
struct Settings {
    std::string config_file;
    Pairs set_pairs;
    Pairs flag_pairs;
    bool quiet = false;

    void add_common(CLI::App* app) {
        app->add_option("--config", config_file, "key = value settings file");
        app->add_option_function<std::vector<std::string>>(
            "--set",
            [this](const std::vector<std::string>& items) {
                for (const auto& item : items) {
                    const auto eq = item.find('=');
                    if (eq == std::string::npos)
                        sven::fail(sven::ErrorKind::InvalidConfig, "--set expects key=value, got '" + item + "'");
                    set_pairs.emplace_back(std::string(sven::text::trim(std::string_view(item).substr(0, eq))),
                                           std::string(sven::text::trim(std::string_view(item).substr(eq + 1))));
                }
            },
            "override one setting (repeatable)");
        flag(app, "--threads", "threads", "worker threads (0 = all cores)");
        app->add_flag("--quiet,-q", quiet, "no log lines on stderr");
    }

    void flag(CLI::App* app, const std::string& name, const std::string& key, const std::string& help) {
        app->add_option_function<std::string>(
            name, [this, key](const std::string& v) { flag_pairs.emplace_back(key, v); }, help);
    }

    Experiment resolve() const {
        Experiment e;
        if (!config_file.empty()) {
            if (!fs::exists(config_file)) sven::fail(sven::ErrorKind::NotFound, "config: not found: " + config_file);
            const auto bytes = sven::io::read_file(config_file);
            for (const auto& [k, v] : sven::parse_pairs(std::string(bytes.begin(), bytes.end()))) apply(e, k, v);
        }
        for (const auto& [k, v] : set_pairs) apply(e, k, v);
        for (const auto& [k, v] : flag_pairs) apply(e, k, v);
        sven::validate(e.train);
        return e;
    }
};

struct Log {
    bool quiet = false;
    void operator()(const std::string& line) const {
        if (!quiet) std::cerr << "sven: " << line << '\n';
    }
};

const std::string& require(const Experiment& e, const std::string& key, const std::string& flag) {
    const auto& v = e.path(key);
    if (v.empty()) sven::fail(sven::ErrorKind::InvalidConfig, "missing setting '" + key + "' (" + flag + ")");
    return v;
}

std::string fixed(double v, int digits) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

struct Collection {
    sven::EmbeddingMatrix matrix;
    sven::CorpusIndex index;
};

Collection load_collection(const Experiment& e) {
    const fs::path corpus = require(e, "corpus", "--corpus");
    Collection c;
    c.matrix = sven::load_embeddings(corpus);
    sven::validate(c.matrix);
    auto ids = sven::load_ids(sven::ids_path(corpus));
    if (ids.size() != c.matrix.n_rows)
        sven::fail(sven::ErrorKind::DimMismatch, "corpus has " + std::to_string(c.matrix.n_rows) + " rows but " +
                                                     std::to_string(ids.size()) + " ids");
    std::map<std::string, std::string> doc_map;
    if (!e.path("docs").empty()) doc_map = sven::load_doc_map(e.path("docs"));
    c.index = sven::CorpusIndex(std::move(ids), doc_map);
    return c;
}

sven::QuerySet load_queries(const Experiment& e) {
    const fs::path path = require(e, "queries", "--queries");
    sven::QuerySet q;
    q.embeddings = sven::load_embeddings(path);
    sven::validate(q.embeddings);
    q.query_ids = sven::load_ids(sven::ids_path(path));
    return q;
}

json stats_json(const sven::ClassStats& c) {
    return {{"precision", c.precision}, {"recall", c.recall}, {"f1", c.f1}, {"support", c.support}};
}

json report_json(const sven::ClassificationReport& r) {
    return {{"0", stats_json(r.classes[0])},
            {"1", stats_json(r.classes[1])},
            {"accuracy", r.accuracy},
            {"macro_avg", stats_json(r.macro_avg)},
            {"weighted_avg", stats_json(r.weighted_avg)},
            {"tp", r.tp},
            {"fp", r.fp},
            {"fn", r.fn},
            {"tn", r.tn}};
}

sven::ClassStats stats_from_json(const json& j) {
    return {j.at("precision").get<double>(), j.at("recall").get<double>(), j.at("f1").get<double>(),
            j.at("support").get<std::size_t>()};
}

sven::ClassificationReport report_from_json(const json& j) {
    sven::ClassificationReport r;
    r.classes[0] = stats_from_json(j.at("0"));
    r.classes[1] = stats_from_json(j.at("1"));
    r.accuracy = j.at("accuracy").get<double>();
    r.macro_avg = stats_from_json(j.at("macro_avg"));
    r.weighted_avg = stats_from_json(j.at("weighted_avg"));
    r.tp = j.at("tp").get<std::size_t>();
    r.fp = j.at("fp").get<std::size_t>();
    r.fn = j.at("fn").get<std::size_t>();
    r.tn = j.at("tn").get<std::size_t>();
    return r;
}

fs::path report_path(const fs::path& model) { return fs::path(model.string() + ".report.json"); }
fs::path meta_path(const fs::path& run) { return fs::path(run.string() + ".meta.json"); }

// ---- subcommands ----------------------------------------------------------

int cmd_synth(const Experiment& e, const Log& log) {
    const fs::path dir = require(e, "output", "--output");
    const auto data = sven::generate(e.synth);
    sven::write_dataset(data, dir);
    sven::io::write_text(dir / "synth.conf", sven::format_pairs(to_pairs(e)));
    const auto check = sven::self_check(data);
    std::string summary;
    for (const auto& [k, frac] : check.within_top) summary += " top" + std::to_string(k) + "=" + fixed(frac, 4);
    log("wrote " + std::to_string(e.synth.n_passages) + " passages, " + std::to_string(e.synth.n_queries) +
        " queries to " + dir.string());
    std::cout << "needle rank:" << summary << " median=" << sven::text::format_double(check.distances.median_rank)
              << '\n';
    return 0;
}

int cmd_train(const Experiment& e, const Log& log) {
    const fs::path model_path = require(e, "model", "--output");
    const auto col = load_collection(e);
    const auto queries = load_queries(e);
    const auto qrels = sven::load_qrels(require(e, "qrels", "--qrels"));

    log("training " + std::to_string(e.train.s) + " members on " + std::to_string(col.matrix.n_rows) + " passages, " +
        std::to_string(queries.size()) + " queries");
    const auto t0 = std::chrono::steady_clock::now();
    const auto trained = sven::train_ensemble(col.matrix, col.index, queries, qrels, e.train, e.threads);
    const double secs = seconds_since(t0);

    const auto bytes = sven::encode_model(trained.model);
    sven::io::write_file(model_path, bytes);

    const auto& rep = trained.report;
    json members = json::array();
    for (std::size_t j = 0; j < rep.members.size(); ++j) {
        const auto& m = rep.members[j];
        members.push_back({{"subset_size", m.subset_size},
                           {"assigned_queries", m.assigned_queries},
                           {"queries_used", m.build.queries_used},
                           {"queries_skipped", m.build.queries_skipped},
                           {"positives_injected", m.build.positives_injected},
                           {"rows", m.rows},
                           {"train_rows", m.train_rows},
                           {"test_rows", m.test_rows},
                           {"svr",
                            {{"iterations", m.svr.iterations},
                             {"converged", m.svr.converged},
                             {"max_violation", m.svr.max_violation},
                             {"objective", m.svr.objective},
                             {"gamma", m.svr.gamma},
                             {"n_support", m.svr.n_support}}},
                           {"kkt_violation", m.kkt_violation},
                           {"test_report", report_json(m.test_report)}});
        log("member " + std::to_string(j + 1) + "/" + std::to_string(rep.members.size()) + ": rows " +
            std::to_string(m.rows) + ", sv " + std::to_string(m.svr.n_support) + ", iterations " +
            std::to_string(m.svr.iterations) + (m.svr.converged ? "" : " (not converged)"));
    }
    json report = {{"config", pairs_json(to_pairs(e))},
                   {"model_tag", sven::model_tag_from_bytes(bytes)},
                   {"dim", trained.model.dim},
                   {"n_passages", col.matrix.n_rows},
                   {"n_queries", queries.size()},
                   {"total_rows", rep.total_rows},
                   {"queries_skipped", rep.queries_skipped},
                   {"positives_injected", rep.positives_injected},
                   {"all_converged", rep.all_converged},
                   {"train_seconds", secs},
                   {"test_report", report_json(rep.test_report)},
                   {"members", members}};
    sven::io::write_text(report_path(model_path), report.dump(2) + "\n");
    log("wrote " + model_path.string() + " in " + fixed(secs, 1) + "s");
    std::cout << sven::format_classification_report(rep.test_report);
    return 0;
}

int cmd_retrieve(const Experiment& e, const Log& log) {
    const fs::path model_path = require(e, "model", "--model");
    const fs::path run_path = require(e, "run", "--output");
    if (!fs::exists(model_path)) sven::fail(sven::ErrorKind::NotFound, "model: not found");
    const auto bytes = sven::io::read_file(model_path);
    const auto model = sven::decode_model(bytes);
    const auto col = load_collection(e);
    const auto queries = load_queries(e);

    sven::RetrieveOptions opts;
    if (e.explicit_keys.contains("infer_k")) opts.k = e.train.infer_k;
    if (e.explicit_keys.contains("k")) opts.k = e.train.k;
    if (e.explicit_keys.contains("threshold")) opts.threshold = e.train.threshold;

    const auto t0 = std::chrono::steady_clock::now();
    const auto tag = sven::model_tag_from_bytes(bytes);
    const auto run = sven::retrieve_all(model, col.matrix, col.index, queries, opts, e.threads, tag);
    sven::save_run(run, run_path);

    const std::size_t k = opts.k ? opts.k : model.config.inference_k();
    const double threshold = opts.threshold.value_or(model.config.threshold);
    std::size_t positives = 0;
    for (const auto& [q, entries] : run.queries)
        for (const auto& x : entries) positives += x.positive;
    json meta = {{"model", model_path.string()},
                 {"model_tag", tag},
                 {"k", k},
                 {"threshold", threshold},
                 {"queries", run.queries.size()},
                 {"positives", positives},
                 {"model_config", pairs_json(sven::to_pairs(model.config))},
                 {"config", pairs_json(to_pairs(e))}};
    sven::io::write_text(meta_path(run_path), meta.dump(2) + "\n");
    log("wrote " + std::to_string(run.queries.size()) + " queries, " + std::to_string(positives) + " positives to " +
        run_path.string() + " in " + fixed(seconds_since(t0), 1) + "s");
    return 0;
}

int cmd_evaluate(const Experiment& e, const std::string& format, const std::string& report_file, const Log& log) {
    const fs::path run_path = require(e, "run", "--run");
    if (!fs::exists(run_path)) sven::fail(sven::ErrorKind::NotFound, "run: not found");

    double threshold = e.train.threshold;
    if (!e.explicit_keys.contains("threshold") && fs::exists(meta_path(run_path))) {
        const auto bytes = sven::io::read_file(meta_path(run_path));
        threshold = json::parse(bytes.begin(), bytes.end()).at("threshold").get<double>();
    }
    auto run = sven::load_run(run_path, threshold);
    auto qrels = sven::load_qrels(require(e, "qrels", "--qrels"));

    if (e.mode == sven::EvalMode::document) {
        const auto& docs = require(e, "docs", "--docs");
        const auto doc_map = sven::load_doc_map(docs);
        std::vector<std::string> ids;
        if (!e.path("corpus").empty()) {
            ids = sven::load_ids(sven::ids_path(e.path("corpus")));
        } else {
            for (const auto& [pid, doc] : doc_map) ids.push_back(pid);
        }
        const sven::CorpusIndex index(std::move(ids), doc_map);
        run = sven::to_document_run(run, index);
        qrels = sven::to_document_qrels(qrels, index);
    }
    const auto result = sven::evaluate(run, qrels, e.mode, e.cutoffs);

    std::optional<sven::ClassificationReport> held_out;
    if (!report_file.empty()) {
        if (!fs::exists(report_file)) sven::fail(sven::ErrorKind::NotFound, "report: not found");
        const auto bytes = sven::io::read_file(report_file);
        held_out = report_from_json(json::parse(bytes.begin(), bytes.end()).at("test_report"));
    }

    json j = {{"mode", std::string(sven::to_string(result.mode))},
              {"n_queries", result.n_queries},
              {"threshold", threshold},
              {"recall", result.recall},
              {"hit_rate", result.hit_rate},
              {"mrr@10", result.mrr_at_10},
              {"ndcg@20", result.ndcg_at_20}};
    for (const auto& [c, v] : result.recall_at) j["recall@" + std::to_string(c)] = v;
    if (held_out) j["test_report"] = report_json(*held_out);

    std::string text;
    if (format == "json") {
        text = j.dump(2) + "\n";
    } else {
        text = sven::format_eval_table(result);
        if (held_out) text += "\n" + sven::format_classification_report(*held_out);
    }
    std::cout << text;
    if (!e.path("output").empty()) {
        j["config"] = pairs_json(to_pairs(e));
        sven::io::write_text(e.path("output"), j.dump(2) + "\n");
        log("wrote " + e.path("output"));
    }
    return 0;
}

int cmd_distances(const Experiment& e, const Log& log) {
    const auto col = load_collection(e);
    const auto queries = load_queries(e);
    const auto qrels = sven::load_qrels(require(e, "qrels", "--qrels"));
    const auto rep = sven::distance_stats(queries, qrels, col.matrix, col.index, e.train.metric);
    std::string out;
    for (const auto& [k, v] : to_pairs(e)) out += "# " + k + " = " + v + '\n';
    out += sven::format_distance_report(rep);
    if (e.path("output").empty()) {
        std::cout << out;
    } else {
        sven::io::write_text(e.path("output"), out);
        log("wrote " + e.path("output"));
    }
    return 0;
}

int cmd_plan(std::size_t n, std::size_t s, double overlap, std::uint64_t seed, const std::string& output) {
    const auto plan = sven::make_plan(n, s, overlap, seed);
    json j = {{"n_passages", plan.n_passages},
              {"subsets", plan.s},
              {"overlap", plan.overlap},
              {"seed", plan.seed},
              {"base_shard_size", plan.base_shard_size},
              {"members", plan.subsets}};
    const auto text = j.dump() + "\n";
    if (output.empty()) std::cout << text;
    else sven::io::write_text(output, text);
    return 0;
}

int exit_code(sven::ErrorKind kind) {
    switch (kind) {
    case sven::ErrorKind::NotFound:
    case sven::ErrorKind::IoFailure: return 2;
    default: return 1;
    }
}

int error_line(std::string_view kind, std::string_view message, int code) {
    std::string flat(message);
    for (auto& c : flat)
        if (c == '\n' || c == '\r') c = ' ';
    std::cerr << "error: " << kind << ": " << flat << '\n';
    return code;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Bagged SVR ensemble retrieval over embedding collections"};
    app.require_subcommand(1);

    Settings settings;
    auto* synth = app.add_subcommand("synth", "write a synthetic planted-needle dataset");
    auto* train = app.add_subcommand("train", "train the ensemble");
    auto* retrieve = app.add_subcommand("retrieve", "write a TREC run for a query set");
    auto* evaluate = app.add_subcommand("evaluate", "score a run against relevance judgments");
    auto* distances = app.add_subcommand("distances", "nearest-relevant distance report");
    auto* plan = app.add_subcommand("plan", "print a bagging plan as JSON");

    for (auto* sub : {synth, train, retrieve, evaluate, distances}) settings.add_common(sub);

    settings.flag(synth, "--output,-o", "output", "dataset directory");
    settings.flag(synth, "--seed", "synth_seed", "generator seed");
    settings.flag(synth, "--n-passages", "n_passages", "collection size");
    settings.flag(synth, "--n-queries", "n_queries", "query count");
    settings.flag(synth, "--dim", "dim", "embedding width");
    settings.flag(synth, "--clusters", "n_clusters", "mixture components");
    settings.flag(synth, "--cluster-sigma", "cluster_sigma", "spread around each center");
    settings.flag(synth, "--noise-sigma", "noise_sigma", "query displacement");
    settings.flag(synth, "--passages-per-doc", "passages_per_doc", "passages grouped into one document");

    for (auto* sub : {train, retrieve, distances}) {
        settings.flag(sub, "--corpus", "corpus", "collection .emb (ids from the .ids sidecar)");
        settings.flag(sub, "--queries", "queries", "query .emb (ids from the .ids sidecar)");
        settings.flag(sub, "--docs", "docs", "passage-to-document TSV");
    }
    for (auto* sub : {train, distances, evaluate}) settings.flag(sub, "--qrels", "qrels", "judgments TSV");
    settings.flag(train, "--output,-o", "model", "model file");
    settings.flag(train, "--seed", "seed", "bagging / split seed");
    settings.flag(train, "--k", "k", "neighbors per query");
    settings.flag(train, "--subsets", "subsets", "ensemble size");
    settings.flag(train, "--overlap", "overlap", "extra rows per subset, as a fraction of its shard");
    settings.flag(train, "--threshold", "threshold", "decision threshold for held-out reports");
    settings.flag(train, "--metric", "metric", "euclidean|cosine");

    settings.flag(retrieve, "--model", "model", "model file");
    settings.flag(retrieve, "--output,-o", "run", "run file");
    settings.flag(retrieve, "--k", "k", "neighbors per member at inference");
    settings.flag(retrieve, "--threshold", "threshold", "decision threshold");

    std::string format = "tsv", report_file;
    settings.flag(evaluate, "--run", "run", "TREC run file");
    settings.flag(evaluate, "--mode", "mode", "passage|document");
    settings.flag(evaluate, "--docs", "docs", "passage-to-document TSV (document mode)");
    settings.flag(evaluate, "--corpus", "corpus", "collection .emb whose ids define the passages");
    settings.flag(evaluate, "--threshold", "threshold", "positive iff score >= threshold (default: from run metadata)");
    settings.flag(evaluate, "--cutoffs", "cutoffs", "extra recall cutoffs, e.g. 10,100");
    settings.flag(evaluate, "--output,-o", "output", "also write JSON here");
    evaluate->add_option("--format", format, "tsv|json")->check(CLI::IsMember({"tsv", "json"}));
    evaluate->add_option("--report", report_file, "training report JSON for the held-out classification table");

    settings.flag(distances, "--metric", "metric", "euclidean|cosine");
    settings.flag(distances, "--output,-o", "output", "TSV path (stdout if absent)");

    std::size_t plan_n = 0, plan_s = 35;
    double plan_overlap = 0.6;
    std::uint64_t plan_seed = 42;
    std::string plan_output;
    plan->add_option("--n", plan_n, "collection size")->required();
    plan->add_option("--subsets", plan_s, "ensemble size");
    plan->add_option("--overlap", plan_overlap, "overlap fraction");
    plan->add_option("--seed", plan_seed, "seed");
    plan->add_option("--output,-o", plan_output, "JSON path (stdout if absent)");

    try {
        try {
            app.parse(argc, argv);
        } catch (const CLI::Success& s) {
            return app.exit(s);
        } catch (const CLI::ParseError& pe) {
            return error_line("invalid_arguments", pe.what(), 1);
        }
        if (plan->parsed()) return cmd_plan(plan_n, plan_s, plan_overlap, plan_seed, plan_output);

        const auto exp = settings.resolve();
        const Log log{settings.quiet};
        if (synth->parsed()) return cmd_synth(exp, log);
        if (train->parsed()) return cmd_train(exp, log);
        if (retrieve->parsed()) return cmd_retrieve(exp, log);
        if (evaluate->parsed()) return cmd_evaluate(exp, format, report_file, log);
        if (distances->parsed()) return cmd_distances(exp, log);
        return 3;
    } catch (const sven::Error& err) {
        return error_line(sven::to_string(err.kind()), err.what(), exit_code(err.kind()));
    } catch (const json::exception& err) {
        return error_line("malformed_json", err.what(), 1);
    } catch (const std::exception& err) {
        return error_line("internal", err.what(), 3);
    }
}
