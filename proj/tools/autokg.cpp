// Command-line front end: evaluation runs and reports, VINE dataset builds,
// multi-agent sessions, fixture recording/replay, and asset export.
#include "autokg/error.hpp"
#include "autokg/eval_runner.hpp"
#include "autokg/llm_gateway.hpp"
#include "autokg/orchestrator.hpp"
#include "autokg/prompt_forge.hpp"
#include "autokg/text.hpp"
#include "autokg/vine_synth.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace autokg;

namespace {

struct EvalRunArgs {
    fs::path config;
    std::optional<fs::path> out;
};

struct EvalReportArgs {
    std::vector<fs::path> runs;
    std::optional<fs::path> out;
};

struct VineArgs {
    fs::path seed_corpus;
    fs::path wordlist;
    std::uint64_t seed = 1234;
    std::size_t min_quota = 10;
    std::optional<fs::path> train_pool;
    fs::path out = "vine_out";
};

struct AgentsArgs {
    std::optional<fs::path> config;
    std::string task;
    std::size_t max_turns = 20;
    std::optional<fs::path> offline_fixtures;
    std::string model = "gpt-4";
    std::optional<fs::path> out;
};

struct GatewayArgs {
    fs::path log;
    fs::path fixture;
    fs::path out;
    std::string mode = "digest";
};

int eval_run(const EvalRunArgs& a) {
    auto config = load_experiment_config(a.config);
    if (a.out)
        config.output_dir = *a.out;
    if (config.output_dir.empty())
        config.output_dir = fs::path("runs") / fmt::format("{}-{}-{}", config.name, config.model, to_string(config.mode));
    auto art = run_eval(config);
    fmt::print("{} {} {}: {} = {:.4f} over {} instances -> {}\n", config.model, config.name, to_string(config.mode),
               art.report.metric, art.report.value, art.records.size(), config.output_dir.string());
    return 0;
}

int eval_report(const EvalReportArgs& a) {
    std::vector<RunArtifact> arts;
    for (const auto& dir : a.runs)
        arts.push_back(read_artifact(dir));
    auto r = render_report(arts);
    if (a.out) {
        fs::create_directories(*a.out);
        text::write_file(*a.out / "report.md", r.markdown);
        text::write_file(*a.out / "report.json", r.json.dump(2) + "\n");
    }
    fmt::print("{}", r.markdown);
    return 0;
}

int vine_build(const VineArgs& a) {
    auto corpus = load_seed_corpus(a.seed_corpus);
    auto known = load_known_vocabulary(a.wordlist);
    std::optional<std::vector<SeedSentence>> pool;
    if (a.train_pool)
        pool = load_seed_corpus(*a.train_pool);
    VineBuildOptions opts;
    opts.seed = a.seed;
    opts.min_quota = a.min_quota;
    auto r = build_vine_dataset(corpus, known, opts, pool ? &*pool : nullptr);
    fs::create_directories(a.out);
    text::write_file(a.out / "vine.jsonl", dataset_to_jsonl(r.dataset));
    nlohmann::ordered_json lex{{"entities", r.lexicon.entity_map}, {"relations", r.lexicon.relation_map}};
    text::write_file(a.out / "lexicon.json", lex.dump(2) + "\n");
    text::write_file(a.out / "stats.json", stats_to_json(r.stats).dump(2) + "\n");
    fmt::print("{} sentences, {} relations, {} entities -> {}\n", r.stats.sentences, r.stats.relations,
               r.stats.unique_entities, a.out.string());
    return 0;
}

int agents_run(const AgentsArgs& a) {
    nlohmann::json spec = nlohmann::json::object();
    fs::path base;
    if (a.config) {
        spec = nlohmann::json::parse(text::read_file(*a.config));
        base = a.config->parent_path();
    } else if (a.offline_fixtures) {
        // <dir>/responses.jsonl is replayed in call order; <dir>/search_results.json, if present, enables retrieval.
        base = *a.offline_fixtures;
        spec["backend"] = {{"kind", "scripted"}, {"fixture", "responses.jsonl"}, {"replay", "sequence"}};
        if (fs::exists(base / "search_results.json")) {
            spec["retrieval_enabled"] = true;
            spec["retriever"] = {{"kind", "fixture"}, {"path", "search_results.json"}};
        }
    } else {
        spec["backend"] = {{"kind", "live"}};
        spec["model"] = a.model;
    }
    if (!a.task.empty())
        spec["task"] = a.task;
    if (!spec.contains("max_turns"))
        spec["max_turns"] = a.max_turns;

    auto config = session_config_from_json(spec);
    llm::Gateway gateway(llm::make_backend(spec.at("backend"), base));
    std::unique_ptr<Retriever> retriever;
    if (spec.contains("retriever"))
        retriever = make_retriever(spec["retriever"], base);
    Orchestrator orchestrator(gateway, retriever.get());
    auto result = orchestrator.run_session(config);
    auto j = to_json(result, config);
    if (a.out) {
        fs::create_directories(*a.out);
        text::write_file(*a.out / "session.json", j.dump(2) + "\n");
        text::write_file(*a.out / "graph.dot", graph_to_dot(result.graph));
        text::write_file(*a.out / "run_log.jsonl", gateway.log().to_jsonl());
    } else {
        fmt::print("{}\n", j.dump(2));
    }
    spdlog::info("session {} after {} backend calls, {} triples", to_string(result.transcript.outcome),
                 result.transcript.backend_calls, result.graph.size());
    return result.transcript.outcome == SessionOutcome::BackendError ? 3 : 0;
}

int gateway_record(const GatewayArgs& a) {
    auto fixture = llm::record_fixture(llm::RunLog::parse_jsonl(text::read_file(a.log)));
    fixture.save(a.out);
    fmt::print("{} entries -> {}\n", fixture.entries.size(), a.out.string());
    return 0;
}

// Replays every request of a run log against a fixture and reports responses
// that differ from the logged ones.
int gateway_replay(const GatewayArgs& a) {
    auto log = llm::RunLog::parse_jsonl(text::read_file(a.log));
    llm::ScriptedBackend backend(llm::Fixture::load(a.fixture), llm::parse_replay_mode(a.mode));
    std::size_t mismatches = 0;
    for (const auto& e : log.entries()) {
        if (!e.error.empty())
            continue;
        nlohmann::ordered_json line{{"index", e.index}, {"digest", e.digest}};
        try {
            auto r = backend.send(e.request);
            line["response"] = r.text;
            line["matches_log"] = r.text == e.response;
            mismatches += r.text == e.response ? 0 : 1;
        } catch (const Error& err) {
            line["error"] = err.what();
            ++mismatches;
        }
        fmt::print("{}\n", line.dump());
    }
    return mismatches == 0 ? 0 : 4;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Knowledge-graph construction and reasoning with chat models"};
    app.require_subcommand(1);
    bool verbose = false;
    app.add_flag("-v,--verbose", verbose, "Debug logging");

    auto* eval = app.add_subcommand("eval", "Benchmark runs and reports");
    eval->require_subcommand(1);
    EvalRunArgs run_args;
    auto* run = eval->add_subcommand("run", "Run one experiment config");
    run->add_option("--config", run_args.config, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
    run->add_option("--out", run_args.out, "Artifact directory (overrides output_dir)");
    EvalReportArgs report_args;
    auto* report = eval->add_subcommand("report", "Render a results table from run directories");
    report->add_option("--runs", report_args.runs, "Run artifact directories")->required()->check(CLI::ExistingDirectory);
    report->add_option("--out", report_args.out, "Directory for report.md and report.json");

    auto* vine = app.add_subcommand("vine", "Virtual knowledge extraction datasets");
    vine->require_subcommand(1);
    VineArgs vine_args;
    auto* build = vine->add_subcommand("build", "Build a dataset from a seed corpus");
    build->add_option("--seed-corpus", vine_args.seed_corpus, "Seed sentences (JSONL)")->required()->check(CLI::ExistingFile);
    build->add_option("--wordlist", vine_args.wordlist, "Known-word list, one per line")->required()->check(CLI::ExistingFile);
    build->add_option("--seed", vine_args.seed, "Generator seed")->capture_default_str();
    build->add_option("--min-quota", vine_args.min_quota, "Sentences required per relation")->capture_default_str();
    build->add_option("--train-pool", vine_args.train_pool, "Backfill pool (JSONL)")->check(CLI::ExistingFile);
    build->add_option("--out", vine_args.out, "Output directory")->capture_default_str();

    auto* agents = app.add_subcommand("agents", "Multi-agent KG construction");
    agents->require_subcommand(1);
    AgentsArgs agents_args;
    auto* arun = agents->add_subcommand("run", "Run one session");
    arun->add_option("--task", agents_args.task, "Raw task description");
    arun->add_option("--config", agents_args.config, "Session config (JSON)")->check(CLI::ExistingFile);
    arun->add_option("--offline-fixtures", agents_args.offline_fixtures, "Directory with responses.jsonl")
        ->check(CLI::ExistingDirectory);
    arun->add_option("--max-turns", agents_args.max_turns, "Turn limit")->capture_default_str();
    arun->add_option("--model", agents_args.model, "Model name for the live backend")->capture_default_str();
    arun->add_option("--out", agents_args.out, "Directory for session.json, graph.dot and run_log.jsonl");

    auto* gw = app.add_subcommand("gateway", "Fixture recording and replay");
    gw->require_subcommand(1);
    GatewayArgs gw_args;
    auto* record = gw->add_subcommand("record", "Turn a run log into a replay fixture");
    record->add_option("--log", gw_args.log, "run_log.jsonl")->required()->check(CLI::ExistingFile);
    record->add_option("--out", gw_args.out, "Fixture path")->required();
    auto* replay = gw->add_subcommand("replay", "Replay a run log's requests against a fixture");
    replay->add_option("--fixture", gw_args.fixture, "Fixture (JSONL)")->required()->check(CLI::ExistingFile);
    replay->add_option("--requests", gw_args.log, "run_log.jsonl whose requests are replayed")
        ->required()
        ->check(CLI::ExistingFile);
    replay->add_option("--mode", gw_args.mode, "digest or sequence")->capture_default_str();

    fs::path export_dir;
    auto* templates = app.add_subcommand("templates", "Prompt template assets");
    templates->require_subcommand(1);
    auto* texport = templates->add_subcommand("export", "Write the built-in templates");
    texport->add_option("--out", export_dir, "Directory")->required();
    auto* personas = app.add_subcommand("personas", "Agent persona assets");
    personas->require_subcommand(1);
    auto* pexport = personas->add_subcommand("export", "Write the built-in personas");
    pexport->add_option("--out", export_dir, "Directory")->required();

    CLI11_PARSE(app, argc, argv);
    spdlog::set_level(verbose ? spdlog::level::debug : spdlog::level::info);

    try {
        if (*run)
            return eval_run(run_args);
        if (*report)
            return eval_report(report_args);
        if (*build)
            return vine_build(vine_args);
        if (*arun) {
            if (agents_args.task.empty() && !agents_args.config)
                throw Error(ErrorCode::InvalidConfig, "agents run needs --task or --config");
            return agents_run(agents_args);
        }
        if (*record)
            return gateway_record(gw_args);
        if (*replay)
            return gateway_replay(gw_args);
        if (*texport) {
            TemplatePack::builtin().save_directory(export_dir);
            return 0;
        }
        if (*pexport) {
            PersonaPack::builtin().save_directory(export_dir);
            return 0;
        }
    } catch (const Error& e) {
        spdlog::error("{}", e.what());
        return 2;
    } catch (const std::exception& e) {
        spdlog::error("{}", e.what());
        return 2;
    }
    return 1;
}
