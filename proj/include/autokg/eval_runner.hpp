#pragma once

#include "autokg/kg_model.hpp"
#include "autokg/metrics.hpp"
#include "autokg/prompt_forge.hpp"
#include "autokg/rng.hpp"

#include <nlohmann/json.hpp>

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

// Experiment engine: dataset loading, sampling, demonstration choice, the
// prompt -> gateway -> parser -> metric pipeline, and benchmark tables.
namespace autokg {

// JSON Lines schemas, one object per line:
//   RE  {"id"?, "sentence", "triples":[{"subject","relation","object"}], "language"?}
//   EE  {"id"?, "sentence", "event_types":[...]}
//   LP  {"id"?, "head", "relation", "tail": "x" | ["alias", ...]}
//   QA  {"id"?, "question", "answers":[...], "hop"|"stratum"?}
//   VKE {"id"?, "text", "relation", "gold_triple":[h, r, t]}
// Missing ids become "<line number>". Throws Error{SchemaError} naming the
// line, or Error{EmptyDataset}.
std::vector<TaskInstance> parse_dataset(std::string_view jsonl, TaskKind kind);
std::vector<TaskInstance> load_dataset(const std::filesystem::path& path, TaskKind kind);

// Coverage labels: relations (RE, LP, VKE), event types (EE), stratum (QA).
std::vector<std::string> instance_labels(const TaskInstance& instance);

enum class CoveragePolicy { AllLabels, ProportionalByHop, None };

std::string_view to_string(CoveragePolicy policy) noexcept;
CoveragePolicy parse_coverage_policy(std::string_view name);

// Indices into `instances`, ascending. Throws Error{SampleTooLarge} or
// Error{CoverageInfeasible}.
std::vector<std::size_t> sample_instances(const std::vector<TaskInstance>& instances, std::size_t n,
                                          CoveragePolicy policy, PortableRng& rng);

// Largest-remainder apportionment of n over stratum counts (ties go to the
// earlier stratum).
std::vector<std::size_t> apportion(const std::vector<std::size_t>& counts, std::size_t n);

// Demonstration text for an instance as it would appear in a prompt.
Demonstration make_demonstration(const TaskInstance& instance, Language language = Language::En);

struct DemoConstraints {
    std::optional<std::string> relation; // only instances carrying this label
    std::size_t count = 1;
    std::vector<std::string> excluded_ids;
};

// Uniform draw without replacement. Throws Error{NoEligibleDemo}.
std::vector<std::size_t> pick_demo(const std::vector<TaskInstance>& pool, PortableRng& rng,
                                   const DemoConstraints& constraints = {});

struct ExperimentConfig {
    std::string name;  // dataset column label, e.g. "FreebaseQA"
    std::string model; // row label
    TaskKind task = TaskKind::RE;
    std::filesystem::path dataset;
    std::optional<std::filesystem::path> train; // demonstration pool
    std::string split = "test";
    PromptMode mode = PromptMode::ZeroShot;
    std::optional<std::size_t> sample_size; // all instances when unset
    std::uint64_t seed = 0;
    CoveragePolicy coverage = CoveragePolicy::None;
    nlohmann::json backend = nlohmann::json::object();
    Language language = Language::En;
    std::vector<std::string> vocabulary; // RE predicates / EE types; derived from the data when empty
    bool underscore_space_equivalent = false;
    std::map<std::string, std::string> lp_templates; // relation -> "... {{head}} ..."
    std::string lp_metric = "hits@1";                // or "bleu1"
    metrics::ExactMatchPolicy exact_match = metrics::ExactMatchPolicy::Superset;
    metrics::MultiReferencePolicy bleu_references = metrics::MultiReferencePolicy::BestSingle;
    std::optional<std::string> system_preamble;
    std::optional<std::filesystem::path> template_dir;
    std::optional<std::size_t> context_window;
    std::size_t concurrency = 1;
    std::filesystem::path output_dir;
};

// Relative paths resolve against `base_dir`. Throws Error{InvalidConfig} or
// Error{SchemaError}.
ExperimentConfig experiment_config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
ExperimentConfig load_experiment_config(const std::filesystem::path& path);
nlohmann::ordered_json to_json(const ExperimentConfig& config);

struct InstanceRecord {
    std::string id;
    std::string prompt;
    std::string response;
    nlohmann::ordered_json parsed;
    nlohmann::ordered_json gold;
    double score = 0.0;
    std::vector<std::size_t> counts; // {tp, fp, fn} for micro-F1 tasks
    std::string error;               // backend or parse failure, scored as empty
    std::vector<std::string> malformed;
};

struct RunArtifact {
    ExperimentConfig config;
    std::vector<std::string> demo_ids;
    std::vector<InstanceRecord> records;
    metrics::MetricReport report;
};

// Fatal errors happen before the first backend call; per-instance failures
// are recorded and scored as empty predictions. Writes the artifact to
// config.output_dir when it is set.
RunArtifact run_eval(const ExperimentConfig& config);

void write_artifact(const RunArtifact& artifact, const std::filesystem::path& dir);
// Reads config.json + report.json + instances.jsonl back.
RunArtifact read_artifact(const std::filesystem::path& dir);

struct ReportCell {
    std::string model;
    std::string dataset;
    PromptMode mode = PromptMode::ZeroShot;
    std::string metric;
    double value = 0.0; // [0, 1]
};

struct RenderedReport {
    std::string markdown;
    nlohmann::ordered_json json;
};

// Fine-tuned SOTA row, in percent, keyed by dataset column.
const std::map<std::string, double>& sota_reference();

// Zero-shot and one-shot blocks, one row per model, columns in the
// standard benchmark order followed by any others alphabetically. Throws
// Error{DimensionMismatch} on mixed metrics in a column or duplicate cells.
RenderedReport render_report(const std::vector<ReportCell>& cells);
RenderedReport render_report(const std::vector<RunArtifact>& artifacts);

} // namespace autokg
