#pragma once

#include "autokg/kg_model.hpp"

#include <nlohmann/json.hpp>

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

// Evaluation metrics. Every string comparison goes through scoring_key()
// (casefold + whitespace collapse).
namespace autokg::metrics {

using StringSet = std::vector<std::string>;

struct PrfScore {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t fn = 0;
};

// Pooled counts -> P/R/F1 with the zero-denominator conventions (P or R is 0
// when its denominator is 0, F1 is 0 when P + R is 0).
PrfScore prf_from_counts(std::size_t tp, std::size_t fp, std::size_t fn);

// Per-instance counts after set deduplication under scoring_key().
PrfScore instance_counts(const StringSet& prediction, const StringSet& gold);

// Micro-averaged P/R/F1. Throws Error{LengthMismatch}.
PrfScore micro_f1(const std::vector<StringSet>& predictions, const std::vector<StringSet>& golds);
// Triple variant: all three slots must match.
PrfScore micro_f1(const std::vector<std::vector<Triple>>& predictions, const std::vector<std::vector<Triple>>& golds);

// Fraction of predictions equal to any gold alias. Empty predictions miss.
double hits_at_1(const std::vector<std::string>& predicted_tails, const std::vector<StringSet>& gold_tails);
bool hit_at_1(std::string_view predicted_tail, const StringSet& gold_aliases);

// Lowercased, punctuation-stripped whitespace tokens.
std::vector<std::string> bleu_tokens(std::string_view s);

// Clipped unigram precision times the closest-reference brevity penalty.
// Throws Error{EmptyReference} when no reference has tokens.
double bleu1(std::string_view prediction, const std::vector<std::string>& references);

enum class MultiReferencePolicy {
    BestSingle, // max over references of bleu1(pred, {ref})
    Joint,      // bleu1(pred, all references)
};

// Mean per-instance BLEU-1 over a corpus. Throws Error{LengthMismatch}.
double mean_bleu1(const std::vector<std::string>& predictions, const std::vector<StringSet>& references,
                  MultiReferencePolicy policy = MultiReferencePolicy::BestSingle);
double instance_bleu1(std::string_view prediction, const StringSet& references, MultiReferencePolicy policy);

enum class ExactMatchPolicy { StrictSet, Superset };

std::string_view to_string(ExactMatchPolicy policy) noexcept;
ExactMatchPolicy parse_exact_match_policy(std::string_view name);

// Throws Error{EmptyGold}.
bool exact_match_instance(const StringSet& prediction, const StringSet& gold, ExactMatchPolicy policy);
// Throws Error{LengthMismatch} or Error{EmptyGold}.
double exact_match(const std::vector<StringSet>& predictions, const std::vector<StringSet>& golds,
                   ExactMatchPolicy policy = ExactMatchPolicy::Superset);

struct VkeOutcome {
    std::vector<Triple> parsed;
    Triple gold;
};

bool vke_correct(const VkeOutcome& outcome);
double vke_accuracy(const std::vector<VkeOutcome>& outcomes);

// Aggregate result with the per-instance breakdown it was computed from.
struct MetricReport {
    TaskKind task = TaskKind::RE;
    std::string metric; // "micro_f1", "hits@1", "bleu1", "exact_match", "vke_accuracy"
    double value = 0.0; // in [0, 1]
    std::vector<double> per_instance;
    std::optional<PrfScore> counts;                      // micro-F1 only
    std::vector<std::vector<std::size_t>> instance_counts; // micro-F1 only: {tp, fp, fn}
    nlohmann::ordered_json extra = nlohmann::ordered_json::object();
};

// Recomputes the aggregate from the breakdown (mean of per_instance, or
// micro-F1 from pooled instance counts).
double recompute(const MetricReport& report);

nlohmann::ordered_json to_json(const MetricReport& report);
MetricReport metric_report_from_json(const nlohmann::ordered_json& j);

} // namespace autokg::metrics
