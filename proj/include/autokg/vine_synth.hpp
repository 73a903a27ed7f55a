#pragma once

#include "autokg/kg_model.hpp"
#include "autokg/rng.hpp"

#include <nlohmann/json.hpp>

#include <cstddef>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_set>
#include <utility>
#include <vector>

// Virtual knowledge datasets: invented entity and relation names substituted
// into an annotated seed corpus, so extraction cannot lean on memorized facts.
namespace autokg {

inline const std::vector<std::string>& default_suffixes() {
    static const std::vector<std::string> s{"ness", "tion", "ment", "ity", "er", "ism", "ous", "ance"};
    return s;
}

enum class WordCasing { Entity, Relation };

inline constexpr std::string_view kVirtualAlphabet = "abcdefghijklmnopqrstuvwxyz_";

// Stem of 7-9 symbols from kVirtualAlphabet plus one suffix. Entities get a
// capitalized first letter. Throws Error{EmptySuffixList}.
std::string gen_virtual_word(PortableRng& rng, const std::vector<std::string>& suffixes, WordCasing casing);

// Length and charset check for a virtual word (case-insensitive).
bool has_virtual_shape(std::string_view word, const std::vector<std::string>& suffixes);

// One word per line; stored lowercased.
using KnownVocabulary = std::unordered_set<std::string>;
KnownVocabulary load_known_vocabulary(const std::filesystem::path& path);
KnownVocabulary parse_known_vocabulary(std::string_view text);

using WordGenerator = std::function<std::string(PortableRng&, WordCasing)>;

struct LexiconOptions {
    std::vector<std::string> suffixes = default_suffixes();
    std::size_t max_retries = 100;    // consecutive rejections before RetryExhausted
    std::size_t min_vocabulary_size = 0;
    WordGenerator generator;          // empty: gen_virtual_word with `suffixes`
};

struct VirtualLexicon {
    std::map<std::string, std::string> entity_map;
    std::map<std::string, std::string> relation_map;

    std::size_t size() const noexcept { return entity_map.size() + relation_map.size(); }
};

// Originals are processed in sorted order so the result depends only on the
// seed and the input sets. Throws Error{VocabularyTooSmall} or
// Error{RetryExhausted}.
VirtualLexicon build_lexicon(const std::vector<std::string>& original_entities,
                             const std::vector<std::string>& original_relations, PortableRng& rng,
                             const KnownVocabulary& known, const LexiconOptions& options = {});

// Byte offsets [start, end) into text.
using Span = std::pair<std::size_t, std::size_t>;

struct SeedSentence {
    std::string text;
    Span head;
    Span tail;
    std::string relation;

    std::string head_text() const { return text.substr(head.first, head.second - head.first); }
    std::string tail_text() const { return text.substr(tail.first, tail.second - tail.first); }
};

// Throws Error{InvalidSpan}: spans in bounds, non-empty, non-overlapping.
void validate_spans(const SeedSentence& s);

struct VkeDataset {
    std::vector<SeedSentence> sentences;
    std::vector<std::string> relations; // sorted
    // First two sentences (by index) per relation.
    std::map<std::string, std::vector<std::size_t>> demos;

    Triple gold_triple(std::size_t i) const;
};

// Throws Error{UnmappedSymbol}.
VkeDataset substitute_corpus(const std::vector<SeedSentence>& corpus, const VirtualLexicon& lexicon);

struct DatasetStats {
    std::size_t sentences = 0;
    std::size_t relations = 0;
    std::size_t unique_entities = 0;
    std::size_t backfilled = 0;
};

// Tops up relations below `min_quota` from `train_pool` (already substituted)
// in pool order. Throws Error{QuotaUnmet} naming the deficient relations.
DatasetStats validate_dataset(VkeDataset& dataset, std::size_t min_quota = 10,
                              const std::vector<SeedSentence>* train_pool = nullptr);

// Seed JSONL: {"text","head":[s,e],"tail":[s,e],"relation"} with code-point
// offsets. Output JSONL adds "gold_triple".
std::vector<SeedSentence> parse_seed_corpus(std::string_view jsonl);
std::vector<SeedSentence> load_seed_corpus(const std::filesystem::path& path);
std::string dataset_to_jsonl(const VkeDataset& dataset);
nlohmann::ordered_json stats_to_json(const DatasetStats& stats);

struct VineBuildOptions {
    std::uint64_t seed = 1234;
    std::size_t min_quota = 10;
    LexiconOptions lexicon;
};

struct VineBuildResult {
    VirtualLexicon lexicon;
    VkeDataset dataset;
    DatasetStats stats;
};

// End-to-end: lexicon over corpus (and pool) symbols, substitution, quota.
VineBuildResult build_vine_dataset(const std::vector<SeedSentence>& corpus, const KnownVocabulary& known,
                                   const VineBuildOptions& options,
                                   const std::vector<SeedSentence>* train_pool = nullptr);

} // namespace autokg
