#pragma once

#include <nlohmann/json.hpp>

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_set>
#include <variant>
#include <vector>

namespace autokg {

// Controls how surface text is reduced before display or comparison.
struct NormalizePolicy {
    bool casefold = false;
    // Collapse internal whitespace runs; when false only the ends are trimmed
    // (useful for whitespace-sensitive scripts).
    bool collapse_whitespace = true;
};

inline constexpr NormalizePolicy kDisplayPolicy{false, true};
inline constexpr NormalizePolicy kScoringPolicy{true, true};

// Applies `policy` to `raw` without validating the result.
std::string normalize_text(std::string_view raw, NormalizePolicy policy = kDisplayPolicy);

// Comparison key used by every scorer: casefolded and whitespace-collapsed.
std::string scoring_key(std::string_view raw);

class EntityName {
public:
    // Throws Error{EmptyAfterNormalization}.
    explicit EntityName(std::string_view raw, NormalizePolicy policy = kDisplayPolicy);

    const std::string& raw() const noexcept { return raw_; }
    const std::string& normalized() const noexcept { return normalized_; }
    std::string key() const { return scoring_key(normalized_); }

    friend bool operator==(const EntityName& a, const EntityName& b) { return a.key() == b.key(); }

private:
    std::string raw_;
    std::string normalized_;
};

EntityName normalize_entity(std::string_view raw, NormalizePolicy policy = kDisplayPolicy);

// A closed predicate (or event-type) vocabulary. Labels keep dataset order.
class RelationVocabulary {
public:
    RelationVocabulary() = default;
    RelationVocabulary(std::string id, std::vector<std::string> labels, bool underscore_space_equivalent = false);

    const std::string& id() const noexcept { return id_; }
    const std::vector<std::string>& labels() const noexcept { return labels_; }
    bool underscore_space_equivalent() const noexcept { return underscore_space_equivalent_; }
    bool empty() const noexcept { return labels_.empty(); }

    // Canonical vocabulary label matching `label` case-insensitively
    // (and modulo '_' vs ' ' when the vocabulary declares that equivalence).
    std::optional<std::string> find(std::string_view label) const;
    bool contains(std::string_view label) const { return find(label).has_value(); }

    friend bool operator==(const RelationVocabulary& a, const RelationVocabulary& b) {
        return a.id_ == b.id_ && a.labels_ == b.labels_ &&
               a.underscore_space_equivalent_ == b.underscore_space_equivalent_;
    }

private:
    std::string match_key(std::string_view label) const;

    std::string id_;
    std::vector<std::string> labels_;
    bool underscore_space_equivalent_ = false;
};

struct RelationType {
    std::string label;
    std::optional<std::string> vocabulary_id;

    RelationType() = default;
    // Throws Error{EmptyAfterNormalization} on a blank label.
    explicit RelationType(std::string_view label_text, std::optional<std::string> vocab_id = std::nullopt);
    // Throws Error{UnknownPredicate} when `label_text` is not in `vocab`; the
    // stored label is the vocabulary's canonical spelling.
    RelationType(std::string_view label_text, const RelationVocabulary& vocab);

    std::string key() const { return scoring_key(label); }
    friend bool operator==(const RelationType& a, const RelationType& b) { return a.key() == b.key(); }
};

struct Triple {
    EntityName subject;
    RelationType predicate;
    EntityName object;

    // Unit-separator joined scoring keys; equal keys <=> equal triples.
    std::string key() const;
    friend bool operator==(const Triple& a, const Triple& b) { return a.key() == b.key(); }
};

Triple make_triple(std::string_view subject, std::string_view predicate, std::string_view object);

// Ordered, duplicate-free triple store. First insertion wins.
class KnowledgeGraph {
public:
    KnowledgeGraph() = default;
    explicit KnowledgeGraph(std::optional<RelationVocabulary> vocabulary);

    // Returns false when an equal triple is already stored.
    // Throws Error{UnknownPredicate} when the predicate is outside the vocabulary.
    bool insert(Triple t);
    bool contains(const Triple& t) const { return keys_.contains(t.key()); }

    const std::vector<Triple>& triples() const noexcept { return triples_; }
    std::size_t size() const noexcept { return triples_.size(); }
    bool empty() const noexcept { return triples_.empty(); }
    const std::optional<RelationVocabulary>& vocabulary() const noexcept { return vocabulary_; }

private:
    std::vector<Triple> triples_;
    std::unordered_set<std::string> keys_;
    std::optional<RelationVocabulary> vocabulary_;
};

inline bool insert_triple(KnowledgeGraph& graph, Triple t) { return graph.insert(std::move(t)); }

struct MergeResult {
    KnowledgeGraph graph;
    std::size_t added = 0;
    std::size_t duplicates = 0;
};

// Union of a and b (a's order first). Throws Error{VocabularyMismatch} when
// both graphs carry different vocabularies.
MergeResult merge_graphs(const KnowledgeGraph& a, const KnowledgeGraph& b);

// Distinct subjects and objects in first-appearance order.
std::vector<EntityName> entities_of(const KnowledgeGraph& graph);

// [{"subject","predicate","object"}, ...] in raw form.
nlohmann::ordered_json graph_to_json(const KnowledgeGraph& graph);
KnowledgeGraph graph_from_json(const nlohmann::ordered_json& j,
                               std::optional<RelationVocabulary> vocabulary = std::nullopt);
std::string graph_to_dot(const KnowledgeGraph& graph);

struct EventMention {
    std::string sentence;
    std::vector<std::string> event_types;
};

// Deduplicates types and checks each against `vocabulary`.
// Throws Error{UnknownPredicate} for labels outside it.
EventMention make_event_mention(std::string sentence, const std::vector<std::string>& types,
                                const RelationVocabulary& vocabulary);

enum class Language { En, Zh };

std::string_view to_string(Language language) noexcept;
Language parse_language(std::string_view name);

enum class TaskKind { RE, EE, LP, QA, VKE };

std::string_view to_string(TaskKind kind) noexcept;
// Throws Error{InvalidConfig} for unknown names.
TaskKind parse_task_kind(std::string_view name);

struct LinkQuery {
    static constexpr std::string_view kMask = "[MASK]";

    EntityName head;
    RelationType relation;

    std::string_view masked_tail() const noexcept { return kMask; }
};

struct SentenceInput {
    std::string sentence;
    std::string relation; // VKE: the known virtual predicate
    std::string language = "en";
};

struct QuestionInput {
    std::string question;
    std::string stratum; // e.g. hop count, used for proportional sampling
};

using TaskInput = std::variant<SentenceInput, LinkQuery, QuestionInput>;

struct TripleGold {
    std::vector<Triple> triples;
};
struct LabelGold {
    std::vector<std::string> labels;
};
struct AliasGold {
    std::vector<std::string> aliases;
};
struct AnswerGold {
    std::vector<std::string> answers;
};

using TaskGold = std::variant<TripleGold, LabelGold, AliasGold, AnswerGold>;

struct TaskInstance {
    std::string id;
    TaskKind kind = TaskKind::RE;
    TaskInput input;
    TaskGold gold;
};

// Throws Error{InvalidPayload} when the payload shapes do not match `kind`.
void validate(const TaskInstance& instance);

} // namespace autokg
