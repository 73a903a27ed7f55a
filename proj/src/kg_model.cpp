#include "autokg/kg_model.hpp"

#include "autokg/error.hpp"
#include "autokg/text.hpp"

#include <fmt/format.h>

#include <algorithm>

namespace autokg {

std::string normalize_text(std::string_view raw, NormalizePolicy policy) {
    std::string out = policy.collapse_whitespace ? text::collapse_whitespace(raw) : std::string(text::trim(raw));
    if (policy.casefold)
        out = text::ascii_lower(out);
    return out;
}

std::string scoring_key(std::string_view raw) { return normalize_text(raw, kScoringPolicy); }

EntityName::EntityName(std::string_view raw, NormalizePolicy policy)
    : raw_(raw), normalized_(normalize_text(raw, policy)) {
    if (normalized_.empty())
        throw Error(ErrorCode::EmptyAfterNormalization, fmt::format("entity '{}' is blank", raw_));
}

EntityName normalize_entity(std::string_view raw, NormalizePolicy policy) { return EntityName(raw, policy); }

RelationVocabulary::RelationVocabulary(std::string id, std::vector<std::string> labels,
                                       bool underscore_space_equivalent)
    : id_(std::move(id)), labels_(std::move(labels)), underscore_space_equivalent_(underscore_space_equivalent) {}

std::string RelationVocabulary::match_key(std::string_view label) const {
    std::string k = scoring_key(label);
    if (underscore_space_equivalent_)
        std::replace(k.begin(), k.end(), '_', ' ');
    return k;
}

std::optional<std::string> RelationVocabulary::find(std::string_view label) const {
    const std::string wanted = match_key(label);
    for (const auto& l : labels_) {
        if (match_key(l) == wanted)
            return l;
    }
    return std::nullopt;
}

RelationType::RelationType(std::string_view label_text, std::optional<std::string> vocab_id)
    : label(normalize_text(label_text)), vocabulary_id(std::move(vocab_id)) {
    if (label.empty())
        throw Error(ErrorCode::EmptyAfterNormalization, "relation label is blank");
}

RelationType::RelationType(std::string_view label_text, const RelationVocabulary& vocab) {
    auto canonical = vocab.find(label_text);
    if (!canonical)
        throw Error(ErrorCode::UnknownPredicate,
                    fmt::format("'{}' is not in vocabulary '{}'", label_text, vocab.id()));
    label = *canonical;
    vocabulary_id = vocab.id();
}

std::string Triple::key() const {
    std::string k = subject.key();
    k.push_back('\x1f');
    k += predicate.key();
    k.push_back('\x1f');
    k += object.key();
    return k;
}

Triple make_triple(std::string_view subject, std::string_view predicate, std::string_view object) {
    return Triple{EntityName(subject), RelationType(predicate), EntityName(object)};
}

KnowledgeGraph::KnowledgeGraph(std::optional<RelationVocabulary> vocabulary) : vocabulary_(std::move(vocabulary)) {}

bool KnowledgeGraph::insert(Triple t) {
    if (vocabulary_) {
        // Store the vocabulary spelling so keys agree across equivalent labels.
        t.predicate = RelationType(t.predicate.label, *vocabulary_);
    }
    auto [_, fresh] = keys_.insert(t.key());
    if (!fresh)
        return false;
    triples_.push_back(std::move(t));
    return true;
}

MergeResult merge_graphs(const KnowledgeGraph& a, const KnowledgeGraph& b) {
    const auto& va = a.vocabulary();
    const auto& vb = b.vocabulary();
    if (va && vb && !(*va == *vb))
        throw Error(ErrorCode::VocabularyMismatch,
                    fmt::format("cannot merge graphs over vocabularies '{}' and '{}'", va->id(), vb->id()));

    MergeResult result{KnowledgeGraph(va ? va : vb), 0, 0};
    for (const auto& t : a.triples())
        result.graph.insert(t);
    for (const auto& t : b.triples()) {
        if (result.graph.insert(t))
            ++result.added;
        else
            ++result.duplicates;
    }
    return result;
}

std::vector<EntityName> entities_of(const KnowledgeGraph& graph) {
    std::vector<EntityName> out;
    std::unordered_set<std::string> seen;
    for (const auto& t : graph.triples()) {
        for (const EntityName* e : {&t.subject, &t.object}) {
            if (seen.insert(e->key()).second)
                out.push_back(*e);
        }
    }
    return out;
}

nlohmann::ordered_json graph_to_json(const KnowledgeGraph& graph) {
    auto arr = nlohmann::ordered_json::array();
    for (const auto& t : graph.triples()) {
        arr.push_back({{"subject", t.subject.raw()}, {"predicate", t.predicate.label}, {"object", t.object.raw()}});
    }
    return arr;
}

KnowledgeGraph graph_from_json(const nlohmann::ordered_json& j, std::optional<RelationVocabulary> vocabulary) {
    if (!j.is_array())
        throw Error(ErrorCode::SchemaError, "graph JSON must be an array");
    KnowledgeGraph g(std::move(vocabulary));
    for (const auto& item : j) {
        if (!item.is_object() || !item.contains("subject") || !item.contains("predicate") || !item.contains("object"))
            throw Error(ErrorCode::SchemaError, "graph entries need subject, predicate and object");
        g.insert(make_triple(item["subject"].get<std::string>(), item["predicate"].get<std::string>(),
                             item["object"].get<std::string>()));
    }
    return g;
}

namespace {
std::string dot_escape(std::string_view s) {
    std::string out;
    for (char c : s) {
        if (c == '"' || c == '\\')
            out.push_back('\\');
        if (c == '\n') {
            out += "\\n";
            continue;
        }
        out.push_back(c);
    }
    return out;
}
} // namespace

std::string graph_to_dot(const KnowledgeGraph& graph) {
    std::string out = "digraph kg {\n";
    for (const auto& e : entities_of(graph))
        out += fmt::format("  \"{}\";\n", dot_escape(e.normalized()));
    for (const auto& t : graph.triples()) {
        out += fmt::format("  \"{}\" -> \"{}\" [label=\"{}\"];\n", dot_escape(t.subject.normalized()),
                           dot_escape(t.object.normalized()), dot_escape(t.predicate.label));
    }
    out += "}\n";
    return out;
}

EventMention make_event_mention(std::string sentence, const std::vector<std::string>& types,
                                const RelationVocabulary& vocabulary) {
    EventMention m{std::move(sentence), {}};
    for (const auto& t : types) {
        auto canonical = vocabulary.find(t);
        if (!canonical)
            throw Error(ErrorCode::UnknownPredicate, fmt::format("event type '{}' is not in the vocabulary", t));
        if (std::find(m.event_types.begin(), m.event_types.end(), *canonical) == m.event_types.end())
            m.event_types.push_back(*canonical);
    }
    return m;
}

std::string_view to_string(Language language) noexcept { return language == Language::Zh ? "zh" : "en"; }

Language parse_language(std::string_view name) {
    if (text::iequals(name, "en"))
        return Language::En;
    if (text::iequals(name, "zh"))
        return Language::Zh;
    throw Error(ErrorCode::InvalidConfig, fmt::format("unknown language '{}'", name));
}

std::string_view to_string(TaskKind kind) noexcept {
    switch (kind) {
    case TaskKind::RE: return "RE";
    case TaskKind::EE: return "EE";
    case TaskKind::LP: return "LP";
    case TaskKind::QA: return "QA";
    case TaskKind::VKE: return "VKE";
    }
    return "?";
}

TaskKind parse_task_kind(std::string_view name) {
    for (auto k : {TaskKind::RE, TaskKind::EE, TaskKind::LP, TaskKind::QA, TaskKind::VKE}) {
        if (text::iequals(name, to_string(k)))
            return k;
    }
    throw Error(ErrorCode::InvalidConfig, fmt::format("unknown task kind '{}'", name));
}

void validate(const TaskInstance& instance) {
    auto fail = [&](std::string_view why) {
        throw Error(ErrorCode::InvalidPayload, fmt::format("instance '{}' ({}): {}", instance.id,
                                                           to_string(instance.kind), why));
    };
    switch (instance.kind) {
    case TaskKind::RE:
    case TaskKind::EE:
    case TaskKind::VKE: {
        const auto* in = std::get_if<SentenceInput>(&instance.input);
        if (!in)
            fail("input must be a sentence");
        if (text::trim(in->sentence).empty())
            fail("sentence is empty");
        if (instance.kind == TaskKind::EE) {
            if (!std::holds_alternative<LabelGold>(instance.gold))
                fail("gold must be an event-type set");
        } else {
            const auto* g = std::get_if<TripleGold>(&instance.gold);
            if (!g)
                fail("gold must be a triple set");
            if (instance.kind == TaskKind::VKE) {
                if (g->triples.size() != 1)
                    fail("gold must hold exactly one triple");
                if (in->relation.empty())
                    fail("the known relation is missing");
            }
        }
        break;
    }
    case TaskKind::LP: {
        if (!std::holds_alternative<LinkQuery>(instance.input))
            fail("input must be a link query");
        const auto* g = std::get_if<AliasGold>(&instance.gold);
        if (!g || g->aliases.empty())
            fail("gold must be a non-empty alias list");
        break;
    }
    case TaskKind::QA: {
        const auto* in = std::get_if<QuestionInput>(&instance.input);
        if (!in || text::trim(in->question).empty())
            fail("input must be a non-empty question");
        const auto* g = std::get_if<AnswerGold>(&instance.gold);
        if (!g || g->answers.empty())
            fail("gold must be a non-empty answer set");
        break;
    }
    }
}

} // namespace autokg
