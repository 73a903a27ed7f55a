#pragma once

#include "autokg/kg_model.hpp"

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

// Free-text model output -> structured answers.
//
// The triple and event-type parsers are total: every candidate fragment ends
// up either parsed or in `malformed` with a reason, and no input makes them
// throw. The LP and QA parsers throw Error{EmptyAnswer} when nothing usable
// remains, which callers score as an empty prediction.
namespace autokg {

struct MalformedFragment {
    std::string raw;
    std::string reason; // FieldCount, EmptyField, EmptyGroup, UnknownPredicate, Unbalanced, NestedBrackets, OutOfVocabulary
};

template <typename T>
struct ParseOutcome {
    std::vector<T> parsed;
    std::vector<MalformedFragment> malformed;

    std::size_t candidates() const noexcept { return parsed.size() + malformed.size(); }
};

// Extracts "[subject, predicate, object]" groups. An outer "[[...], ...]"
// wrapper is unwrapped; groups may be separated by anything (",", "、",
// newlines, prose). In Zh mode the full-width comma also separates fields.
ParseOutcome<Triple> parse_triples(std::string_view text,
                                   const std::optional<RelationVocabulary>& vocabulary = std::nullopt,
                                   Language language = Language::En);

// Canonical rendering: "[s, p, o]" groups joined by ", " (or "、" for Zh).
std::string format_triples(std::span<const Triple> triples, Language language = Language::En);

// Splits on commas and newlines after removing an "Event type:" / "Ans:"
// prefix; tokens match the vocabulary case-insensitively with spaces and
// underscores treated alike. Throws Error{EmptyVocabulary} for an empty
// vocabulary.
ParseOutcome<std::string> parse_event_types(std::string_view text, const RelationVocabulary& vocabulary);

std::string parse_lp_answer(std::string_view text);

// Distinct answers in first-appearance order.
std::vector<std::string> parse_qa_answers(std::string_view text);

} // namespace autokg
