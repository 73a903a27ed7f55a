#include "autokg/answer_parser.hpp"

#include "autokg/error.hpp"
#include "autokg/text.hpp"

#include <algorithm>
#include <array>
#include <unordered_set>

namespace autokg {

namespace {

constexpr std::string_view kFullWidthComma = "\xEF\xBC\x8C";    // ，
constexpr std::string_view kIdeographicComma = "\xE3\x80\x81";  // 、
constexpr std::string_view kFullWidthSemicolon = "\xEF\xBC\x9B"; // ；
constexpr std::string_view kEllipsis = "\xE2\x80\xA6";           // …

struct Group {
    std::string_view inner;
    std::string_view raw;
    bool closed = true;
};

// Top-level [...] groups of `s`. An unclosed '[' yields one final open group.
std::vector<Group> top_level_groups(std::string_view s) {
    std::vector<Group> groups;
    std::size_t i = 0;
    while (i < s.size()) {
        if (s[i] != '[') {
            ++i;
            continue;
        }
        int depth = 0;
        std::size_t j = i;
        for (; j < s.size(); ++j) {
            if (s[j] == '[') {
                ++depth;
            } else if (s[j] == ']' && --depth == 0) {
                break;
            }
        }
        if (j >= s.size()) {
            groups.push_back({s.substr(i + 1), s.substr(i), false});
            break;
        }
        groups.push_back({s.substr(i + 1, j - i - 1), s.substr(i, j - i + 1), true});
        i = j + 1;
    }
    return groups;
}

// True when everything outside the nested groups is list punctuation.
bool only_separators_outside_groups(std::string_view inner) {
    std::string residue;
    int depth = 0;
    for (char c : inner) {
        if (c == '[') {
            ++depth;
        } else if (c == ']') {
            --depth;
        } else if (depth == 0) {
            residue.push_back(c);
        }
    }
    std::string_view r = residue;
    while (!r.empty()) {
        char c = r.front();
        if (text::is_space(c) || c == ',' || c == ';' || c == '.') {
            r.remove_prefix(1);
            continue;
        }
        bool matched = false;
        for (auto sep : {kFullWidthComma, kIdeographicComma, kFullWidthSemicolon, kEllipsis}) {
            if (r.starts_with(sep)) {
                r.remove_prefix(sep.size());
                matched = true;
                break;
            }
        }
        if (!matched)
            return false;
    }
    return true;
}

std::vector<std::string_view> split_fields(std::string_view s, Language language) {
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    std::size_t i = 0;
    while (i < s.size()) {
        if (s[i] == ',') {
            fields.push_back(s.substr(start, i - start));
            start = ++i;
        } else if (language == Language::Zh && s.substr(i).starts_with(kFullWidthComma)) {
            fields.push_back(s.substr(start, i - start));
            i += kFullWidthComma.size();
            start = i;
        } else {
            ++i;
        }
    }
    fields.push_back(s.substr(start));
    return fields;
}

std::string_view clean_field(std::string_view f) {
    f = text::trim(f);
    f = text::trim(text::strip_quotes(f));
    return f;
}

void parse_group_list(std::string_view s, const std::optional<RelationVocabulary>& vocabulary, Language language,
                      ParseOutcome<Triple>& out);

void parse_candidate(const Group& g, const std::optional<RelationVocabulary>& vocabulary, Language language,
                     ParseOutcome<Triple>& out) {
    if (!g.closed) {
        out.malformed.push_back({std::string(g.raw), "Unbalanced"});
        return;
    }
    if (g.inner.find('[') != std::string_view::npos) {
        if (only_separators_outside_groups(g.inner))
            parse_group_list(g.inner, vocabulary, language, out);
        else
            out.malformed.push_back({std::string(g.raw), "NestedBrackets"});
        return;
    }
    if (text::trim(g.inner).empty()) {
        out.malformed.push_back({std::string(g.raw), "EmptyGroup"});
        return;
    }
    auto fields = split_fields(g.inner, language);
    if (fields.size() != 3) {
        out.malformed.push_back({std::string(g.raw), "FieldCount"});
        return;
    }
    std::array<std::string_view, 3> slots{clean_field(fields[0]), clean_field(fields[1]), clean_field(fields[2])};
    if (std::any_of(slots.begin(), slots.end(), [](std::string_view f) { return f.empty(); })) {
        out.malformed.push_back({std::string(g.raw), "EmptyField"});
        return;
    }
    RelationType predicate;
    if (vocabulary) {
        auto canonical = vocabulary->find(slots[1]);
        if (!canonical) {
            out.malformed.push_back({std::string(g.raw), "UnknownPredicate"});
            return;
        }
        predicate = RelationType(*canonical, vocabulary->id());
    } else {
        predicate = RelationType(slots[1]);
    }
    out.parsed.push_back(Triple{EntityName(slots[0]), std::move(predicate), EntityName(slots[2])});
}

void parse_group_list(std::string_view s, const std::optional<RelationVocabulary>& vocabulary, Language language,
                      ParseOutcome<Triple>& out) {
    for (const auto& g : top_level_groups(s))
        parse_candidate(g, vocabulary, language, out);
}

std::string underscore_key(std::string_view label) {
    std::string k = scoring_key(label);
    std::replace(k.begin(), k.end(), '_', ' ');
    return text::collapse_whitespace(k);
}

std::string_view strip_prefix_ci(std::string_view s, std::initializer_list<std::string_view> prefixes) {
    s = text::trim(s);
    for (auto p : prefixes) {
        if (text::istarts_with(s, p))
            return text::trim(s.substr(p.size()));
    }
    return s;
}

std::string_view strip_trailing_punct(std::string_view s) {
    for (;;) {
        s = text::trim(s);
        if (!s.empty() && (s.back() == '.' || s.back() == '!' || s.back() == '?' || s.back() == ';' ||
                           s.back() == ',' || s.back() == ':')) {
            s.remove_suffix(1);
            continue;
        }
        if (s.ends_with("\xE3\x80\x82")) { // 。
            s.remove_suffix(3);
            continue;
        }
        return s;
    }
}

} // namespace

ParseOutcome<Triple> parse_triples(std::string_view text, const std::optional<RelationVocabulary>& vocabulary,
                                   Language language) {
    ParseOutcome<Triple> out;
    parse_group_list(text, vocabulary, language, out);
    return out;
}

std::string format_triples(std::span<const Triple> triples, Language language) {
    std::string out;
    const std::string_view sep = language == Language::Zh ? kIdeographicComma : std::string_view(", ");
    for (std::size_t i = 0; i < triples.size(); ++i) {
        if (i)
            out += sep;
        out += "[";
        out += triples[i].subject.normalized();
        out += ", ";
        out += triples[i].predicate.label;
        out += ", ";
        out += triples[i].object.normalized();
        out += "]";
    }
    return out;
}

ParseOutcome<std::string> parse_event_types(std::string_view text, const RelationVocabulary& vocabulary) {
    if (vocabulary.empty())
        throw Error(ErrorCode::EmptyVocabulary, "event-type vocabulary is empty");

    ParseOutcome<std::string> out;
    std::unordered_set<std::string> seen;
    for (auto line : text::split_lines(text)) {
        line = strip_prefix_ci(line, {"Event types:", "Event type:", "Ans:", "Answer:"});
        std::size_t start = 0;
        auto flush = [&](std::size_t end) {
            std::string_view tok = text::trim(line.substr(start, end - start));
            while (!tok.empty() && (tok.front() == '[' || tok.back() == ']')) {
                if (tok.front() == '[')
                    tok.remove_prefix(1);
                if (!tok.empty() && tok.back() == ']')
                    tok.remove_suffix(1);
                tok = text::trim(tok);
            }
            tok = strip_trailing_punct(text::trim(text::strip_quotes(text::trim(tok))));
            if (tok.empty())
                return;
            const std::string wanted = underscore_key(tok);
            for (const auto& label : vocabulary.labels()) {
                if (underscore_key(label) == wanted) {
                    if (seen.insert(label).second)
                        out.parsed.push_back(label);
                    return;
                }
            }
            out.malformed.push_back({std::string(tok), "OutOfVocabulary"});
        };
        std::size_t i = 0;
        while (i < line.size()) {
            std::size_t width = 0;
            if (line[i] == ',' || line[i] == ';')
                width = 1;
            else if (line.substr(i).starts_with(kFullWidthComma) || line.substr(i).starts_with(kIdeographicComma))
                width = 3;
            if (width) {
                flush(i);
                i += width;
                start = i;
            } else {
                ++i;
            }
        }
        flush(line.size());
    }
    return out;
}

std::string parse_lp_answer(std::string_view text) {
    constexpr std::string_view kMaskCue = "so the [MASK] is";
    std::string_view answer;
    if (auto pos = text::ifind(text, kMaskCue); pos != std::string_view::npos) {
        answer = text.substr(pos + kMaskCue.size());
        if (auto nl = answer.find('\n'); nl != std::string_view::npos)
            answer = answer.substr(0, nl);
    } else {
        for (auto line : text::split_lines(text)) {
            if (!text::trim(line).empty()) {
                answer = line;
                break;
            }
        }
        answer = strip_prefix_ci(answer, {"The answer is"});
    }
    answer = strip_trailing_punct(answer);
    answer = strip_trailing_punct(text::trim(text::strip_quotes(answer)));
    if (answer.empty())
        throw Error(ErrorCode::EmptyAnswer, "no tail entity in model output");
    return std::string(answer);
}

std::vector<std::string> parse_qa_answers(std::string_view text) {
    std::vector<std::string> answers;
    std::unordered_set<std::string> seen;
    for (auto line : text::split_lines(text)) {
        line = strip_prefix_ci(line, {"Answer:"});
        std::size_t start = 0;
        for (std::size_t i = 0; i <= line.size(); ++i) {
            if (i == line.size() || line[i] == '|') {
                auto a = text::trim(line.substr(start, i - start));
                if (!a.empty() && seen.insert(std::string(a)).second)
                    answers.emplace_back(a);
                start = i + 1;
            }
        }
    }
    if (answers.empty())
        throw Error(ErrorCode::EmptyAnswer, "no answers in model output");
    return answers;
}

} // namespace autokg
