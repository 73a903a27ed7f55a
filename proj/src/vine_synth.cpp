#include "autokg/vine_synth.hpp"

#include "autokg/error.hpp"
#include "autokg/text.hpp"

#include <fmt/format.h>
#include <fmt/ranges.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <cctype>
#include <set>

namespace autokg {

using json = nlohmann::ordered_json;

namespace {

constexpr std::size_t kMinStem = 7;
constexpr std::size_t kStemChoices = 3; // 7, 8 or 9

void require_suffixes(const std::vector<std::string>& suffixes) {
    if (suffixes.empty())
        throw Error(ErrorCode::EmptySuffixList, "virtual word generation needs at least one suffix");
}

bool is_word_char(char c) noexcept {
    auto u = static_cast<unsigned char>(c);
    return std::isalnum(u) || c == '_' || u >= 0x80;
}

struct Replacement {
    Span span;
    std::string with;
    int tag; // 0 head, 1 tail, -1 other occurrence
};

bool overlaps(const Span& a, const Span& b) noexcept { return a.first < b.second && b.first < a.second; }

std::vector<std::string> sorted_unique(std::vector<std::string> xs) {
    std::sort(xs.begin(), xs.end());
    xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
    return xs;
}

void recompute_demos(VkeDataset& d) {
    d.demos.clear();
    std::set<std::string> rels;
    for (std::size_t i = 0; i < d.sentences.size(); ++i) {
        const auto& rel = d.sentences[i].relation;
        rels.insert(rel);
        auto& slot = d.demos[rel];
        if (slot.size() < 2)
            slot.push_back(i);
    }
    d.relations.assign(rels.begin(), rels.end());
}

} // namespace

std::string gen_virtual_word(PortableRng& rng, const std::vector<std::string>& suffixes, WordCasing casing) {
    require_suffixes(suffixes);
    const auto stem_len = kMinStem + rng.uniform(kStemChoices);
    std::string word;
    for (std::size_t i = 0; i < stem_len; ++i)
        word.push_back(kVirtualAlphabet[rng.uniform(kVirtualAlphabet.size())]);
    word += suffixes[rng.uniform(suffixes.size())];
    if (casing == WordCasing::Entity)
        word[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(word[0])));
    return word;
}

bool has_virtual_shape(std::string_view word, const std::vector<std::string>& suffixes) {
    require_suffixes(suffixes);
    auto [lo, hi] = std::minmax_element(suffixes.begin(), suffixes.end(),
                                        [](const auto& a, const auto& b) { return a.size() < b.size(); });
    if (word.size() < kMinStem + lo->size() || word.size() > kMinStem + kStemChoices - 1 + hi->size())
        return false;
    for (char c : word) {
        auto lower = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        if (kVirtualAlphabet.find(lower) == std::string_view::npos)
            return false;
    }
    return true;
}

KnownVocabulary parse_known_vocabulary(std::string_view content) {
    KnownVocabulary out;
    for (auto line : text::split_lines(content)) {
        auto w = text::trim(line);
        if (!w.empty())
            out.insert(text::ascii_lower(w));
    }
    return out;
}

KnownVocabulary load_known_vocabulary(const std::filesystem::path& path) {
    return parse_known_vocabulary(text::read_file(path));
}

VirtualLexicon build_lexicon(const std::vector<std::string>& original_entities,
                             const std::vector<std::string>& original_relations, PortableRng& rng,
                             const KnownVocabulary& known, const LexiconOptions& options) {
    if (known.size() < options.min_vocabulary_size)
        throw Error(ErrorCode::VocabularyTooSmall,
                    fmt::format("known vocabulary has {} words, need at least {}", known.size(),
                                options.min_vocabulary_size));
    WordGenerator generate = options.generator;
    if (!generate) {
        require_suffixes(options.suffixes);
        generate = [&](PortableRng& r, WordCasing c) { return gen_virtual_word(r, options.suffixes, c); };
    }

    std::unordered_set<std::string> originals;
    for (const auto& e : original_entities)
        originals.insert(text::ascii_lower(e));
    for (const auto& r : original_relations)
        originals.insert(text::ascii_lower(r));
    std::unordered_set<std::string> assigned;

    auto fresh = [&](WordCasing casing, const std::string& original) {
        for (std::size_t rejected = 0;; ++rejected) {
            if (rejected == options.max_retries)
                throw Error(ErrorCode::RetryExhausted,
                            fmt::format("{} consecutive collisions while naming '{}'", rejected, original));
            auto candidate = generate(rng, casing);
            auto key = text::ascii_lower(candidate);
            if (known.contains(key) || assigned.contains(key) || originals.contains(key))
                continue;
            assigned.insert(key);
            return candidate;
        }
    };

    VirtualLexicon lex;
    for (const auto& e : sorted_unique(original_entities))
        lex.entity_map.emplace(e, fresh(WordCasing::Entity, e));
    for (const auto& r : sorted_unique(original_relations))
        lex.relation_map.emplace(r, fresh(WordCasing::Relation, r));
    return lex;
}

void validate_spans(const SeedSentence& s) {
    auto check = [&](const Span& sp, std::string_view which) {
        if (sp.first >= sp.second || sp.second > s.text.size())
            throw Error(ErrorCode::InvalidSpan,
                        fmt::format("{} span [{}, {}) is empty or outside a {}-byte sentence", which, sp.first,
                                    sp.second, s.text.size()));
    };
    check(s.head, "head");
    check(s.tail, "tail");
    if (overlaps(s.head, s.tail))
        throw Error(ErrorCode::InvalidSpan, "head and tail spans overlap");
}

Triple VkeDataset::gold_triple(std::size_t i) const {
    const auto& s = sentences.at(i);
    return make_triple(s.head_text(), s.relation, s.tail_text());
}

VkeDataset substitute_corpus(const std::vector<SeedSentence>& corpus, const VirtualLexicon& lexicon) {
    auto lookup = [](const std::map<std::string, std::string>& m, const std::string& key, std::string_view kind) {
        auto it = m.find(key);
        if (it == m.end())
            throw Error(ErrorCode::UnmappedSymbol, fmt::format("no virtual name for {} '{}'", kind, key));
        return it->second;
    };

    VkeDataset out;
    for (const auto& s : corpus) {
        validate_spans(s);
        const auto head = s.head_text();
        const auto tail = s.tail_text();
        std::vector<Replacement> reps{{s.head, lookup(lexicon.entity_map, head, "entity"), 0},
                                      {s.tail, lookup(lexicon.entity_map, tail, "entity"), 1}};
        const auto relation = lookup(lexicon.relation_map, s.relation, "relation");

        // Longer surface forms claim their occurrences first.
        std::vector<std::pair<std::string, std::string>> surfaces{{head, reps[0].with}, {tail, reps[1].with}};
        std::stable_sort(surfaces.begin(), surfaces.end(),
                         [](const auto& a, const auto& b) { return a.first.size() > b.first.size(); });
        for (const auto& [surface, virt] : surfaces) {
            for (auto pos = s.text.find(surface); pos != std::string::npos; pos = s.text.find(surface, pos + 1)) {
                Span sp{pos, pos + surface.size()};
                bool bounded = (pos == 0 || !is_word_char(s.text[pos - 1])) &&
                               (sp.second == s.text.size() || !is_word_char(s.text[sp.second]));
                bool free = std::none_of(reps.begin(), reps.end(), [&](const auto& r) { return overlaps(r.span, sp); });
                if (bounded && free)
                    reps.push_back({sp, virt, -1});
            }
        }
        std::sort(reps.begin(), reps.end(), [](const auto& a, const auto& b) { return a.span.first < b.span.first; });

        SeedSentence r;
        r.relation = relation;
        std::size_t cursor = 0;
        for (const auto& rep : reps) {
            r.text.append(s.text, cursor, rep.span.first - cursor);
            Span now{r.text.size(), r.text.size() + rep.with.size()};
            r.text += rep.with;
            if (rep.tag == 0)
                r.head = now;
            else if (rep.tag == 1)
                r.tail = now;
            cursor = rep.span.second;
        }
        r.text.append(s.text, cursor);
        out.sentences.push_back(std::move(r));
    }
    recompute_demos(out);
    return out;
}

DatasetStats validate_dataset(VkeDataset& dataset, std::size_t min_quota, const std::vector<SeedSentence>* train_pool) {
    std::map<std::string, std::size_t> counts;
    for (const auto& s : dataset.sentences)
        ++counts[s.relation];

    DatasetStats stats;
    if (train_pool) {
        for (const auto& p : *train_pool) {
            auto it = counts.find(p.relation);
            if (it == counts.end() || it->second >= min_quota)
                continue;
            validate_spans(p);
            dataset.sentences.push_back(p);
            ++it->second;
            ++stats.backfilled;
        }
    }

    std::vector<std::string> deficient;
    for (const auto& [rel, n] : counts) {
        if (n < min_quota)
            deficient.push_back(fmt::format("{} ({}/{})", rel, n, min_quota));
    }
    if (!deficient.empty())
        throw Error(ErrorCode::QuotaUnmet, fmt::format("relations below quota: {}", fmt::join(deficient, ", ")));
    if (stats.backfilled)
        spdlog::info("backfilled {} sentences from the training pool", stats.backfilled);

    recompute_demos(dataset);
    std::unordered_set<std::string> entities;
    for (const auto& s : dataset.sentences) {
        entities.insert(s.head_text());
        entities.insert(s.tail_text());
    }
    stats.sentences = dataset.sentences.size();
    stats.relations = dataset.relations.size();
    stats.unique_entities = entities.size();
    return stats;
}

std::vector<SeedSentence> parse_seed_corpus(std::string_view jsonl) {
    std::vector<SeedSentence> out;
    std::size_t line_no = 0;
    for (auto line : text::split_lines(jsonl)) {
        ++line_no;
        if (text::trim(line).empty())
            continue;
        try {
            auto j = json::parse(line);
            SeedSentence s;
            s.text = j.at("text").get<std::string>();
            s.relation = j.at("relation").get<std::string>();
            auto to_bytes = [&](const json& pair) {
                auto a = text::utf8_byte_offset(s.text, pair.at(0).get<std::size_t>());
                auto b = text::utf8_byte_offset(s.text, pair.at(1).get<std::size_t>());
                if (a == std::string::npos || b == std::string::npos)
                    throw Error(ErrorCode::InvalidSpan, "span offset past the end of the text");
                return Span{a, b};
            };
            s.head = to_bytes(j.at("head"));
            s.tail = to_bytes(j.at("tail"));
            validate_spans(s);
            out.push_back(std::move(s));
        } catch (const json::exception& e) {
            throw Error(ErrorCode::SchemaError, fmt::format("seed corpus line {}: {}", line_no, e.what()));
        } catch (const Error& e) {
            throw Error(e.code(), fmt::format("seed corpus line {}: {}", line_no, e.what()));
        }
    }
    return out;
}

std::vector<SeedSentence> load_seed_corpus(const std::filesystem::path& path) {
    return parse_seed_corpus(text::read_file(path));
}

std::string dataset_to_jsonl(const VkeDataset& dataset) {
    std::string out;
    for (const auto& s : dataset.sentences) {
        json j;
        j["text"] = s.text;
        j["head"] = {text::utf8_cp_index(s.text, s.head.first), text::utf8_cp_index(s.text, s.head.second)};
        j["tail"] = {text::utf8_cp_index(s.text, s.tail.first), text::utf8_cp_index(s.text, s.tail.second)};
        j["relation"] = s.relation;
        j["gold_triple"] = {s.head_text(), s.relation, s.tail_text()};
        out += j.dump();
        out += '\n';
    }
    return out;
}

json stats_to_json(const DatasetStats& stats) {
    return json{{"sentences", stats.sentences},
                {"relations", stats.relations},
                {"unique_entities", stats.unique_entities},
                {"backfilled", stats.backfilled}};
}

VineBuildResult build_vine_dataset(const std::vector<SeedSentence>& corpus, const KnownVocabulary& known,
                                   const VineBuildOptions& options, const std::vector<SeedSentence>* train_pool) {
    std::vector<std::string> entities, relations;
    auto collect = [&](const std::vector<SeedSentence>& xs) {
        for (const auto& s : xs) {
            validate_spans(s);
            entities.push_back(s.head_text());
            entities.push_back(s.tail_text());
            relations.push_back(s.relation);
        }
    };
    collect(corpus);
    if (train_pool)
        collect(*train_pool);

    PortableRng rng(options.seed);
    VineBuildResult r;
    r.lexicon = build_lexicon(entities, relations, rng, known, options.lexicon);
    r.dataset = substitute_corpus(corpus, r.lexicon);
    std::vector<SeedSentence> pool;
    if (train_pool)
        pool = substitute_corpus(*train_pool, r.lexicon).sentences;
    r.stats = validate_dataset(r.dataset, options.min_quota, train_pool ? &pool : nullptr);
    return r;
}

} // namespace autokg
