#include "autokg/error.hpp"
#include "autokg/text.hpp"
#include "autokg/vine_synth.hpp"
#include "vine_fixtures.hpp"

#include <doctest.h>

#include <algorithm>
#include <random>
#include <set>

using namespace autokg;

namespace {

const std::vector<std::string> kSixSuffixes{"ness", "tion", "ment", "ity", "er", "ism"};

// Raw mt19937_64 with its own rejection sampling; shares nothing with PortableRng.
std::string oracle_word(std::mt19937_64& e, const std::vector<std::string>& suffixes) {
    auto draw = [&](std::uint64_t n) {
        std::uint64_t lim = UINT64_MAX - UINT64_MAX % n, x;
        do
            x = e();
        while (x >= lim);
        return x % n;
    };
    std::string w;
    auto len = 7 + draw(3);
    for (std::uint64_t i = 0; i < len; ++i)
        w += "abcdefghijklmnopqrstuvwxyz_"[draw(27)];
    return w + suffixes[draw(suffixes.size())];
}

ErrorCode code_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected an autokg::Error");
    return ErrorCode::IoError;
}

SeedSentence seed(std::string text, std::string head, std::string tail, std::string rel) {
    SeedSentence s;
    auto h = text.find(head);
    auto t = text.find(tail);
    s.head = {h, h + head.size()};
    s.tail = {t, t + tail.size()};
    s.text = std::move(text);
    s.relation = std::move(rel);
    return s;
}

} // namespace

TEST_CASE("virtual words under seed 1234 are frozen") {
    std::mt19937_64 e(1234);
    auto expected = oracle_word(e, kSixSuffixes);
    CHECK(expected == "tflqvfobrment");

    PortableRng rng(1234);
    CHECK(gen_virtual_word(rng, kSixSuffixes, WordCasing::Relation) == expected);
    PortableRng rng2(1234);
    CHECK(gen_virtual_word(rng2, kSixSuffixes, WordCasing::Entity) == "Tflqvfobrment");

    // The next words follow the same stream.
    for (int i = 0; i < 200; ++i)
        CHECK(gen_virtual_word(rng, kSixSuffixes, WordCasing::Relation) == oracle_word(e, kSixSuffixes));
}

TEST_CASE("virtual word shape") {
    PortableRng rng(5);
    std::set<std::size_t> stems;
    for (int i = 0; i < 2000; ++i) {
        auto w = gen_virtual_word(rng, default_suffixes(), WordCasing::Entity);
        CHECK(has_virtual_shape(w, default_suffixes()));
        CHECK((std::isupper(static_cast<unsigned char>(w[0])) || w[0] == '_'));
        auto suffix = std::find_if(default_suffixes().begin(), default_suffixes().end(),
                                   [&](const auto& s) { return w.ends_with(s); });
        REQUIRE(suffix != default_suffixes().end());
        // Several suffixes may match the tail ("ness" vs "er"), so the stem length is bounded, not exact.
        auto stem = w.size() - suffix->size();
        CHECK(stem >= 7);
        CHECK(stem <= 9 + 2);
        stems.insert(w.size());
    }
    CHECK(stems.size() >= 5);
    CHECK(has_virtual_shape("decidiaster", default_suffixes()));
    CHECK(has_virtual_shape("Schoolnogo", default_suffixes()));
    CHECK_FALSE(has_virtual_shape("short", default_suffixes()));
    CHECK_FALSE(has_virtual_shape("has-hyphenness", default_suffixes()));
    CHECK(code_of([] {
              PortableRng r(1);
              gen_virtual_word(r, {}, WordCasing::Entity);
          }) == ErrorCode::EmptySuffixList);
}

TEST_CASE("lexicon: empty, injective, disjoint and collision free") {
    PortableRng rng(1);
    CHECK(build_lexicon({}, {}, rng, {}).size() == 0);

    auto corpus = vine_fixtures::full_scale_corpus();
    std::vector<std::string> ents, rels;
    for (const auto& s : corpus) {
        ents.push_back(s.head_text());
        ents.push_back(s.tail_text());
        rels.push_back(s.relation);
    }
    auto known = vine_fixtures::adversarial_vocabulary(99, 50000);
    REQUIRE(known.size() >= 50000);
    PortableRng build_rng(99);
    auto lex = build_lexicon(ents, rels, build_rng, known);
    CHECK(lex.entity_map.size() == 786);
    CHECK(lex.relation_map.size() == 39);

    std::set<std::string> names;
    for (const auto& [orig, v] : lex.entity_map) {
        CHECK((std::isupper(static_cast<unsigned char>(v[0])) || v[0] == '_'));
        names.insert(text::ascii_lower(v));
    }
    for (const auto& [orig, v] : lex.relation_map)
        names.insert(text::ascii_lower(v));
    CHECK(names.size() == 825);
    for (const auto& n : names)
        CHECK_FALSE(known.contains(n));
}

TEST_CASE("lexicon: adversarial generator exhausts retries") {
    LexiconOptions opts;
    opts.generator = [](PortableRng&, WordCasing) { return std::string("table"); };
    opts.max_retries = 5;
    PortableRng rng(1);
    CHECK(code_of([&] { build_lexicon({"Paris"}, {}, rng, {"table"}, opts); }) == ErrorCode::RetryExhausted);

    LexiconOptions small;
    small.min_vocabulary_size = 10;
    CHECK(code_of([&] { build_lexicon({"Paris"}, {}, rng, {"a"}, small); }) == ErrorCode::VocabularyTooSmall);
}

TEST_CASE("substitution produces the reference virtual triple") {
    auto s = seed("The survivor X had been on safari with his brother Y , and X returned home .", "X", "Y", "sibling");
    VirtualLexicon lex{{{"X", "Schoolnogo"}, {"Y", "Reptance"}}, {{"sibling", "decidiaster"}}};
    auto d = substitute_corpus({s}, lex);
    REQUIRE(d.sentences.size() == 1);
    const auto& r = d.sentences[0];
    CHECK(r.text == "The survivor Schoolnogo had been on safari with his brother Reptance , and Schoolnogo returned home .");
    CHECK(r.head_text() == "Schoolnogo");
    CHECK(r.tail_text() == "Reptance");
    auto g = d.gold_triple(0);
    CHECK(g.subject.raw() == "Schoolnogo");
    CHECK(g.predicate.label == "decidiaster");
    CHECK(g.object.raw() == "Reptance");
    CHECK(d.relations == std::vector<std::string>{"decidiaster"});
}

TEST_CASE("substitution respects word boundaries and longer forms") {
    auto s = seed("Ann Lee met Ann at Annex .", "Ann Lee", "Ann", "knows");
    // The tail span is the bare "Ann" after the head.
    s.tail = {12, 15};
    VirtualLexicon lex{{{"Ann Lee", "Qq"}, {"Ann", "Zz"}}, {{"knows", "rel"}}};
    auto r = substitute_corpus({s}, lex).sentences[0];
    CHECK(r.text == "Qq met Zz at Annex .");
    CHECK(r.head_text() == "Qq");
    CHECK(r.tail_text() == "Zz");
}

TEST_CASE("identity lexicon leaves the corpus unchanged") {
    auto corpus = vine_fixtures::load("seed_200.jsonl");
    VirtualLexicon id;
    for (const auto& s : corpus) {
        id.entity_map[s.head_text()] = s.head_text();
        id.entity_map[s.tail_text()] = s.tail_text();
        id.relation_map[s.relation] = s.relation;
    }
    auto d = substitute_corpus(corpus, id);
    REQUIRE(d.sentences.size() == corpus.size());
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        CHECK(d.sentences[i].text == corpus[i].text);
        CHECK(d.sentences[i].head == corpus[i].head);
        CHECK(d.sentences[i].tail == corpus[i].tail);
    }
}

TEST_CASE("unmapped symbols and bad spans are rejected") {
    auto s = seed("A likes B .", "A", "B", "likes");
    VirtualLexicon lex{{{"A", "Xx"}}, {{"likes", "r"}}};
    CHECK(code_of([&] { substitute_corpus({s}, lex); }) == ErrorCode::UnmappedSymbol);
    s.tail = {0, 1};
    CHECK(code_of([&] { validate_spans(s); }) == ErrorCode::InvalidSpan);
    CHECK(code_of([] { parse_seed_corpus(R"({"text":"ab","head":[0,1],"tail":[1,9],"relation":"r"})"); }) ==
          ErrorCode::InvalidSpan);
}

TEST_CASE("quota enforcement and backfill") {
    auto deficient = vine_fixtures::load("seed_deficient.jsonl");
    auto pool = vine_fixtures::load("train_pool.jsonl");
    auto known = vine_fixtures::adversarial_vocabulary(3, 1000);
    VineBuildOptions opts;
    opts.seed = 3;
    CHECK(code_of([&] { build_vine_dataset(deficient, known, opts); }) == ErrorCode::QuotaUnmet);

    auto r = build_vine_dataset(deficient, known, opts, &pool);
    CHECK(r.stats.backfilled == 1);
    CHECK(r.stats.sentences == 100);
    CHECK(r.stats.relations == 10);
    std::map<std::string, std::size_t> counts;
    for (const auto& s : r.dataset.sentences)
        ++counts[s.relation];
    for (const auto& [rel, n] : counts)
        CHECK(n == 10);
}

TEST_CASE("fixed seed builds are byte-identical and spans stay aligned") {
    auto corpus = vine_fixtures::load("seed_200.jsonl");
    auto known = vine_fixtures::adversarial_vocabulary(42, 2000);
    VineBuildOptions opts;
    opts.seed = 42;
    auto a = build_vine_dataset(corpus, known, opts);
    auto b = build_vine_dataset(corpus, known, opts);
    CHECK(dataset_to_jsonl(a.dataset) == dataset_to_jsonl(b.dataset));
    CHECK(a.stats.relations == 10);
    for (std::size_t i = 0; i < a.dataset.sentences.size(); ++i) {
        const auto& s = a.dataset.sentences[i];
        const auto& orig = corpus[i];
        CHECK(s.head_text() == a.lexicon.entity_map.at(orig.head_text()));
        CHECK(s.tail_text() == a.lexicon.entity_map.at(orig.tail_text()));
        // No original head/tail surface survives as a whole word.
        auto gone = [&](const std::string& name) {
            auto pos = s.text.find(name + " ");
            return pos == std::string::npos;
        };
        CHECK(gone(orig.head_text()));
        CHECK(gone(orig.tail_text()));
    }
    // JSONL round-trip through code-point offsets.
    auto reparsed = parse_seed_corpus(dataset_to_jsonl(a.dataset));
    REQUIRE(reparsed.size() == a.dataset.sentences.size());
    for (std::size_t i = 0; i < reparsed.size(); ++i)
        CHECK(reparsed[i].head_text() == a.dataset.sentences[i].head_text());
}
