#include "autokg/error.hpp"
#include "autokg/metrics.hpp"
#include "autokg/rng.hpp"
#include "oracles.hpp"

#include <doctest.h>

using namespace autokg;
using namespace autokg::metrics;

namespace {

const std::vector<std::string> kPool{"Paris", "paris", " PARIS", "Lyon", "New  York", "new york", "Rome", ""};

StringSet random_set(PortableRng& rng, std::size_t max_len) {
    StringSet out;
    auto n = rng.uniform(max_len + 1);
    for (std::size_t i = 0; i < n; ++i)
        out.push_back(kPool[rng.uniform(kPool.size())]);
    return out;
}

std::string random_sentence(PortableRng& rng) {
    static const std::vector<std::string> words{"the", "The", "cat", "cat.", "sat", "on", "mat", "a", "dog,", "!"};
    std::string s;
    auto n = rng.uniform(7);
    for (std::size_t i = 0; i < n; ++i)
        s += words[rng.uniform(words.size())] + " ";
    return s;
}

} // namespace

TEST_CASE("micro F1 agrees with the brute-force oracle") {
    PortableRng rng(11);
    for (int c = 0; c < 200; ++c) {
        std::vector<StringSet> preds, golds;
        auto n = 1 + rng.uniform(6);
        for (std::size_t i = 0; i < n; ++i) {
            preds.push_back(random_set(rng, 4));
            golds.push_back(random_set(rng, 4));
        }
        auto got = micro_f1(preds, golds);
        auto want = oracle::micro_f1(preds, golds);
        CHECK(got.precision == doctest::Approx(want.p).epsilon(1e-12));
        CHECK(got.recall == doctest::Approx(want.r).epsilon(1e-12));
        CHECK(got.f1 == doctest::Approx(want.f).epsilon(1e-12));
        CHECK(got.f1 >= 0.0);
        CHECK(got.f1 <= 1.0);
    }
}

TEST_CASE("micro F1 conventions") {
    auto all_empty = micro_f1(std::vector<StringSet>{{}}, std::vector<StringSet>{{}});
    CHECK(all_empty.f1 == 0.0);
    auto exact = micro_f1(std::vector<StringSet>{{"a", "b"}}, std::vector<StringSet>{{"B", "A"}});
    CHECK(exact.f1 == 1.0);
    CHECK_THROWS_AS(micro_f1(std::vector<StringSet>{{}}, std::vector<StringSet>{}), Error);
    // tp=1 fp=1 fn=2: P=1/2, R=1/3, F1=2/5.
    auto s = prf_from_counts(1, 1, 2);
    CHECK(s.f1 == doctest::Approx(0.4));

    std::vector<std::vector<Triple>> p{{make_triple("a", "r", "b"), make_triple("a", "r", "c")}};
    std::vector<std::vector<Triple>> g{{make_triple("A", "R", "B")}};
    auto t = micro_f1(p, g);
    CHECK(t.tp == 1);
    CHECK(t.fp == 1);
    CHECK(t.fn == 0);
}

TEST_CASE("hits@1 agrees with the oracle") {
    PortableRng rng(12);
    for (int c = 0; c < 200; ++c) {
        std::vector<std::string> preds;
        std::vector<StringSet> golds;
        auto n = 1 + rng.uniform(6);
        for (std::size_t i = 0; i < n; ++i) {
            preds.push_back(kPool[rng.uniform(kPool.size())]);
            auto g = random_set(rng, 3);
            g.push_back("Rome");
            golds.push_back(g);
        }
        CHECK(hits_at_1(preds, golds) == doctest::Approx(oracle::hits_at_1(preds, golds)).epsilon(1e-12));
    }
    CHECK_FALSE(hit_at_1("", {""}));
    CHECK(hit_at_1("  ALBUQUERQUE ", {"Albuquerque"}));
}

TEST_CASE("BLEU-1 agrees with the oracle") {
    PortableRng rng(13);
    int scored = 0;
    for (int c = 0; c < 400; ++c) {
        auto pred = random_sentence(rng);
        std::vector<std::string> refs{random_sentence(rng), random_sentence(rng)};
        if (oracle::tokens(refs[0]).empty() && oracle::tokens(refs[1]).empty()) {
            CHECK_THROWS_AS(bleu1(pred, refs), Error);
            continue;
        }
        ++scored;
        auto got = bleu1(pred, refs);
        CHECK(got == doctest::Approx(oracle::bleu1(pred, refs)).epsilon(1e-12));
        CHECK(got >= 0.0);
        CHECK(got <= 1.0);
    }
    CHECK(scored >= 100);
}

TEST_CASE("BLEU-1 frozen values") {
    // hyp 2 tokens, closest ref has 4: P=1, BP=exp(1-4/2)=e^-1.
    CHECK(bleu1("the cat", {"the cat sat down"}) == doctest::Approx(0.36787944117144233));
    // Clipping: "the the the" vs "the cat": 1/3.
    CHECK(bleu1("the the the", {"the cat"}) == doctest::Approx(1.0 / 3.0));
    CHECK(bleu1("", {"x"}) == 0.0);
    CHECK(instance_bleu1("a b", {"a b c d", "a b"}, MultiReferencePolicy::BestSingle) == 1.0);
}

TEST_CASE("exact match agrees with the oracle under both policies") {
    PortableRng rng(14);
    for (int c = 0; c < 200; ++c) {
        std::vector<StringSet> preds, golds;
        auto n = 1 + rng.uniform(5);
        for (std::size_t i = 0; i < n; ++i) {
            preds.push_back(random_set(rng, 3));
            auto g = random_set(rng, 2);
            g.push_back("Lyon");
            golds.push_back(g);
        }
        CHECK(exact_match(preds, golds, ExactMatchPolicy::Superset) ==
              doctest::Approx(oracle::exact_match(preds, golds, true)));
        CHECK(exact_match(preds, golds, ExactMatchPolicy::StrictSet) ==
              doctest::Approx(oracle::exact_match(preds, golds, false)));
    }
    CHECK_THROWS_AS(exact_match_instance({"a"}, {}, ExactMatchPolicy::Superset), Error);
    CHECK(exact_match_instance({"Android", "city limits", "Extra"}, {"Android", "City Limits"},
                               ExactMatchPolicy::Superset));
    CHECK_FALSE(exact_match_instance({"Android", "Extra"}, {"Android"}, ExactMatchPolicy::StrictSet));
}

TEST_CASE("VKE accuracy agrees with the oracle") {
    PortableRng rng(15);
    const std::vector<std::string> names{"Schoolnogo", "schoolnogo", "Reptance", "decidiaster"};
    for (int c = 0; c < 150; ++c) {
        std::vector<VkeOutcome> outcomes;
        std::vector<std::vector<oracle::RawTriple>> parsed;
        std::vector<oracle::RawTriple> gold;
        auto n = 1 + rng.uniform(5);
        for (std::size_t i = 0; i < n; ++i) {
            oracle::RawTriple g{names[rng.uniform(4)], names[rng.uniform(4)], names[rng.uniform(4)]};
            VkeOutcome o{{}, make_triple(g.s, g.p, g.o)};
            std::vector<oracle::RawTriple> ps;
            auto m = rng.uniform(3);
            for (std::size_t k = 0; k < m; ++k) {
                oracle::RawTriple p{names[rng.uniform(4)], names[rng.uniform(4)], names[rng.uniform(4)]};
                ps.push_back(p);
                o.parsed.push_back(make_triple(p.s, p.p, p.o));
            }
            outcomes.push_back(o);
            parsed.push_back(ps);
            gold.push_back(g);
        }
        CHECK(vke_accuracy(outcomes) == doctest::Approx(oracle::vke_accuracy(parsed, gold)));
    }
}

TEST_CASE("metric reports recompute from their breakdown and round-trip") {
    MetricReport r;
    r.task = TaskKind::QA;
    r.metric = "exact_match";
    r.per_instance = {1, 0, 1, 1};
    r.value = 0.75;
    CHECK(recompute(r) == doctest::Approx(r.value));
    auto back = metric_report_from_json(to_json(r));
    CHECK(back.per_instance == r.per_instance);
    CHECK(back.task == TaskKind::QA);

    MetricReport f;
    f.task = TaskKind::RE;
    f.metric = "micro_f1";
    f.instance_counts = {{1, 1, 0}, {0, 0, 2}};
    auto s = prf_from_counts(1, 1, 2);
    f.value = s.f1;
    f.counts = s;
    CHECK(recompute(f) == doctest::Approx(0.4));
    auto fb = metric_report_from_json(to_json(f));
    CHECK(fb.instance_counts == f.instance_counts);
    CHECK(recompute(fb) == doctest::Approx(f.value));
}
