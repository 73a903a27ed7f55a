#include "autokg/metrics.hpp"

#include "autokg/error.hpp"
#include "autokg/text.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

namespace autokg::metrics {

namespace {

std::set<std::string> key_set(const StringSet& items) {
    std::set<std::string> keys;
    for (const auto& s : items) {
        auto k = scoring_key(s);
        if (!k.empty())
            keys.insert(std::move(k));
    }
    return keys;
}

void require_same_length(std::size_t a, std::size_t b, std::string_view what) {
    if (a != b)
        throw Error(ErrorCode::LengthMismatch, fmt::format("{}: {} predictions vs {} golds", what, a, b));
}

double mean(const std::vector<double>& xs) {
    if (xs.empty())
        return 0.0;
    double sum = 0.0;
    for (double x : xs)
        sum += x;
    return sum / static_cast<double>(xs.size());
}

StringSet triple_keys(const std::vector<Triple>& triples) {
    StringSet keys;
    keys.reserve(triples.size());
    for (const auto& t : triples)
        keys.push_back(t.key());
    return keys;
}

bool is_ascii_punct(char c) {
    auto u = static_cast<unsigned char>(c);
    return u < 0x80 && std::ispunct(u);
}

} // namespace

PrfScore prf_from_counts(std::size_t tp, std::size_t fp, std::size_t fn) {
    PrfScore s{0.0, 0.0, 0.0, tp, fp, fn};
    if (tp + fp > 0)
        s.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
    if (tp + fn > 0)
        s.recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
    if (s.precision + s.recall > 0.0)
        s.f1 = 2.0 * s.precision * s.recall / (s.precision + s.recall);
    return s;
}

PrfScore instance_counts(const StringSet& prediction, const StringSet& gold) {
    const auto p = key_set(prediction);
    const auto g = key_set(gold);
    std::size_t tp = 0;
    for (const auto& k : p)
        tp += g.contains(k) ? 1 : 0;
    return prf_from_counts(tp, p.size() - tp, g.size() - tp);
}

PrfScore micro_f1(const std::vector<StringSet>& predictions, const std::vector<StringSet>& golds) {
    require_same_length(predictions.size(), golds.size(), "micro_f1");
    std::size_t tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        auto c = instance_counts(predictions[i], golds[i]);
        tp += c.tp;
        fp += c.fp;
        fn += c.fn;
    }
    return prf_from_counts(tp, fp, fn);
}

PrfScore micro_f1(const std::vector<std::vector<Triple>>& predictions,
                  const std::vector<std::vector<Triple>>& golds) {
    require_same_length(predictions.size(), golds.size(), "micro_f1");
    std::vector<StringSet> p, g;
    p.reserve(predictions.size());
    g.reserve(golds.size());
    for (const auto& x : predictions)
        p.push_back(triple_keys(x));
    for (const auto& x : golds)
        g.push_back(triple_keys(x));
    return micro_f1(p, g);
}

bool hit_at_1(std::string_view predicted_tail, const StringSet& gold_aliases) {
    const auto p = scoring_key(predicted_tail);
    if (p.empty())
        return false;
    return std::any_of(gold_aliases.begin(), gold_aliases.end(),
                       [&](const std::string& a) { return scoring_key(a) == p; });
}

double hits_at_1(const std::vector<std::string>& predicted_tails, const std::vector<StringSet>& gold_tails) {
    require_same_length(predicted_tails.size(), gold_tails.size(), "hits_at_1");
    std::vector<double> hits;
    hits.reserve(predicted_tails.size());
    for (std::size_t i = 0; i < predicted_tails.size(); ++i)
        hits.push_back(hit_at_1(predicted_tails[i], gold_tails[i]) ? 1.0 : 0.0);
    return mean(hits);
}

std::vector<std::string> bleu_tokens(std::string_view s) {
    std::string cleaned;
    cleaned.reserve(s.size());
    for (char c : s) {
        if (!is_ascii_punct(c))
            cleaned.push_back(c);
    }
    cleaned = text::ascii_lower(cleaned);
    std::vector<std::string> tokens;
    std::string current;
    for (char c : cleaned) {
        if (text::is_space(c)) {
            if (!current.empty())
                tokens.push_back(std::move(current));
            current.clear();
        } else {
            current.push_back(c);
        }
    }
    if (!current.empty())
        tokens.push_back(std::move(current));
    return tokens;
}

double bleu1(std::string_view prediction, const std::vector<std::string>& references) {
    if (references.empty())
        throw Error(ErrorCode::EmptyReference, "bleu1 needs at least one reference");
    std::vector<std::vector<std::string>> refs;
    for (const auto& r : references) {
        auto toks = bleu_tokens(r);
        if (!toks.empty())
            refs.push_back(std::move(toks));
    }
    if (refs.empty())
        throw Error(ErrorCode::EmptyReference, "every reference is empty after tokenization");

    const auto hyp = bleu_tokens(prediction);
    if (hyp.empty())
        return 0.0;

    std::map<std::string, std::size_t> hyp_counts;
    for (const auto& t : hyp)
        ++hyp_counts[t];
    std::map<std::string, std::size_t> max_ref_counts;
    for (const auto& r : refs) {
        std::map<std::string, std::size_t> counts;
        for (const auto& t : r)
            ++counts[t];
        for (const auto& [tok, n] : counts)
            max_ref_counts[tok] = std::max(max_ref_counts[tok], n);
    }
    std::size_t clipped = 0;
    for (const auto& [tok, n] : hyp_counts) {
        auto it = max_ref_counts.find(tok);
        if (it != max_ref_counts.end())
            clipped += std::min(n, it->second);
    }
    const double c = static_cast<double>(hyp.size());
    const double precision = static_cast<double>(clipped) / c;

    // Closest reference length; ties go to the shorter reference.
    std::size_t r_len = refs.front().size();
    for (const auto& r : refs) {
        auto diff = [&](std::size_t len) { return std::abs(static_cast<double>(len) - c); };
        if (diff(r.size()) < diff(r_len) || (diff(r.size()) == diff(r_len) && r.size() < r_len))
            r_len = r.size();
    }
    const double r = static_cast<double>(r_len);
    const double bp = c < r ? std::exp(1.0 - r / c) : 1.0;
    return precision * bp;
}

double instance_bleu1(std::string_view prediction, const StringSet& references, MultiReferencePolicy policy) {
    if (policy == MultiReferencePolicy::Joint)
        return bleu1(prediction, references);
    double best = 0.0;
    bool any = false;
    for (const auto& r : references) {
        if (bleu_tokens(r).empty())
            continue;
        best = std::max(best, bleu1(prediction, {r}));
        any = true;
    }
    if (!any)
        throw Error(ErrorCode::EmptyReference, "every reference is empty after tokenization");
    return best;
}

double mean_bleu1(const std::vector<std::string>& predictions, const std::vector<StringSet>& references,
                  MultiReferencePolicy policy) {
    require_same_length(predictions.size(), references.size(), "mean_bleu1");
    std::vector<double> scores;
    scores.reserve(predictions.size());
    for (std::size_t i = 0; i < predictions.size(); ++i)
        scores.push_back(instance_bleu1(predictions[i], references[i], policy));
    return mean(scores);
}

std::string_view to_string(ExactMatchPolicy policy) noexcept {
    return policy == ExactMatchPolicy::StrictSet ? "strict-set" : "superset";
}

ExactMatchPolicy parse_exact_match_policy(std::string_view name) {
    if (name == "strict-set" || name == "strict")
        return ExactMatchPolicy::StrictSet;
    if (name == "superset")
        return ExactMatchPolicy::Superset;
    throw Error(ErrorCode::InvalidConfig, fmt::format("unknown exact-match policy '{}'", name));
}

bool exact_match_instance(const StringSet& prediction, const StringSet& gold, ExactMatchPolicy policy) {
    const auto g = key_set(gold);
    if (g.empty())
        throw Error(ErrorCode::EmptyGold, "gold answer set is empty");
    const auto p = key_set(prediction);
    if (policy == ExactMatchPolicy::StrictSet)
        return p == g;
    return std::includes(p.begin(), p.end(), g.begin(), g.end());
}

double exact_match(const std::vector<StringSet>& predictions, const std::vector<StringSet>& golds,
                   ExactMatchPolicy policy) {
    require_same_length(predictions.size(), golds.size(), "exact_match");
    std::vector<double> correct;
    correct.reserve(predictions.size());
    for (std::size_t i = 0; i < predictions.size(); ++i)
        correct.push_back(exact_match_instance(predictions[i], golds[i], policy) ? 1.0 : 0.0);
    return mean(correct);
}

bool vke_correct(const VkeOutcome& outcome) {
    const auto gold = outcome.gold.key();
    return std::any_of(outcome.parsed.begin(), outcome.parsed.end(),
                       [&](const Triple& t) { return t.key() == gold; });
}

double vke_accuracy(const std::vector<VkeOutcome>& outcomes) {
    std::vector<double> correct;
    correct.reserve(outcomes.size());
    for (const auto& o : outcomes)
        correct.push_back(vke_correct(o) ? 1.0 : 0.0);
    return mean(correct);
}

double recompute(const MetricReport& report) {
    if (report.metric == "micro_f1") {
        std::size_t tp = 0, fp = 0, fn = 0;
        for (const auto& c : report.instance_counts) {
            tp += c.at(0);
            fp += c.at(1);
            fn += c.at(2);
        }
        return prf_from_counts(tp, fp, fn).f1;
    }
    return mean(report.per_instance);
}

nlohmann::ordered_json to_json(const MetricReport& report) {
    nlohmann::ordered_json j;
    j["task"] = std::string(to_string(report.task));
    j["metric"] = report.metric;
    j["value"] = report.value;
    j["per_instance"] = report.per_instance;
    if (report.counts) {
        j["counts"] = {{"tp", report.counts->tp},
                       {"fp", report.counts->fp},
                       {"fn", report.counts->fn},
                       {"precision", report.counts->precision},
                       {"recall", report.counts->recall},
                       {"f1", report.counts->f1}};
        j["instance_counts"] = report.instance_counts;
    }
    if (!report.extra.empty())
        j["extra"] = report.extra;
    return j;
}

MetricReport metric_report_from_json(const nlohmann::ordered_json& j) {
    MetricReport r;
    r.task = parse_task_kind(j.at("task").get<std::string>());
    r.metric = j.at("metric").get<std::string>();
    r.value = j.at("value").get<double>();
    r.per_instance = j.at("per_instance").get<std::vector<double>>();
    if (j.contains("counts")) {
        const auto& c = j["counts"];
        r.counts = prf_from_counts(c.at("tp").get<std::size_t>(), c.at("fp").get<std::size_t>(),
                                   c.at("fn").get<std::size_t>());
        r.instance_counts = j.at("instance_counts").get<std::vector<std::vector<std::size_t>>>();
    }
    if (j.contains("extra"))
        r.extra = j["extra"];
    return r;
}

} // namespace autokg::metrics
