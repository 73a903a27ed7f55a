#include "autokg/eval_runner.hpp"

#include "autokg/answer_parser.hpp"
#include "autokg/error.hpp"
#include "autokg/llm_gateway.hpp"
#include "autokg/text.hpp"

#include <fmt/chrono.h>
#include <fmt/format.h>
#include <fmt/ranges.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <numeric>
#include <set>
#include <thread>
#include <unordered_set>

namespace autokg {

using json = nlohmann::ordered_json;

namespace {

const std::vector<std::string>& table_columns() {
    static const std::vector<std::string> cols{"DuIE2.0",   "Re-TACRED",  "SciERC",     "MAVEN",
                                               "FB15K-237", "ATOMIC2020", "FreebaseQA", "MetaQA"};
    return cols;
}

std::vector<std::string> string_list(const json& j, std::string_view field) {
    if (j.is_string())
        return {j.get<std::string>()};
    if (!j.is_array() || j.empty())
        throw Error(ErrorCode::SchemaError, fmt::format("'{}' must be a string or a non-empty list", field));
    return j.get<std::vector<std::string>>();
}

TaskInstance parse_instance(const json& j, TaskKind kind, std::size_t line_no) {
    TaskInstance inst;
    inst.kind = kind;
    inst.id = j.contains("id") ? (j["id"].is_string() ? j["id"].get<std::string>() : j["id"].dump())
                               : std::to_string(line_no);
    switch (kind) {
    case TaskKind::RE: {
        inst.input = SentenceInput{j.at("sentence").get<std::string>(), "", j.value("language", std::string("en"))};
        TripleGold gold;
        for (const auto& t : j.at("triples"))
            gold.triples.push_back(make_triple(t.at("subject").get<std::string>(), t.at("relation").get<std::string>(),
                                               t.at("object").get<std::string>()));
        inst.gold = gold;
        break;
    }
    case TaskKind::EE:
        inst.input = SentenceInput{j.at("sentence").get<std::string>(), "", "en"};
        inst.gold = LabelGold{j.at("event_types").get<std::vector<std::string>>()};
        break;
    case TaskKind::LP:
        inst.input = LinkQuery{EntityName(j.at("head").get<std::string>()),
                               RelationType(j.at("relation").get<std::string>())};
        inst.gold = AliasGold{string_list(j.at("tail"), "tail")};
        break;
    case TaskKind::QA: {
        std::string stratum;
        if (j.contains("hop"))
            stratum = j["hop"].is_string() ? j["hop"].get<std::string>() : j["hop"].dump();
        else
            stratum = j.value("stratum", std::string());
        inst.input = QuestionInput{j.at("question").get<std::string>(), stratum};
        inst.gold = AnswerGold{string_list(j.at("answers"), "answers")};
        break;
    }
    case TaskKind::VKE: {
        const auto& g = j.at("gold_triple");
        if (!g.is_array() || g.size() != 3)
            throw Error(ErrorCode::SchemaError, "'gold_triple' must have three entries");
        inst.input = SentenceInput{j.at("text").get<std::string>(), j.at("relation").get<std::string>(), "en"};
        inst.gold = TripleGold{{make_triple(g[0].get<std::string>(), g[1].get<std::string>(), g[2].get<std::string>())}};
        break;
    }
    }
    validate(inst);
    return inst;
}

// The text that identifies an instance's input, used to keep demonstrations
// out of the evaluated set.
std::string input_key(const TaskInstance& inst) {
    return std::visit(
        [](const auto& in) -> std::string {
            using T = std::decay_t<decltype(in)>;
            if constexpr (std::is_same_v<T, SentenceInput>)
                return scoring_key(in.sentence);
            else if constexpr (std::is_same_v<T, QuestionInput>)
                return scoring_key(in.question);
            else
                return in.head.key() + '\x1f' + in.relation.key();
        },
        inst.input);
}

const SentenceInput& sentence_of(const TaskInstance& inst) { return std::get<SentenceInput>(inst.input); }

json triples_json(const std::vector<Triple>& ts) {
    json out = json::array();
    for (const auto& t : ts)
        out.push_back({t.subject.raw(), t.predicate.label, t.object.raw()});
    return out;
}

json gold_json(const TaskInstance& inst) {
    return std::visit(
        [](const auto& g) -> json {
            using T = std::decay_t<decltype(g)>;
            if constexpr (std::is_same_v<T, TripleGold>)
                return triples_json(g.triples);
            else if constexpr (std::is_same_v<T, LabelGold>)
                return g.labels;
            else if constexpr (std::is_same_v<T, AliasGold>)
                return g.aliases;
            else
                return g.answers;
        },
        inst.gold);
}

std::string metric_name(const ExperimentConfig& c) {
    switch (c.task) {
    case TaskKind::RE:
    case TaskKind::EE: return "micro_f1";
    case TaskKind::LP: return c.lp_metric;
    case TaskKind::QA: return "exact_match";
    case TaskKind::VKE: return "vke_accuracy";
    }
    return "unknown";
}

std::vector<std::string> derive_vocabulary(const std::vector<TaskInstance>& a, const std::vector<TaskInstance>& b) {
    std::vector<std::string> out;
    std::unordered_set<std::string> seen;
    for (const auto* xs : {&a, &b}) {
        for (const auto& inst : *xs) {
            for (const auto& l : instance_labels(inst)) {
                if (seen.insert(l).second)
                    out.push_back(l);
            }
        }
    }
    return out;
}

std::string iso_now() {
    return fmt::format("{:%Y-%m-%dT%H:%M:%SZ}", fmt::gmtime(std::chrono::system_clock::to_time_t(
                                                    std::chrono::system_clock::now())));
}

} // namespace

std::vector<TaskInstance> parse_dataset(std::string_view jsonl, TaskKind kind) {
    std::vector<TaskInstance> out;
    std::size_t line_no = 0;
    for (auto line : text::split_lines(jsonl)) {
        ++line_no;
        if (text::trim(line).empty())
            continue;
        try {
            out.push_back(parse_instance(json::parse(line), kind, line_no));
        } catch (const json::exception& e) {
            throw Error(ErrorCode::SchemaError, fmt::format("line {}: {}", line_no, e.what()));
        } catch (const Error& e) {
            throw Error(ErrorCode::SchemaError, fmt::format("line {}: {}", line_no, e.what()));
        }
    }
    if (out.empty())
        throw Error(ErrorCode::EmptyDataset, "dataset has no instances");
    return out;
}

std::vector<TaskInstance> load_dataset(const std::filesystem::path& path, TaskKind kind) {
    try {
        return parse_dataset(text::read_file(path), kind);
    } catch (const Error& e) {
        if (e.code() == ErrorCode::IoError)
            throw;
        throw Error(e.code(), fmt::format("{}: {}", path.string(), e.what()));
    }
}

std::vector<std::string> instance_labels(const TaskInstance& inst) {
    std::vector<std::string> out;
    auto add = [&](const std::string& l) {
        if (std::find(out.begin(), out.end(), l) == out.end())
            out.push_back(l);
    };
    switch (inst.kind) {
    case TaskKind::RE:
        for (const auto& t : std::get<TripleGold>(inst.gold).triples)
            add(t.predicate.label);
        break;
    case TaskKind::EE:
        for (const auto& l : std::get<LabelGold>(inst.gold).labels)
            add(l);
        break;
    case TaskKind::LP: add(std::get<LinkQuery>(inst.input).relation.label); break;
    case TaskKind::QA: add(std::get<QuestionInput>(inst.input).stratum); break;
    case TaskKind::VKE: add(sentence_of(inst).relation); break;
    }
    return out;
}

std::string_view to_string(CoveragePolicy policy) noexcept {
    switch (policy) {
    case CoveragePolicy::AllLabels: return "all-labels";
    case CoveragePolicy::ProportionalByHop: return "proportional-by-hop";
    case CoveragePolicy::None: return "none";
    }
    return "unknown";
}

CoveragePolicy parse_coverage_policy(std::string_view name) {
    for (auto p : {CoveragePolicy::AllLabels, CoveragePolicy::ProportionalByHop, CoveragePolicy::None}) {
        if (name == to_string(p))
            return p;
    }
    throw Error(ErrorCode::InvalidConfig, fmt::format("unknown coverage policy '{}'", name));
}

std::vector<std::size_t> apportion(const std::vector<std::size_t>& counts, std::size_t n) {
    const auto total = std::accumulate(counts.begin(), counts.end(), std::size_t{0});
    std::vector<std::size_t> quota(counts.size(), 0);
    if (total == 0)
        return quota;
    std::vector<std::size_t> order(counts.size());
    std::vector<std::size_t> remainder(counts.size());
    std::size_t given = 0;
    for (std::size_t i = 0; i < counts.size(); ++i) {
        quota[i] = n * counts[i] / total;
        remainder[i] = n * counts[i] % total;
        given += quota[i];
        order[i] = i;
    }
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return remainder[a] > remainder[b]; });
    for (std::size_t k = 0; given < n; ++k, ++given)
        ++quota[order[k]];
    return quota;
}

std::vector<std::size_t> sample_instances(const std::vector<TaskInstance>& instances, std::size_t n,
                                          CoveragePolicy policy, PortableRng& rng) {
    if (n > instances.size())
        throw Error(ErrorCode::SampleTooLarge,
                    fmt::format("sample of {} requested from {} instances", n, instances.size()));
    std::vector<std::size_t> order(instances.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::vector<std::size_t> chosen;

    switch (policy) {
    case CoveragePolicy::None:
        rng.shuffle(std::span<std::size_t>(order));
        chosen.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n));
        break;
    case CoveragePolicy::AllLabels: {
        std::vector<std::vector<std::string>> labels;
        std::set<std::string> uncovered;
        for (const auto& inst : instances) {
            labels.push_back(instance_labels(inst));
            uncovered.insert(labels.back().begin(), labels.back().end());
        }
        if (n < uncovered.size())
            throw Error(ErrorCode::CoverageInfeasible,
                        fmt::format("{} labels cannot be covered by {} instances", uncovered.size(), n));
        rng.shuffle(std::span<std::size_t>(order));
        std::vector<bool> taken(instances.size(), false);
        // Greedy cover: each pick adds at least one new label, so at most |labels| picks.
        while (!uncovered.empty()) {
            std::size_t best = 0, best_gain = 0;
            for (auto i : order) {
                if (taken[i])
                    continue;
                auto gain = static_cast<std::size_t>(std::count_if(
                    labels[i].begin(), labels[i].end(), [&](const auto& l) { return uncovered.contains(l); }));
                if (gain > best_gain) {
                    best = i;
                    best_gain = gain;
                }
            }
            taken[best] = true;
            chosen.push_back(best);
            for (const auto& l : labels[best])
                uncovered.erase(l);
        }
        for (auto i : order) {
            if (chosen.size() == n)
                break;
            if (!taken[i])
                chosen.push_back(i);
        }
        break;
    }
    case CoveragePolicy::ProportionalByHop: {
        std::map<std::string, std::vector<std::size_t>> strata;
        for (std::size_t i = 0; i < instances.size(); ++i)
            strata[instance_labels(instances[i]).front()].push_back(i);
        std::vector<std::size_t> counts;
        for (const auto& [_, members] : strata)
            counts.push_back(members.size());
        auto quota = apportion(counts, n);
        std::size_t k = 0;
        for (auto& [_, members] : strata) {
            rng.shuffle(std::span<std::size_t>(members));
            chosen.insert(chosen.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(quota[k++]));
        }
        break;
    }
    }
    std::sort(chosen.begin(), chosen.end());
    return chosen;
}

Demonstration make_demonstration(const TaskInstance& inst, Language language) {
    Demonstration d;
    switch (inst.kind) {
    case TaskKind::RE:
        d.input_text = sentence_of(inst).sentence;
        d.answer_text = format_triples(std::get<TripleGold>(inst.gold).triples, language);
        break;
    case TaskKind::EE:
        d.input_text = sentence_of(inst).sentence;
        d.answer_text = fmt::format("{}", fmt::join(std::get<LabelGold>(inst.gold).labels, ", "));
        break;
    case TaskKind::LP: {
        const auto& q = std::get<LinkQuery>(inst.input);
        d.input_text = q.head.raw();
        d.relation = q.relation.label;
        d.answer_text = std::get<AliasGold>(inst.gold).aliases.front();
        break;
    }
    case TaskKind::QA:
        d.input_text = std::get<QuestionInput>(inst.input).question;
        d.answer_text = fmt::format("{}", fmt::join(std::get<AnswerGold>(inst.gold).answers, " | "));
        break;
    case TaskKind::VKE:
        d.input_text = sentence_of(inst).sentence;
        d.relation = sentence_of(inst).relation;
        d.answer_text = format_triples(std::get<TripleGold>(inst.gold).triples, Language::En);
        break;
    }
    return d;
}

std::vector<std::size_t> pick_demo(const std::vector<TaskInstance>& pool, PortableRng& rng,
                                   const DemoConstraints& constraints) {
    std::vector<std::size_t> eligible;
    for (std::size_t i = 0; i < pool.size(); ++i) {
        if (std::find(constraints.excluded_ids.begin(), constraints.excluded_ids.end(), pool[i].id) !=
            constraints.excluded_ids.end())
            continue;
        if (constraints.relation) {
            auto labels = instance_labels(pool[i]);
            if (std::find(labels.begin(), labels.end(), *constraints.relation) == labels.end())
                continue;
        }
        eligible.push_back(i);
    }
    if (eligible.size() < constraints.count)
        throw Error(ErrorCode::NoEligibleDemo,
                    fmt::format("{} demonstration(s) needed{}, {} eligible", constraints.count,
                                constraints.relation ? fmt::format(" for '{}'", *constraints.relation) : "",
                                eligible.size()));
    rng.shuffle(std::span<std::size_t>(eligible));
    eligible.resize(constraints.count);
    return eligible;
}

ExperimentConfig experiment_config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir) {
    auto resolve = [&](const std::string& p) {
        std::filesystem::path path(p);
        return path.is_relative() && !base_dir.empty() ? (base_dir / path).lexically_normal() : path;
    };
    ExperimentConfig c;
    try {
        c.task = parse_task_kind(j.at("task").get<std::string>());
        c.name = j.value("name", std::string(to_string(c.task)));
        c.model = j.value("model", std::string("unknown"));
        c.dataset = resolve(j.at("dataset").get<std::string>());
        if (j.contains("train"))
            c.train = resolve(j["train"].get<std::string>());
        c.split = j.value("split", c.split);
        c.mode = parse_prompt_mode(j.value("mode", std::string("zero-shot")));
        if (j.contains("sample_size"))
            c.sample_size = j["sample_size"].get<std::size_t>();
        c.seed = j.value("seed", c.seed);
        c.coverage = parse_coverage_policy(j.value("coverage", std::string("none")));
        c.backend = j.value("backend", nlohmann::json::object());
        if (c.backend.contains("fixture"))
            c.backend["fixture"] = resolve(c.backend["fixture"].get<std::string>()).string();
        c.language = parse_language(j.value("language", std::string("en")));
        c.vocabulary = j.value("vocabulary", std::vector<std::string>{});
        c.underscore_space_equivalent = j.value("underscore_space_equivalent", false);
        c.lp_templates = j.value("lp_templates", std::map<std::string, std::string>{});
        c.lp_metric = j.value("lp_metric", c.lp_metric);
        c.exact_match = metrics::parse_exact_match_policy(j.value("exact_match", std::string("superset")));
        auto refs = j.value("bleu_references", std::string("best-single"));
        if (refs == "best-single")
            c.bleu_references = metrics::MultiReferencePolicy::BestSingle;
        else if (refs == "joint")
            c.bleu_references = metrics::MultiReferencePolicy::Joint;
        else
            throw Error(ErrorCode::InvalidConfig, fmt::format("unknown bleu_references '{}'", refs));
        if (j.contains("system_preamble"))
            c.system_preamble = j["system_preamble"].get<std::string>();
        if (j.contains("template_dir"))
            c.template_dir = resolve(j["template_dir"].get<std::string>());
        if (j.contains("context_window"))
            c.context_window = j["context_window"].get<std::size_t>();
        c.concurrency = j.value("concurrency", c.concurrency);
        if (j.contains("output_dir"))
            c.output_dir = resolve(j["output_dir"].get<std::string>());
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::SchemaError, fmt::format("experiment config: {}", e.what()));
    }
    if (c.sample_size && *c.sample_size == 0)
        throw Error(ErrorCode::InvalidConfig, "sample_size must be at least 1");
    if (c.lp_metric != "hits@1" && c.lp_metric != "bleu1")
        throw Error(ErrorCode::InvalidConfig, fmt::format("unknown lp_metric '{}'", c.lp_metric));
    if (c.concurrency == 0)
        throw Error(ErrorCode::InvalidConfig, "concurrency must be at least 1");
    if (c.mode == PromptMode::OneShot && c.task != TaskKind::VKE && !c.train)
        throw Error(ErrorCode::InvalidConfig, "one-shot runs need a train split for demonstrations");
    return c;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
    auto text = text::read_file(path);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::SchemaError, fmt::format("{}: {}", path.string(), e.what()));
    }
    return experiment_config_from_json(j, path.parent_path());
}

json to_json(const ExperimentConfig& c) {
    json j{{"name", c.name},
           {"model", c.model},
           {"task", std::string(to_string(c.task))},
           {"dataset", c.dataset.string()}};
    if (c.train)
        j["train"] = c.train->string();
    j["split"] = c.split;
    j["mode"] = std::string(to_string(c.mode));
    if (c.sample_size)
        j["sample_size"] = *c.sample_size;
    j["seed"] = c.seed;
    j["coverage"] = std::string(to_string(c.coverage));
    j["backend"] = c.backend;
    j["language"] = std::string(to_string(c.language));
    if (!c.vocabulary.empty())
        j["vocabulary"] = c.vocabulary;
    j["underscore_space_equivalent"] = c.underscore_space_equivalent;
    if (!c.lp_templates.empty())
        j["lp_templates"] = c.lp_templates;
    j["lp_metric"] = c.lp_metric;
    j["exact_match"] = std::string(metrics::to_string(c.exact_match));
    j["bleu_references"] = c.bleu_references == metrics::MultiReferencePolicy::BestSingle ? "best-single" : "joint";
    if (c.system_preamble)
        j["system_preamble"] = *c.system_preamble;
    if (c.template_dir)
        j["template_dir"] = c.template_dir->string();
    if (c.context_window)
        j["context_window"] = *c.context_window;
    j["concurrency"] = c.concurrency;
    if (!c.output_dir.empty())
        j["output_dir"] = c.output_dir.string();
    return j;
}

RunArtifact run_eval(const ExperimentConfig& config) {
    // Everything up to the first backend call may fail the run.
    auto dataset = load_dataset(config.dataset, config.task);
    std::vector<TaskInstance> train;
    if (config.train)
        train = load_dataset(*config.train, config.task);
    PortableRng rng(config.seed);

    RunArtifact art;
    art.config = config;

    // VKE without a separate train file draws its demonstrations from the
    // dataset itself, before sampling, so they cannot be evaluated.
    std::map<std::string, std::vector<TaskInstance>> vke_demos;
    std::vector<TaskInstance> candidates = dataset;
    if (config.task == TaskKind::VKE && !config.train) {
        std::set<std::string> relations;
        for (const auto& inst : dataset)
            relations.insert(sentence_of(inst).relation);
        std::unordered_set<std::string> used;
        for (const auto& rel : relations) {
            for (auto i : pick_demo(dataset, rng, {rel, 2, {}})) {
                vke_demos[rel].push_back(dataset[i]);
                used.insert(dataset[i].id);
                art.demo_ids.push_back(dataset[i].id);
            }
        }
        candidates.clear();
        for (const auto& inst : dataset) {
            if (!used.contains(inst.id))
                candidates.push_back(inst);
        }
    }

    const auto n = config.sample_size.value_or(candidates.size());
    std::vector<TaskInstance> sample;
    for (auto i : sample_instances(candidates, n, config.coverage, rng))
        sample.push_back(candidates[i]);

    std::unordered_set<std::string> evaluated_keys;
    for (const auto& inst : sample)
        evaluated_keys.insert(input_key(inst));
    std::vector<std::string> train_excluded;
    for (const auto& inst : train) {
        if (evaluated_keys.contains(input_key(inst)))
            train_excluded.push_back(inst.id);
    }

    std::optional<Demonstration> demo;
    if (config.task == TaskKind::VKE && config.train) {
        std::set<std::string> relations;
        for (const auto& inst : sample)
            relations.insert(sentence_of(inst).relation);
        for (const auto& rel : relations) {
            for (auto i : pick_demo(train, rng, {rel, 2, train_excluded})) {
                vke_demos[rel].push_back(train[i]);
                art.demo_ids.push_back(train[i].id);
            }
        }
    } else if (config.task != TaskKind::VKE && config.mode == PromptMode::OneShot) {
        auto i = pick_demo(train, rng, {std::nullopt, 1, train_excluded}).front();
        demo = make_demonstration(train[i], config.language);
        art.demo_ids.push_back(train[i].id);
    }

    TemplatePack pack = config.template_dir ? TemplatePack::load_directory(*config.template_dir) : TemplatePack::builtin();
    ForgeContext ctx{&pack, {config.system_preamble}};
    auto vocab_labels = config.vocabulary.empty() ? derive_vocabulary(dataset, train) : config.vocabulary;
    std::optional<RelationVocabulary> vocabulary;
    if (config.task == TaskKind::RE || config.task == TaskKind::EE)
        vocabulary = RelationVocabulary(config.name, vocab_labels, config.underscore_space_equivalent);
    LpTemplateRegistry lp_registry;
    for (const auto& [rel, tmpl] : config.lp_templates)
        lp_registry.add(rel, tmpl);

    std::vector<PromptBundle> prompts;
    for (const auto& inst : sample) {
        switch (config.task) {
        case TaskKind::RE:
            prompts.push_back(build_extraction_prompt(vocab_labels, sentence_of(inst).sentence, demo, config.mode,
                                                      config.language, ctx));
            break;
        case TaskKind::EE:
            prompts.push_back(build_event_prompt(vocab_labels, sentence_of(inst).sentence, demo, config.mode, ctx));
            break;
        case TaskKind::LP:
            prompts.push_back(build_lp_prompt(std::get<LinkQuery>(inst.input), lp_registry, demo, config.mode, ctx));
            break;
        case TaskKind::QA:
            prompts.push_back(
                build_qa_prompt(std::get<QuestionInput>(inst.input).question, demo, config.mode, ctx));
            break;
        case TaskKind::VKE: {
            const auto& rel = sentence_of(inst).relation;
            std::vector<Demonstration> demos;
            for (const auto& d : vke_demos.at(rel))
                demos.push_back(make_demonstration(d));
            prompts.push_back(build_vke_prompt(RelationType(rel), demos, sentence_of(inst).sentence, ctx));
            break;
        }
        }
    }

    llm::GatewayConfig gateway_config;
    gateway_config.default_window = config.context_window;
    llm::Gateway gateway(llm::make_backend(config.backend), gateway_config);

    // Dispatch. Sequence replay hands out responses in call order, so it
    // always runs serially.
    std::vector<std::string> responses(sample.size());
    std::vector<std::string> errors(sample.size());
    auto dispatch = [&](std::size_t i) {
        llm::ChatRequest request;
        request.messages = prompts[i].messages;
        request.model_name = config.model;
        try {
            responses[i] = gateway.complete(request).text;
        } catch (const Error& e) {
            errors[i] = e.what();
            spdlog::warn("instance {} scored as empty: {}", sample[i].id, e.what());
        }
    };
    const bool serial = config.concurrency <= 1 || config.backend.value("replay", std::string()) == "sequence";
    if (serial) {
        for (std::size_t i = 0; i < sample.size(); ++i)
            dispatch(i);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> workers;
        for (std::size_t w = 0; w < std::min(config.concurrency, sample.size()); ++w) {
            workers.emplace_back([&] {
                for (auto i = next++; i < sample.size(); i = next++)
                    dispatch(i);
            });
        }
        for (auto& t : workers)
            t.join();
    }

    // Parse and score.
    auto& report = art.report;
    report.task = config.task;
    report.metric = metric_name(config);
    std::vector<std::vector<Triple>> re_pred, re_gold;
    std::vector<metrics::StringSet> set_pred, set_gold;
    std::vector<std::string> lp_pred;
    std::vector<metrics::VkeOutcome> vke;
    for (std::size_t i = 0; i < sample.size(); ++i) {
        const auto& inst = sample[i];
        InstanceRecord rec;
        rec.id = inst.id;
        rec.prompt = prompts[i].content();
        rec.response = responses[i];
        rec.error = errors[i];
        rec.gold = gold_json(inst);
        const std::string& out = responses[i];
        switch (config.task) {
        case TaskKind::RE: {
            auto parsed = parse_triples(out, vocabulary, config.language);
            for (const auto& m : parsed.malformed)
                rec.malformed.push_back(m.reason + ": " + m.raw);
            const auto& gold = std::get<TripleGold>(inst.gold).triples;
            auto s = metrics::micro_f1(std::vector<std::vector<Triple>>{parsed.parsed},
                                       std::vector<std::vector<Triple>>{gold});
            rec.parsed = triples_json(parsed.parsed);
            rec.counts = {s.tp, s.fp, s.fn};
            rec.score = s.f1;
            re_pred.push_back(std::move(parsed.parsed));
            re_gold.push_back(gold);
            break;
        }
        case TaskKind::EE: {
            auto parsed = parse_event_types(out, *vocabulary);
            for (const auto& m : parsed.malformed)
                rec.malformed.push_back(m.reason + ": " + m.raw);
            const auto& gold = std::get<LabelGold>(inst.gold).labels;
            auto s = metrics::micro_f1(std::vector<metrics::StringSet>{parsed.parsed},
                                       std::vector<metrics::StringSet>{gold});
            rec.parsed = parsed.parsed;
            rec.counts = {s.tp, s.fp, s.fn};
            rec.score = s.f1;
            set_pred.push_back(std::move(parsed.parsed));
            set_gold.push_back(gold);
            break;
        }
        case TaskKind::LP: {
            std::string answer;
            try {
                answer = parse_lp_answer(out);
            } catch (const Error& e) {
                if (rec.error.empty())
                    rec.error = e.what();
            }
            const auto& aliases = std::get<AliasGold>(inst.gold).aliases;
            rec.parsed = answer;
            rec.score = config.lp_metric == "bleu1"
                            ? metrics::instance_bleu1(answer, aliases, config.bleu_references)
                            : (metrics::hit_at_1(answer, aliases) ? 1.0 : 0.0);
            lp_pred.push_back(answer);
            set_gold.push_back(aliases);
            break;
        }
        case TaskKind::QA: {
            metrics::StringSet answers;
            try {
                answers = parse_qa_answers(out);
            } catch (const Error& e) {
                if (rec.error.empty())
                    rec.error = e.what();
            }
            const auto& gold = std::get<AnswerGold>(inst.gold).answers;
            rec.parsed = answers;
            rec.score = metrics::exact_match_instance(answers, gold, config.exact_match) ? 1.0 : 0.0;
            set_pred.push_back(std::move(answers));
            set_gold.push_back(gold);
            break;
        }
        case TaskKind::VKE: {
            auto parsed = parse_triples(out);
            for (const auto& m : parsed.malformed)
                rec.malformed.push_back(m.reason + ": " + m.raw);
            metrics::VkeOutcome o{std::move(parsed.parsed), std::get<TripleGold>(inst.gold).triples.front()};
            rec.parsed = triples_json(o.parsed);
            rec.score = metrics::vke_correct(o) ? 1.0 : 0.0;
            vke.push_back(std::move(o));
            break;
        }
        }
        report.per_instance.push_back(rec.score);
        if (!rec.counts.empty())
            report.instance_counts.push_back(rec.counts);
        art.records.push_back(std::move(rec));
    }

    switch (config.task) {
    case TaskKind::RE:
    case TaskKind::EE: {
        auto s = config.task == TaskKind::RE ? metrics::micro_f1(re_pred, re_gold) : metrics::micro_f1(set_pred, set_gold);
        report.counts = s;
        report.value = s.f1;
        break;
    }
    case TaskKind::LP:
        report.value = config.lp_metric == "bleu1" ? metrics::mean_bleu1(lp_pred, set_gold, config.bleu_references)
                                                   : metrics::hits_at_1(lp_pred, set_gold);
        break;
    case TaskKind::QA: report.value = metrics::exact_match(set_pred, set_gold, config.exact_match); break;
    case TaskKind::VKE: report.value = metrics::vke_accuracy(vke); break;
    }
    std::size_t failed = std::count_if(art.records.begin(), art.records.end(), [](const auto& r) { return !r.error.empty(); });
    report.extra = json{{"name", config.name},
                        {"model", config.model},
                        {"mode", std::string(to_string(config.mode))},
                        {"instances", art.records.size()},
                        {"failed_instances", failed},
                        {"demo_ids", art.demo_ids}};

    if (!config.output_dir.empty()) {
        write_artifact(art, config.output_dir);
        text::write_file(config.output_dir / "run_log.jsonl", gateway.log().to_jsonl());
    }
    return art;
}

void write_artifact(const RunArtifact& art, const std::filesystem::path& dir) {
    const auto started = iso_now();
    // Where a run is written is not part of its identity.
    auto snapshot = to_json(art.config);
    snapshot.erase("output_dir");
    text::write_file(dir / "config.json", snapshot.dump(2) + "\n");
    std::string lines;
    for (const auto& r : art.records) {
        json j{{"id", r.id}, {"prompt", r.prompt}, {"response", r.response}, {"parsed", r.parsed},
               {"gold", r.gold}, {"score", r.score}};
        if (!r.counts.empty())
            j["counts"] = r.counts;
        if (!r.malformed.empty())
            j["malformed"] = r.malformed;
        if (!r.error.empty())
            j["error"] = r.error;
        lines += j.dump() + "\n";
    }
    text::write_file(dir / "instances.jsonl", lines);
    text::write_file(dir / "report.json", metrics::to_json(art.report).dump(2) + "\n");
    text::write_file(dir / "metadata.json", json{{"written_at", started}}.dump(2) + "\n");
}

RunArtifact read_artifact(const std::filesystem::path& dir) {
    RunArtifact art;
    try {
        art.config = experiment_config_from_json(nlohmann::json::parse(text::read_file(dir / "config.json")));
        art.report = metrics::metric_report_from_json(json::parse(text::read_file(dir / "report.json")));
        const auto instances = text::read_file(dir / "instances.jsonl");
        for (auto line : text::split_lines(instances)) {
            if (text::trim(line).empty())
                continue;
            auto j = json::parse(line);
            InstanceRecord r;
            r.id = j.at("id").get<std::string>();
            r.prompt = j.value("prompt", "");
            r.response = j.value("response", "");
            r.parsed = j.value("parsed", json());
            r.gold = j.value("gold", json());
            r.score = j.at("score").get<double>();
            r.counts = j.value("counts", std::vector<std::size_t>{});
            r.error = j.value("error", "");
            art.records.push_back(std::move(r));
        }
    } catch (const json::exception& e) {
        throw Error(ErrorCode::SchemaError, fmt::format("run artifact {}: {}", dir.string(), e.what()));
    }
    art.demo_ids = art.report.extra.value("demo_ids", std::vector<std::string>{});
    return art;
}

const std::map<std::string, double>& sota_reference() {
    static const std::map<std::string, double> sota{
        {"DuIE2.0", 69.42},  {"Re-TACRED", 91.4}, {"SciERC", 53.2},     {"MAVEN", 68.8},
        {"FB15K-237", 32.4}, {"ATOMIC2020", 46.9}, {"FreebaseQA", 79.0}, {"MetaQA", 100.0},
    };
    return sota;
}

RenderedReport render_report(const std::vector<ReportCell>& cells) {
    std::vector<std::string> columns;
    std::map<std::string, std::string> column_metric;
    std::vector<std::string> models;
    std::map<std::tuple<std::string, std::string, PromptMode>, double> values;
    for (const auto& c : cells) {
        auto [it, fresh] = column_metric.emplace(c.dataset, c.metric);
        if (!fresh && it->second != c.metric)
            throw Error(ErrorCode::DimensionMismatch,
                        fmt::format("column '{}' mixes metrics {} and {}", c.dataset, it->second, c.metric));
        if (fresh)
            columns.push_back(c.dataset);
        if (std::find(models.begin(), models.end(), c.model) == models.end())
            models.push_back(c.model);
        if (!values.emplace(std::make_tuple(c.model, c.dataset, c.mode), c.value).second)
            throw Error(ErrorCode::DimensionMismatch, fmt::format("two results for {} / {} / {}", c.model, c.dataset,
                                                                  to_string(c.mode)));
    }
    const auto& known = table_columns();
    auto rank = [&](const std::string& col) {
        auto it = std::find(known.begin(), known.end(), col);
        return static_cast<std::size_t>(it - known.begin());
    };
    std::stable_sort(columns.begin(), columns.end(), [&](const auto& a, const auto& b) {
        auto ra = rank(a), rb = rank(b);
        return ra != rb ? ra < rb : (ra == known.size() && a < b);
    });

    auto fmt_value = [](const std::string& col, double percent) {
        return col == "DuIE2.0" ? fmt::format("{:.2f}", percent) : fmt::format("{:.1f}", percent);
    };
    const std::string kMissing = "—";

    std::string md = "| Model |";
    std::string rule = "|---|";
    for (const auto& col : columns) {
        md += fmt::format(" {} |", col);
        rule += "---|";
    }
    md += "\n" + rule + "\n| Fine-Tuned SOTA |";
    json jsota = json::object();
    for (const auto& col : columns) {
        auto it = sota_reference().find(col);
        md += " " + (it == sota_reference().end() ? kMissing : fmt_value(col, it->second)) + " |";
        if (it != sota_reference().end())
            jsota[col] = it->second;
    }
    md += "\n";

    json jblocks = json::object();
    for (auto mode : {PromptMode::ZeroShot, PromptMode::OneShot}) {
        std::vector<std::string> rows;
        for (const auto& m : models) {
            for (const auto& col : columns) {
                if (values.contains({m, col, mode})) {
                    rows.push_back(m);
                    break;
                }
            }
        }
        if (rows.empty())
            continue;
        md += fmt::format("| **{}** |{}\n", mode == PromptMode::ZeroShot ? "Zero-shot" : "One-shot",
                          std::string(columns.size(), '|'));
        json jrows = json::object();
        for (const auto& m : rows) {
            md += fmt::format("| {} |", m);
            json jrow = json::object();
            for (const auto& col : columns) {
                auto it = values.find({m, col, mode});
                if (it == values.end()) {
                    md += " " + kMissing + " |";
                    jrow[col] = nullptr;
                    continue;
                }
                auto shown = fmt_value(col, it->second * 100.0);
                md += " " + shown + " |";
                jrow[col] = std::stod(shown);
            }
            md += "\n";
            jrows[m] = std::move(jrow);
        }
        jblocks[std::string(to_string(mode))] = std::move(jrows);
    }

    json jcols = json::array();
    for (const auto& col : columns)
        jcols.push_back({{"dataset", col}, {"metric", column_metric[col]}});
    return {md, json{{"columns", jcols}, {"sota", jsota}, {"blocks", jblocks}, {"cells", cells.size()}}};
}

RenderedReport render_report(const std::vector<RunArtifact>& artifacts) {
    std::vector<ReportCell> cells;
    for (const auto& a : artifacts)
        cells.push_back({a.config.model, a.config.name, a.config.mode, a.report.metric, a.report.value});
    return render_report(cells);
}

} // namespace autokg
