#include "autokg/prompt_forge.hpp"

#include "autokg/error.hpp"
#include "autokg/text.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <unordered_set>

namespace autokg {

namespace {

// clang-format off
const std::map<std::string, std::string> kBuiltinTemplates = {
    {"re_en_zero_shot",
     "The list of predicates: {{vocabulary}}.\n"
     "What Subject-Predicate-Object triples are included in the following sentence? Please return the possible answers according to the list above. Require the answer only in the form : [subject, predicate, object].\n"
     "The given sentence is: {{sentence}}\n"
     "Triples:"},
    {"re_en_one_shot",
     "The list of predicates: {{vocabulary}}.\n"
     "What Subject-Predicate-Object triples are included in the following sentence? Please return the possible answers according to the list above. Require the answer only in the form: [subject, predicate, object]\n"
     "\n"
     "Example:\n"
     "The given sentence is : {{demo_input}}\n"
     "Triples: {{demo_answer}}\n"
     "\n"
     "The given sentence is : {{sentence}}\n"
     "Triples:"},
    {"re_zh_zero_shot",
     "已知候选谓词列表： {{vocabulary}} .\n"
     "请从以下文本中提取可能的主语-谓语-宾语三元组(SPO三元组)，并以[[主语，谓语，宾语]，...]的形式回答\n"
     "给定句子： {{sentence}}\n"
     "SPO三元组:"},
    {"re_zh_one_shot",
     "已知候选谓词列表： {{vocabulary}} .\n"
     "请从以下文本中提取可能的主语-谓语-宾语三元组(SPO三元组)，并以[[主语，谓语，宾语]，...]的形式回答\n"
     "\n"
     "例如:\n"
     "给定句子: {{demo_input}}\n"
     "SPO三元组: {{demo_answer}}\n"
     "\n"
     "给定句子: {{sentence}}\n"
     "SPO三元组:"},
    {"ee_zero_shot",
     "The list of event types: {{vocabulary}}\n"
     "Give a sentence: {{sentence}}\n"
     "What types of events are included in this sentence? Please return the most likely answer according to the list of event types above. Require the answer in the form: Event type\n"
     "Ans:"},
    {"ee_one_shot",
     "The list of event types: {{vocabulary}}\n"
     "What types of events are included in the following sentence? Please return the most likely answer according to the list of event types above. Require the answer in the form: Event type\n"
     "Example:\n"
     "Give a sentence: {{demo_input}}\n"
     "Event type: {{demo_answer}}\n"
     "\n"
     "Give a sentence: {{sentence}}\n"
     "Event type:"},
    {"lp_zero_shot",
     "predict the tail entity [MASK] from the given ({{head}}, {{relation}}, [MASK]) by completing the sentence \"{{question}} The answer is\"."},
    {"lp_one_shot",
     "predict the tail entity [MASK] from the given ({{demo_head}}, {{demo_relation}}, [MASK]) by completing the sentence \"{{demo_question}} The answer is \".The answer is {{demo_answer}}, so the [MASK] is {{demo_answer}}.\n"
     "predict the tail entity [MASK] from the given ({{head}}, {{relation}}, [MASK]) by completing the sentence \"{{question}} The answer is\"."},
    {"qa_zero_shot",
     "Please answer the following question. Note that there may be more than one answer to the question.\n"
     "Question: {{question}}\n"
     "Answer:"},
    {"qa_one_shot",
     "Please answer the following question. Note that there may be more than one answer to the question.\n"
     "Question: {{demo_input}}\n"
     "Answer: {{demo_answer}}\n"
     "Question: {{question}}\n"
     "Answer:"},
    {"vke_two_shot",
     "There might be Subject-Predicate-Object triples in the following sentence. The predicate between the head and tail entities is known to be: {{relation}}.\n"
     "Please find these two entities and give your answers in the form of [subject, predicate, object].\n"
     "\n"
     "Example:\n"
     "The given sentence is : {{demo1_input}}\n"
     "Triples: {{demo1_answer}}\n"
     "The given sentence is : {{demo2_input}}\n"
     "Triples: {{demo2_answer}}\n"
     "\n"
     "The given sentence is : {{sentence}}\n"
     "Triples:"},
};
// clang-format on

void check_mode(PromptMode mode, const std::optional<Demonstration>& demo) {
    if (mode == PromptMode::OneShot && !demo)
        throw Error(ErrorCode::MissingDemo, "one-shot prompt needs a demonstration");
    if (mode == PromptMode::ZeroShot && demo)
        throw Error(ErrorCode::ModeMismatch, "zero-shot prompt was given a demonstration");
    if (demo && demo->source_split != Split::Train)
        throw Error(ErrorCode::ModeMismatch, "one-shot demonstrations must come from the train split");
}

void check_sentence(std::string_view sentence) {
    if (text::trim(sentence).empty())
        throw Error(ErrorCode::EmptySentence, "input sentence is empty");
}

std::vector<std::string> unique_labels(const std::vector<std::string>& labels) {
    std::vector<std::string> out;
    std::unordered_set<std::string> seen;
    for (const auto& l : labels) {
        if (seen.insert(l).second)
            out.push_back(l);
    }
    return out;
}

PromptBundle make_bundle(std::string content, PromptMode mode, TaskKind kind, std::size_t demos,
                         const PromptOptions& options) {
    PromptBundle b;
    if (options.system_preamble)
        b.messages.push_back({"system", *options.system_preamble});
    b.messages.push_back({"user", std::move(content)});
    b.mode = mode;
    b.task_kind = kind;
    b.demonstration_count = demos;
    return b;
}

std::string template_name(std::string_view stem, PromptMode mode) {
    return fmt::format("{}_{}", stem, mode == PromptMode::ZeroShot ? "zero_shot" : "one_shot");
}

} // namespace

std::string_view to_string(PromptMode mode) noexcept {
    return mode == PromptMode::ZeroShot ? "zero-shot" : "one-shot";
}

PromptMode parse_prompt_mode(std::string_view name) {
    if (name == "zero-shot" || name == "zero_shot" || name == "zero")
        return PromptMode::ZeroShot;
    if (name == "one-shot" || name == "one_shot" || name == "one")
        return PromptMode::OneShot;
    throw Error(ErrorCode::InvalidConfig, fmt::format("unknown prompt mode '{}'", name));
}

std::string render_template(std::string_view tmpl, const std::map<std::string, std::string>& values) {
    std::string out;
    out.reserve(tmpl.size() + 256);
    std::size_t pos = 0;
    while (pos < tmpl.size()) {
        auto open = tmpl.find("{{", pos);
        if (open == std::string_view::npos) {
            out.append(tmpl.substr(pos));
            break;
        }
        auto close = tmpl.find("}}", open + 2);
        if (close == std::string_view::npos)
            throw Error(ErrorCode::UnresolvedPlaceholder, "unterminated placeholder in template");
        out.append(tmpl.substr(pos, open - pos));
        const std::string name(text::trim(tmpl.substr(open + 2, close - open - 2)));
        auto it = values.find(name);
        if (it == values.end())
            throw Error(ErrorCode::UnresolvedPlaceholder, fmt::format("no value for '{{{{{}}}}}'", name));
        out.append(it->second);
        pos = close + 2;
    }
    return out;
}

std::string render_label_list(const std::vector<std::string>& labels) {
    std::string out = "[";
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (i)
            out += ", ";
        out.push_back('\'');
        for (char c : labels[i]) {
            if (c == '\'' || c == '\\')
                out.push_back('\\');
            out.push_back(c);
        }
        out.push_back('\'');
    }
    out += "]";
    return out;
}

const TemplatePack& TemplatePack::builtin() {
    static const TemplatePack pack = [] {
        TemplatePack p;
        p.templates_ = kBuiltinTemplates;
        return p;
    }();
    return pack;
}

TemplatePack TemplatePack::load_directory(const std::filesystem::path& dir) {
    if (!std::filesystem::is_directory(dir))
        throw Error(ErrorCode::IoError, fmt::format("template directory '{}' not found", dir.string()));
    TemplatePack p = builtin();
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        if (!entry.is_regular_file() || entry.path().extension() != ".txt")
            continue;
        std::string body = text::read_file(entry.path());
        if (body.ends_with('\n'))
            body.pop_back();
        p.templates_[entry.path().stem().string()] = std::move(body);
    }
    return p;
}

void TemplatePack::save_directory(const std::filesystem::path& dir) const {
    for (const auto& [name, body] : templates_)
        text::write_file(dir / (name + ".txt"), body + "\n");
}

const std::string& TemplatePack::get(const std::string& name) const {
    auto it = templates_.find(name);
    if (it == templates_.end())
        throw Error(ErrorCode::MissingTemplate, fmt::format("template '{}' is not in the pack", name));
    return it->second;
}

void LpTemplateRegistry::add(std::string relation, std::string question_template) {
    entries_[scoring_key(relation)] = std::move(question_template);
}

bool LpTemplateRegistry::contains(std::string_view relation) const {
    return entries_.contains(scoring_key(relation));
}

std::string LpTemplateRegistry::question_for(std::string_view relation, std::string_view head) const {
    auto it = entries_.find(scoring_key(relation));
    if (it == entries_.end())
        throw Error(ErrorCode::MissingTemplate, fmt::format("no question template for relation '{}'", relation));
    return render_template(it->second, {{"head", std::string(head)}});
}

PromptBundle build_extraction_prompt(const std::vector<std::string>& vocabulary, std::string_view sentence,
                                     const std::optional<Demonstration>& demo, PromptMode mode, Language language,
                                     const ForgeContext& ctx) {
    if (vocabulary.empty())
        throw Error(ErrorCode::EmptyVocabulary, "predicate vocabulary is empty");
    check_sentence(sentence);
    check_mode(mode, demo);

    std::map<std::string, std::string> values{
        {"vocabulary", render_label_list(unique_labels(vocabulary))},
        {"sentence", std::string(sentence)},
    };
    if (demo) {
        values["demo_input"] = demo->input_text;
        values["demo_answer"] = demo->answer_text;
    }
    const auto stem = language == Language::Zh ? "re_zh" : "re_en";
    return make_bundle(render_template(ctx.templates->get(template_name(stem, mode)), values), mode, TaskKind::RE,
                       demo ? 1 : 0, ctx.options);
}

PromptBundle build_event_prompt(const std::vector<std::string>& event_vocabulary, std::string_view sentence,
                                const std::optional<Demonstration>& demo, PromptMode mode, const ForgeContext& ctx) {
    if (event_vocabulary.empty())
        throw Error(ErrorCode::EmptyVocabulary, "event-type vocabulary is empty");
    check_sentence(sentence);
    check_mode(mode, demo);

    std::map<std::string, std::string> values{
        {"vocabulary", render_label_list(unique_labels(event_vocabulary))},
        {"sentence", std::string(sentence)},
    };
    if (demo) {
        values["demo_input"] = demo->input_text;
        values["demo_answer"] = demo->answer_text;
    }
    return make_bundle(render_template(ctx.templates->get(template_name("ee", mode)), values), mode, TaskKind::EE,
                       demo ? 1 : 0, ctx.options);
}

PromptBundle build_lp_prompt(const LinkQuery& query, const LpTemplateRegistry& questions,
                             const std::optional<Demonstration>& demo, PromptMode mode, const ForgeContext& ctx) {
    check_mode(mode, demo);
    std::map<std::string, std::string> values{
        {"head", query.head.normalized()},
        {"relation", query.relation.label},
        {"question", questions.question_for(query.relation.label, query.head.normalized())},
    };
    if (demo) {
        const std::string demo_relation = demo->relation.empty() ? query.relation.label : demo->relation;
        values["demo_head"] = demo->input_text;
        values["demo_relation"] = demo_relation;
        values["demo_question"] = questions.question_for(demo_relation, demo->input_text);
        values["demo_answer"] = demo->answer_text;
    }
    return make_bundle(render_template(ctx.templates->get(template_name("lp", mode)), values), mode, TaskKind::LP,
                       demo ? 1 : 0, ctx.options);
}

PromptBundle build_qa_prompt(std::string_view question, const std::optional<Demonstration>& demo, PromptMode mode,
                             const ForgeContext& ctx) {
    if (text::trim(question).empty())
        throw Error(ErrorCode::EmptyQuestion, "question is empty");
    check_mode(mode, demo);
    std::map<std::string, std::string> values{{"question", std::string(question)}};
    if (demo) {
        values["demo_input"] = demo->input_text;
        values["demo_answer"] = demo->answer_text;
    }
    return make_bundle(render_template(ctx.templates->get(template_name("qa", mode)), values), mode, TaskKind::QA,
                       demo ? 1 : 0, ctx.options);
}

PromptBundle build_vke_prompt(const RelationType& relation, const std::vector<Demonstration>& demos,
                              std::string_view sentence, const ForgeContext& ctx) {
    if (demos.size() != 2)
        throw Error(ErrorCode::WrongDemoCount,
                    fmt::format("virtual extraction needs exactly two demonstrations, got {}", demos.size()));
    for (const auto& d : demos) {
        if (d.relation.empty() || scoring_key(d.relation) != relation.key())
            throw Error(ErrorCode::DemoRelationMismatch,
                        fmt::format("demonstration predicate '{}' differs from '{}'", d.relation, relation.label));
    }
    check_sentence(sentence);
    std::map<std::string, std::string> values{
        {"relation", relation.label},
        {"demo1_input", demos[0].input_text},
        {"demo1_answer", demos[0].answer_text},
        {"demo2_input", demos[1].input_text},
        {"demo2_answer", demos[1].answer_text},
        {"sentence", std::string(sentence)},
    };
    return make_bundle(render_template(ctx.templates->get("vke_two_shot"), values), PromptMode::OneShot,
                       TaskKind::VKE, 2, ctx.options);
}

} // namespace autokg
