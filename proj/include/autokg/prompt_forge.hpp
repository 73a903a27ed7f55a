#pragma once

#include "autokg/chat.hpp"
#include "autokg/kg_model.hpp"

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

// Zero-shot and one-shot prompt construction for the five evaluation tasks.
//
// Built-in templates reproduce the reference prompts text-for-text;
// a template pack directory can override any of them by file name.
namespace autokg {

enum class PromptMode { ZeroShot, OneShot };
enum class Split { Train, Test };

std::string_view to_string(PromptMode mode) noexcept;
PromptMode parse_prompt_mode(std::string_view name);

struct Demonstration {
    std::string input_text;  // sentence, question, or (LP) head entity
    std::string answer_text; // rendered answer exactly as it appears in the prompt
    Split source_split = Split::Train;
    std::string relation; // VKE: shared predicate; LP: the demo's relation
};

struct PromptBundle {
    ChatMessages messages;
    PromptMode mode = PromptMode::ZeroShot;
    TaskKind task_kind = TaskKind::RE;
    std::size_t demonstration_count = 0;

    // The task text (content of the final user message).
    const std::string& content() const { return messages.back().content; }
};

struct PromptOptions {
    // Prepended as a system message; off by default so the whole prompt is a
    // single user turn, as in the interactive setting it reproduces.
    std::optional<std::string> system_preamble;
};

// Replaces {{name}} placeholders. Throws Error{UnresolvedPlaceholder} for a
// placeholder without a value. Substituted values are not rescanned.
std::string render_template(std::string_view tmpl, const std::map<std::string, std::string>& values);

// Python-list style rendering used for vocabularies: ['A', 'B'].
std::string render_label_list(const std::vector<std::string>& labels);

class TemplatePack {
public:
    static const TemplatePack& builtin();

    // Built-ins overridden by every `<name>.txt` found in `dir`.
    static TemplatePack load_directory(const std::filesystem::path& dir);
    void save_directory(const std::filesystem::path& dir) const;

    // Throws Error{MissingTemplate}.
    const std::string& get(const std::string& name) const;
    const std::map<std::string, std::string>& all() const noexcept { return templates_; }

private:
    std::map<std::string, std::string> templates_;
};

// Per-relation LP question templates, e.g.
// "time event locations" -> "what is the locations of {{head}}?".
class LpTemplateRegistry {
public:
    void add(std::string relation, std::string question_template);
    bool contains(std::string_view relation) const;
    // Throws Error{MissingTemplate}.
    std::string question_for(std::string_view relation, std::string_view head) const;
    const std::map<std::string, std::string>& entries() const noexcept { return entries_; }

private:
    std::map<std::string, std::string> entries_; // keyed by scoring_key(relation)
};

struct ForgeContext {
    const TemplatePack* templates = &TemplatePack::builtin();
    PromptOptions options{};
};

PromptBundle build_extraction_prompt(const std::vector<std::string>& vocabulary, std::string_view sentence,
                                     const std::optional<Demonstration>& demo, PromptMode mode,
                                     Language language = Language::En, const ForgeContext& ctx = {});

PromptBundle build_event_prompt(const std::vector<std::string>& event_vocabulary, std::string_view sentence,
                                const std::optional<Demonstration>& demo, PromptMode mode,
                                const ForgeContext& ctx = {});

PromptBundle build_lp_prompt(const LinkQuery& query, const LpTemplateRegistry& questions,
                             const std::optional<Demonstration>& demo, PromptMode mode,
                             const ForgeContext& ctx = {});

PromptBundle build_qa_prompt(std::string_view question, const std::optional<Demonstration>& demo, PromptMode mode,
                             const ForgeContext& ctx = {});

PromptBundle build_vke_prompt(const RelationType& relation, const std::vector<Demonstration>& demos,
                              std::string_view sentence, const ForgeContext& ctx = {});

} // namespace autokg
