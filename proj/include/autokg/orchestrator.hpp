#pragma once

#include "autokg/answer_parser.hpp"
#include "autokg/http.hpp"
#include "autokg/kg_model.hpp"
#include "autokg/llm_gateway.hpp"

#include <nlohmann/json.hpp>

#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

// Multi-agent KG construction: a task specifier, a KG user and a KG assistant
// in alternating turns, with a web-search gate owned by the assistant.
namespace autokg {

enum class AgentRole { TaskSpecifier, KGAssistant, KGUser, WebSearcher };

std::string_view to_string(AgentRole role) noexcept;
AgentRole parse_agent_role(std::string_view name);

// Role descriptions with {{task}}, {{marker}}, {{final_marker}} placeholders.
class PersonaPack {
public:
    static const PersonaPack& builtin();
    // Built-ins overridden by <role>.txt files (task_specifier, kg_assistant,
    // kg_user, web_searcher).
    static PersonaPack load_directory(const std::filesystem::path& dir);
    void save_directory(const std::filesystem::path& dir) const;

    const std::string& get(AgentRole role) const;
    void set(AgentRole role, std::string text); // Throws Error{InvalidConfig} on blank text.

private:
    std::map<AgentRole, std::string> personas_;
};

struct Snippet {
    std::string title;
    std::string url;
    std::string text;
};

class Retriever {
public:
    virtual ~Retriever() = default;
    // Throws Error{RetrieverFailure}.
    virtual std::vector<Snippet> search(const std::string& query, std::size_t top_k) = 0;
};

// JSON file {"<query>": [{"title","url","snippet"}, ...], ...}; queries match
// after scoring_key() normalization. Unknown queries fail.
class FixtureRetriever final : public Retriever {
public:
    explicit FixtureRetriever(std::map<std::string, std::vector<Snippet>> results);
    static FixtureRetriever load(const std::filesystem::path& path);

    std::vector<Snippet> search(const std::string& query, std::size_t top_k) override;

private:
    std::map<std::string, std::vector<Snippet>> results_;
};

struct HttpRetrieverConfig {
    std::string endpoint;
    std::string api_key_env = "SEARCH_API_KEY";
    std::string api_key_header = "X-Subscription-Token";
};

// GET <endpoint>?q=<query>&count=<k>. Accepts {"results":[{title,url,snippet}]}
// or {"web":{"results":[{title,url,description}]}} bodies.
class HttpRetriever final : public Retriever {
public:
    HttpRetriever(HttpRetrieverConfig config, std::shared_ptr<HttpTransport> transport);
    std::vector<Snippet> search(const std::string& query, std::size_t top_k) override;

private:
    HttpRetrieverConfig config_;
    std::shared_ptr<HttpTransport> transport_;
};

// {"kind":"fixture","path":"results.json"} or
// {"kind":"http","endpoint":"...","api_key_env":"...","api_key_header":"..."}.
// Relative paths resolve against `base_dir`.
std::unique_ptr<Retriever> make_retriever(const nlohmann::json& spec, const std::filesystem::path& base_dir = {});

struct AgentMessage {
    AgentRole role = AgentRole::KGUser;
    std::size_t turn_index = 0;
    std::string content;
    std::vector<Snippet> attachments;
};

struct SearchDecision {
    bool browse = false;
    std::string query; // non-empty iff browse
    std::vector<Snippet> snippets_used;
    std::string raw;        // searcher output as received
    std::string downgraded; // why a browse was turned off, if it was
};

// "BROWSE: yes|no" then "QUERY: <text>" when yes. Anything else is
// malformed and yields browse=false with `downgraded` set.
SearchDecision parse_search_decision(std::string_view text);

struct SessionConfig {
    std::string raw_task;
    std::size_t max_turns = 20;
    std::string termination_marker = "TASK_DONE";
    std::string final_output_marker = "FINAL_KG:";
    bool retrieval_enabled = false;
    std::size_t top_k = 3;
    std::size_t snippet_chars = 300;   // bytes, cut on a UTF-8 boundary
    std::size_t history_window = 8;    // prior dialogue messages shown to each agent
    std::string model_name = "scripted";
    Language language = Language::En;  // harvest parser mode
};

// Throws Error{InvalidConfig}.
void validate(const SessionConfig& config);
SessionConfig session_config_from_json(const nlohmann::json& j);
nlohmann::ordered_json to_json(const SessionConfig& config);

enum class SessionOutcome { Completed, TurnLimit, BackendError };

std::string_view to_string(SessionOutcome outcome) noexcept;

struct Transcript {
    std::string working_task;
    std::vector<AgentMessage> messages;
    std::vector<SearchDecision> search_decisions;
    SessionOutcome outcome = SessionOutcome::Completed;
    std::string error;
    std::size_t backend_calls = 0;
    std::size_t user_turns = 0;
};

struct SessionResult {
    Transcript transcript;
    KnowledgeGraph graph;
    std::vector<MalformedFragment> malformed;
};

class Orchestrator {
public:
    // `retriever` may be null when retrieval is disabled.
    Orchestrator(llm::Gateway& gateway, Retriever* retriever, const PersonaPack& personas = PersonaPack::builtin());

    // One specifier call. Throws Error{InvalidConfig} for a blank task.
    std::string specify_task(const SessionConfig& config);

    SearchDecision decide_and_retrieve(const SessionConfig& config, const std::string& working_task,
                                       const std::string& user_message);

    // Backend failures end the session with outcome BackendError; the partial
    // transcript and whatever was harvested so far are kept.
    SessionResult run_session(const SessionConfig& config,
                              const std::optional<RelationVocabulary>& vocabulary = std::nullopt);

private:
    llm::ChatRequest request(const SessionConfig& config, ChatMessages messages) const;
    std::string persona(AgentRole role, const SessionConfig& config, const std::string& task) const;
    ChatMessages dialogue_view(AgentRole self, const Transcript& t, const SessionConfig& config) const;
    std::string call(Transcript& t, const llm::ChatRequest& r);

    llm::Gateway& gateway_;
    Retriever* retriever_;
    const PersonaPack& personas_;
};

// Triples from every assistant message segment after `final_output_marker`,
// deduplicated into a fresh graph.
SessionResult harvest_kg(Transcript transcript, const std::string& final_output_marker,
                         const std::optional<RelationVocabulary>& vocabulary = std::nullopt,
                         Language language = Language::En);

// Session artifact: config, messages, decisions, graph, malformed fragments,
// outcome. The graph is marked unvalidated.
nlohmann::ordered_json to_json(const SessionResult& result, const SessionConfig& config);

// Structural checks over a transcript: strictly increasing turn indices,
// user/assistant alternation after the opening, one decision per assistant
// turn iff retrieval is on, and the backend call bound. Returns the
// violations found (empty when all hold).
std::vector<std::string> check_transcript(const Transcript& t, const SessionConfig& config);

} // namespace autokg
