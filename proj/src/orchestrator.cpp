#include "autokg/orchestrator.hpp"

#include "autokg/error.hpp"
#include "autokg/prompt_forge.hpp"
#include "autokg/text.hpp"

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <array>
#include <cstdlib>

namespace autokg {

using json = nlohmann::ordered_json;

namespace {

constexpr std::array<std::pair<AgentRole, std::string_view>, 4> kRoleNames{{
    {AgentRole::TaskSpecifier, "task_specifier"},
    {AgentRole::KGAssistant, "kg_assistant"},
    {AgentRole::KGUser, "kg_user"},
    {AgentRole::WebSearcher, "web_searcher"},
}};

const char* const kSpecifierPersona =
    "You are a task specifier for knowledge graph construction. Rewrite the task you are given as a concrete "
    "plan: the entity types and relation types to cover, and where the facts can be found. Reply with the "
    "rewritten task only.";

const char* const kAssistantPersona =
    "You are the Consultant. You work with a KG domain expert to build a knowledge graph.\n"
    "Task: {{task}}\n"
    "Carry out one instruction at a time. Whenever your answer contains facts for the graph, end it with a line "
    "starting with {{final_marker}} followed by the facts as [subject, predicate, object] triples separated by "
    "commas.";

const char* const kUserPersona =
    "You are the KG domain expert. You direct a Consultant who builds a knowledge graph for you.\n"
    "Task: {{task}}\n"
    "Give the Consultant one instruction at a time and check each answer. When the knowledge graph is complete, "
    "reply with {{marker}} and nothing else.";

const char* const kSearcherPersona =
    "You are the web searcher working for the Consultant. Decide whether the instruction below needs information "
    "from the web.\n"
    "Task: {{task}}\n"
    "Reply with exactly two lines:\n"
    "BROWSE: yes or no\n"
    "QUERY: the search query (only when BROWSE is yes)";

const char* const kFirstTurnCue = "Begin. Give your first instruction.";

std::string_view role_file(AgentRole role) {
    for (const auto& [r, name] : kRoleNames) {
        if (r == role)
            return name;
    }
    return "unknown";
}

json snippets_to_json(const std::vector<Snippet>& xs) {
    json out = json::array();
    for (const auto& s : xs)
        out.push_back({{"title", s.title}, {"url", s.url}, {"text", s.text}});
    return out;
}

std::vector<Snippet> snippets_from(const json& arr, const char* text_key) {
    std::vector<Snippet> out;
    for (const auto& r : arr) {
        out.push_back({r.value("title", ""), r.value("url", ""), r.value(text_key, r.value("text", ""))});
    }
    return out;
}

std::string render_snippets(const std::vector<Snippet>& xs) {
    std::string out = "Web search results:";
    for (std::size_t i = 0; i < xs.size(); ++i)
        out += fmt::format("\n[{}] {} ({})\n{}", i + 1, xs[i].title, xs[i].url, xs[i].text);
    return out;
}

} // namespace

std::string_view to_string(AgentRole role) noexcept {
    switch (role) {
    case AgentRole::TaskSpecifier: return "TaskSpecifier";
    case AgentRole::KGAssistant: return "KGAssistant";
    case AgentRole::KGUser: return "KGUser";
    case AgentRole::WebSearcher: return "WebSearcher";
    }
    return "unknown";
}

AgentRole parse_agent_role(std::string_view name) {
    for (auto r : {AgentRole::TaskSpecifier, AgentRole::KGAssistant, AgentRole::KGUser, AgentRole::WebSearcher}) {
        if (text::iequals(name, to_string(r)) || text::iequals(name, role_file(r)))
            return r;
    }
    throw Error(ErrorCode::InvalidConfig, fmt::format("unknown agent role '{}'", name));
}

const PersonaPack& PersonaPack::builtin() {
    static const PersonaPack pack = [] {
        PersonaPack p;
        p.personas_[AgentRole::TaskSpecifier] = kSpecifierPersona;
        p.personas_[AgentRole::KGAssistant] = kAssistantPersona;
        p.personas_[AgentRole::KGUser] = kUserPersona;
        p.personas_[AgentRole::WebSearcher] = kSearcherPersona;
        return p;
    }();
    return pack;
}

PersonaPack PersonaPack::load_directory(const std::filesystem::path& dir) {
    if (!std::filesystem::is_directory(dir))
        throw Error(ErrorCode::IoError, fmt::format("persona directory '{}' not found", dir.string()));
    PersonaPack p = builtin();
    for (const auto& [role, name] : kRoleNames) {
        auto file = dir / (std::string(name) + ".txt");
        if (!std::filesystem::exists(file))
            continue;
        auto body = text::read_file(file);
        if (body.ends_with('\n'))
            body.pop_back();
        p.set(role, std::move(body));
    }
    return p;
}

void PersonaPack::save_directory(const std::filesystem::path& dir) const {
    for (const auto& [role, name] : kRoleNames)
        text::write_file(dir / (std::string(name) + ".txt"), get(role) + "\n");
}

const std::string& PersonaPack::get(AgentRole role) const { return personas_.at(role); }

void PersonaPack::set(AgentRole role, std::string body) {
    if (text::trim(body).empty())
        throw Error(ErrorCode::InvalidConfig, fmt::format("empty persona for {}", to_string(role)));
    personas_[role] = std::move(body);
}

FixtureRetriever::FixtureRetriever(std::map<std::string, std::vector<Snippet>> results) {
    for (auto& [q, xs] : results)
        results_[scoring_key(q)] = std::move(xs);
}

FixtureRetriever FixtureRetriever::load(const std::filesystem::path& path) {
    std::map<std::string, std::vector<Snippet>> results;
    try {
        auto j = json::parse(text::read_file(path));
        for (const auto& [q, arr] : j.items())
            results[q] = snippets_from(arr, "snippet");
    } catch (const json::exception& e) {
        throw Error(ErrorCode::SchemaError, fmt::format("retriever fixture {}: {}", path.string(), e.what()));
    }
    return FixtureRetriever(std::move(results));
}

std::vector<Snippet> FixtureRetriever::search(const std::string& query, std::size_t top_k) {
    auto it = results_.find(scoring_key(query));
    if (it == results_.end())
        throw Error(ErrorCode::RetrieverFailure, fmt::format("no fixture results for query '{}'", query));
    auto out = it->second;
    if (out.size() > top_k)
        out.resize(top_k);
    return out;
}

HttpRetriever::HttpRetriever(HttpRetrieverConfig config, std::shared_ptr<HttpTransport> transport)
    : config_(std::move(config)), transport_(std::move(transport)) {}

std::vector<Snippet> HttpRetriever::search(const std::string& query, std::size_t top_k) {
    HttpHeaders headers{{"Accept", "application/json"}};
    if (const char* key = std::getenv(config_.api_key_env.c_str()); key && *key)
        headers.emplace(config_.api_key_header, key);
    auto reply = transport_->get(config_.endpoint, headers, {{"q", query}, {"count", std::to_string(top_k)}});
    if (reply.status != 200)
        throw Error(ErrorCode::RetrieverFailure,
                    fmt::format("search endpoint returned {}", reply.status ? std::to_string(reply.status) : reply.error));
    std::vector<Snippet> out;
    try {
        auto j = json::parse(reply.body);
        if (j.contains("results"))
            out = snippets_from(j["results"], "snippet");
        else if (j.contains("web"))
            out = snippets_from(j["web"].value("results", json::array()), "description");
        else
            throw Error(ErrorCode::RetrieverFailure, "search response has no results array");
    } catch (const json::exception& e) {
        throw Error(ErrorCode::RetrieverFailure, fmt::format("unreadable search response: {}", e.what()));
    }
    if (out.size() > top_k)
        out.resize(top_k);
    return out;
}

std::unique_ptr<Retriever> make_retriever(const nlohmann::json& spec, const std::filesystem::path& base_dir) {
    const auto kind = spec.value("kind", std::string("fixture"));
    if (kind == "fixture") {
        std::filesystem::path path = spec.at("path").get<std::string>();
        if (path.is_relative() && !base_dir.empty())
            path = base_dir / path;
        return std::make_unique<FixtureRetriever>(FixtureRetriever::load(path));
    }
    if (kind == "http") {
        HttpRetrieverConfig c;
        c.endpoint = spec.at("endpoint").get<std::string>();
        c.api_key_env = spec.value("api_key_env", c.api_key_env);
        c.api_key_header = spec.value("api_key_header", c.api_key_header);
        return std::make_unique<HttpRetriever>(c, make_http_transport(std::chrono::seconds(spec.value("timeout_seconds", 30))));
    }
    throw Error(ErrorCode::InvalidConfig, fmt::format("unknown retriever kind '{}'", kind));
}

SearchDecision parse_search_decision(std::string_view raw) {
    SearchDecision d;
    d.raw = std::string(raw);
    std::vector<std::string_view> lines;
    for (auto line : text::split_lines(raw)) {
        if (!text::trim(line).empty())
            lines.push_back(text::trim(line));
    }
    auto field = [](std::string_view line, std::string_view name) -> std::optional<std::string_view> {
        if (!text::istarts_with(line, name))
            return std::nullopt;
        return text::trim(line.substr(name.size()));
    };
    auto browse = lines.empty() ? std::nullopt : field(lines[0], "BROWSE:");
    if (!browse || !(text::iequals(*browse, "yes") || text::iequals(*browse, "no"))) {
        d.downgraded = "malformed decision";
        return d;
    }
    if (text::iequals(*browse, "no"))
        return d;
    auto query = lines.size() > 1 ? field(lines[1], "QUERY:") : std::nullopt;
    if (!query || query->empty()) {
        d.downgraded = "browse without a query";
        return d;
    }
    d.browse = true;
    d.query = std::string(*query);
    return d;
}

void validate(const SessionConfig& c) {
    auto fail = [](std::string_view msg) { throw Error(ErrorCode::InvalidConfig, std::string(msg)); };
    if (text::trim(c.raw_task).empty())
        fail("session task is empty");
    if (c.max_turns == 0)
        fail("max_turns must be positive");
    if (c.top_k == 0)
        fail("top_k must be positive");
    if (c.termination_marker.empty() || c.final_output_marker.empty())
        fail("markers must be non-empty");
    if (c.termination_marker == c.final_output_marker)
        fail("termination and final-output markers must differ");
}

SessionConfig session_config_from_json(const nlohmann::json& j) {
    SessionConfig c;
    try {
        c.raw_task = j.at("task").get<std::string>();
        c.max_turns = j.value("max_turns", c.max_turns);
        c.termination_marker = j.value("termination_marker", c.termination_marker);
        c.final_output_marker = j.value("final_output_marker", c.final_output_marker);
        c.retrieval_enabled = j.value("retrieval_enabled", c.retrieval_enabled);
        c.top_k = j.value("top_k", c.top_k);
        c.snippet_chars = j.value("snippet_chars", c.snippet_chars);
        c.history_window = j.value("history_window", c.history_window);
        c.model_name = j.value("model", c.model_name);
        c.language = parse_language(j.value("language", std::string("en")));
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::SchemaError, fmt::format("session config: {}", e.what()));
    }
    validate(c);
    return c;
}

json to_json(const SessionConfig& c) {
    return json{{"task", c.raw_task},
                {"max_turns", c.max_turns},
                {"termination_marker", c.termination_marker},
                {"final_output_marker", c.final_output_marker},
                {"retrieval_enabled", c.retrieval_enabled},
                {"top_k", c.top_k},
                {"snippet_chars", c.snippet_chars},
                {"history_window", c.history_window},
                {"model", c.model_name},
                {"language", std::string(to_string(c.language))}};
}

std::string_view to_string(SessionOutcome outcome) noexcept {
    switch (outcome) {
    case SessionOutcome::Completed: return "completed";
    case SessionOutcome::TurnLimit: return "turn_limit";
    case SessionOutcome::BackendError: return "backend_error";
    }
    return "unknown";
}

Orchestrator::Orchestrator(llm::Gateway& gateway, Retriever* retriever, const PersonaPack& personas)
    : gateway_(gateway), retriever_(retriever), personas_(personas) {}

llm::ChatRequest Orchestrator::request(const SessionConfig& config, ChatMessages messages) const {
    llm::ChatRequest r;
    r.messages = std::move(messages);
    r.model_name = config.model_name;
    return r;
}

std::string Orchestrator::persona(AgentRole role, const SessionConfig& config, const std::string& task) const {
    return render_template(personas_.get(role), {{"task", task},
                                                 {"marker", config.termination_marker},
                                                 {"final_marker", config.final_output_marker}});
}

ChatMessages Orchestrator::dialogue_view(AgentRole self, const Transcript& t, const SessionConfig& config) const {
    ChatMessages out{{"system", persona(self, config, t.working_task)}};
    std::vector<const AgentMessage*> dialogue;
    for (const auto& m : t.messages) {
        if (m.role == AgentRole::KGUser || m.role == AgentRole::KGAssistant)
            dialogue.push_back(&m);
    }
    auto first = dialogue.size() > config.history_window ? dialogue.size() - config.history_window : 0;
    for (auto i = first; i < dialogue.size(); ++i)
        out.push_back({dialogue[i]->role == self ? "assistant" : "user", dialogue[i]->content});
    if (out.back().role != "user")
        out.push_back({"user", kFirstTurnCue});
    return out;
}

std::string Orchestrator::call(Transcript& t, const llm::ChatRequest& r) {
    ++t.backend_calls;
    return gateway_.complete(r).text;
}

std::string Orchestrator::specify_task(const SessionConfig& config) {
    if (text::trim(config.raw_task).empty())
        throw Error(ErrorCode::InvalidConfig, "session task is empty");
    Transcript scratch;
    return call(scratch, request(config, {{"system", persona(AgentRole::TaskSpecifier, config, config.raw_task)},
                                          {"user", config.raw_task}}));
}

SearchDecision Orchestrator::decide_and_retrieve(const SessionConfig& config, const std::string& working_task,
                                                 const std::string& user_message) {
    auto raw = gateway_.complete(request(config, {{"system", persona(AgentRole::WebSearcher, config, working_task)},
                                                  {"user", "Instruction from the KG domain expert:\n" + user_message}}))
                   .text;
    auto d = parse_search_decision(raw);
    if (!d.downgraded.empty())
        spdlog::warn("web searcher reply treated as no-browse ({}): '{}'", d.downgraded,
                     text::utf8_truncate(raw, 80));
    if (!d.browse)
        return d;
    if (!retriever_) {
        d.browse = false;
        d.query.clear();
        d.downgraded = "no retriever configured";
        spdlog::warn("browse requested but no retriever is configured");
        return d;
    }
    try {
        d.snippets_used = retriever_->search(d.query, config.top_k);
        for (auto& s : d.snippets_used)
            s.text = std::string(text::utf8_truncate(s.text, config.snippet_chars));
    } catch (const Error& e) {
        spdlog::warn("retrieval for '{}' failed, continuing without snippets: {}", d.query, e.what());
        d.browse = false;
        d.query.clear();
        d.snippets_used.clear();
        d.downgraded = e.what();
    }
    return d;
}

SessionResult Orchestrator::run_session(const SessionConfig& config, const std::optional<RelationVocabulary>& vocabulary) {
    validate(config);
    if (config.retrieval_enabled && !retriever_)
        throw Error(ErrorCode::InvalidConfig, "retrieval is enabled but no retriever was supplied");

    Transcript t;
    std::size_t next_index = 0;
    auto append = [&](AgentRole role, std::string content, std::vector<Snippet> attachments = {}) {
        t.messages.push_back({role, next_index++, std::move(content), std::move(attachments)});
    };

    try {
        ++t.backend_calls;
        t.working_task = specify_task(config);
        append(AgentRole::TaskSpecifier, t.working_task);

        t.outcome = SessionOutcome::TurnLimit;
        for (std::size_t turn = 0; turn < config.max_turns; ++turn) {
            auto instruction = call(t, request(config, dialogue_view(AgentRole::KGUser, t, config)));
            append(AgentRole::KGUser, instruction);
            ++t.user_turns;
            if (instruction.find(config.termination_marker) != std::string::npos) {
                t.outcome = SessionOutcome::Completed;
                break;
            }

            std::vector<Snippet> snippets;
            if (config.retrieval_enabled) {
                ++t.backend_calls;
                auto d = decide_and_retrieve(config, t.working_task, instruction);
                snippets = d.snippets_used;
                t.search_decisions.push_back(std::move(d));
            }
            auto view = dialogue_view(AgentRole::KGAssistant, t, config);
            if (!snippets.empty())
                view.back().content += "\n\n" + render_snippets(snippets);
            append(AgentRole::KGAssistant, call(t, request(config, std::move(view))), std::move(snippets));
        }
    } catch (const Error& e) {
        spdlog::error("session aborted after {} backend calls: {}", t.backend_calls, e.what());
        t.outcome = SessionOutcome::BackendError;
        t.error = e.what();
    }
    return harvest_kg(std::move(t), config.final_output_marker, vocabulary, config.language);
}

SessionResult harvest_kg(Transcript transcript, const std::string& final_output_marker,
                         const std::optional<RelationVocabulary>& vocabulary, Language language) {
    std::string segments;
    for (const auto& m : transcript.messages) {
        if (m.role != AgentRole::KGAssistant)
            continue;
        for (auto pos = m.content.find(final_output_marker); pos != std::string::npos;) {
            auto start = pos + final_output_marker.size();
            auto next = m.content.find(final_output_marker, start);
            segments += m.content.substr(start, next == std::string::npos ? std::string::npos : next - start);
            segments += '\n';
            pos = next;
        }
    }
    SessionResult r{std::move(transcript), KnowledgeGraph(vocabulary), {}};
    auto parsed = parse_triples(segments, vocabulary, language);
    for (auto& triple : parsed.parsed)
        r.graph.insert(std::move(triple));
    r.malformed = std::move(parsed.malformed);
    return r;
}

json to_json(const SessionResult& result, const SessionConfig& config) {
    const auto& t = result.transcript;
    json messages = json::array();
    for (const auto& m : t.messages) {
        json jm{{"role", std::string(to_string(m.role))}, {"turn_index", m.turn_index}, {"content", m.content}};
        if (!m.attachments.empty())
            jm["attachments"] = snippets_to_json(m.attachments);
        messages.push_back(std::move(jm));
    }
    json decisions = json::array();
    for (const auto& d : t.search_decisions) {
        json jd{{"browse", d.browse}, {"query", d.query}, {"snippets_used", snippets_to_json(d.snippets_used)},
                {"raw", d.raw}};
        if (!d.downgraded.empty())
            jd["downgraded"] = d.downgraded;
        decisions.push_back(std::move(jd));
    }
    json malformed = json::array();
    for (const auto& m : result.malformed)
        malformed.push_back({{"raw", m.raw}, {"reason", m.reason}});

    json out{{"config", to_json(config)},
             {"working_task", t.working_task},
             {"outcome", std::string(to_string(t.outcome))},
             {"user_turns", t.user_turns},
             {"backend_calls", t.backend_calls},
             {"messages", std::move(messages)},
             {"search_decisions", std::move(decisions)},
             {"graph", graph_to_json(result.graph)},
             {"malformed", std::move(malformed)},
             {"validated", false}};
    if (!t.error.empty())
        out["error"] = t.error;
    return out;
}

std::vector<std::string> check_transcript(const Transcript& t, const SessionConfig& config) {
    std::vector<std::string> problems;
    for (std::size_t i = 1; i < t.messages.size(); ++i) {
        if (t.messages[i].turn_index <= t.messages[i - 1].turn_index)
            problems.push_back(fmt::format("turn index not increasing at message {}", i));
    }
    std::size_t assistant_turns = 0;
    std::optional<AgentRole> prev;
    for (std::size_t i = 0; i < t.messages.size(); ++i) {
        auto role = t.messages[i].role;
        if (role == AgentRole::TaskSpecifier) {
            if (i != 0)
                problems.push_back(fmt::format("specifier message at position {}", i));
            continue;
        }
        if (role != AgentRole::KGUser && role != AgentRole::KGAssistant) {
            problems.push_back(fmt::format("unexpected {} message at position {}", to_string(role), i));
            continue;
        }
        if (!prev && role != AgentRole::KGUser)
            problems.push_back("dialogue does not open with the KG user");
        if (prev && *prev == role)
            problems.push_back(fmt::format("consecutive {} messages at position {}", to_string(role), i));
        prev = role;
        assistant_turns += role == AgentRole::KGAssistant;
    }
    auto expected_decisions = config.retrieval_enabled ? assistant_turns : 0;
    // An aborted assistant turn may leave one decision without its reply.
    bool aborted_after_search = t.outcome == SessionOutcome::BackendError &&
                                t.search_decisions.size() == expected_decisions + 1;
    if (t.search_decisions.size() != expected_decisions && !aborted_after_search)
        problems.push_back(fmt::format("{} search decisions for {} assistant turns", t.search_decisions.size(),
                                       assistant_turns));
    auto bound = 1 + config.max_turns * 3;
    if (t.backend_calls > bound)
        problems.push_back(fmt::format("{} backend calls exceed the bound {}", t.backend_calls, bound));
    if (t.user_turns > config.max_turns)
        problems.push_back(fmt::format("{} user turns exceed max_turns", t.user_turns));
    return problems;
}

} // namespace autokg
