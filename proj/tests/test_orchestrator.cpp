#include "autokg/error.hpp"
#include "autokg/orchestrator.hpp"
#include "session_fixtures.hpp"

#include <doctest.h>

using namespace autokg;

namespace {

llm::Fixture responses(const std::vector<std::string>& xs) {
    llm::Fixture f;
    for (const auto& x : xs)
        f.entries.push_back({"", "", x});
    return f;
}

std::shared_ptr<llm::Backend> sequence(const std::vector<std::string>& xs) {
    return std::make_shared<llm::ScriptedBackend>(responses(xs), llm::ReplayMode::Sequence);
}

SessionConfig config(std::size_t max_turns, bool retrieval) {
    SessionConfig c;
    c.raw_task = "build a KG about the film Spider-Man: Across the Spider-Verse";
    c.max_turns = max_turns;
    c.retrieval_enabled = retrieval;
    return c;
}

std::string roles(const Transcript& t) {
    std::string out;
    for (const auto& m : t.messages)
        out += std::string(to_string(m.role)) + " ";
    return out;
}

} // namespace

TEST_CASE("specifier returns the backend's elaboration") {
    llm::Gateway g(sequence({"ELABORATED"}));
    Orchestrator o(g, nullptr);
    CHECK(o.specify_task(config(3, false)) == "ELABORATED");
    auto blank = config(3, false);
    blank.raw_task = "  ";
    CHECK_THROWS_AS(o.specify_task(blank), Error);
}

TEST_CASE("search decision grammar") {
    auto no = parse_search_decision("BROWSE: no");
    CHECK_FALSE(no.browse);
    CHECK(no.query.empty());
    CHECK(no.downgraded.empty());
    auto yes = parse_search_decision("browse: YES\nQUERY: Spider-Verse 2023 cast\n");
    CHECK(yes.browse);
    CHECK(yes.query == "Spider-Verse 2023 cast");
    auto bad = parse_search_decision("maybe?");
    CHECK_FALSE(bad.browse);
    CHECK_FALSE(bad.downgraded.empty());
    CHECK_FALSE(parse_search_decision("BROWSE: yes").browse);
    CHECK_FALSE(parse_search_decision("").browse);
}

TEST_CASE("decide_and_retrieve attaches top-k snippets and downgrades failures") {
    FixtureRetriever retriever({{"Spider-Verse 2023 cast",
                                 {{"a", "u1", "one"}, {"b", "u2", "two"}, {"c", "u3", "three"}, {"d", "u4", "four"}}}});
    llm::Gateway g(sequence({"BROWSE: yes\nQUERY: spider-verse 2023  CAST", "BROWSE: yes\nQUERY: unknown query"}));
    Orchestrator o(g, &retriever);
    auto c = config(3, true);
    auto d = o.decide_and_retrieve(c, "task", "who is in the cast?");
    CHECK(d.browse);
    REQUIRE(d.snippets_used.size() == 3);
    CHECK(d.snippets_used[2].text == "three");

    auto failed = o.decide_and_retrieve(c, "task", "x");
    CHECK_FALSE(failed.browse);
    CHECK(failed.query.empty());
    CHECK(failed.snippets_used.empty());
    CHECK(failed.downgraded.find("RetrieverFailure") != std::string::npos);
}

TEST_CASE("snippets are truncated on a character boundary") {
    FixtureRetriever retriever({{"q", {{"t", "u", "ab文cd"}}}});
    llm::Gateway g(sequence({"BROWSE: yes\nQUERY: q"}));
    Orchestrator o(g, &retriever);
    auto c = config(3, true);
    c.snippet_chars = 4;
    CHECK(o.decide_and_retrieve(c, "task", "x").snippets_used[0].text == "ab");
}

TEST_CASE("completed session from the fixture") {
    auto run = session_fixtures::run("completed_session");
    const auto& t = run.result.transcript;
    CHECK(t.outcome == SessionOutcome::Completed);
    CHECK(t.user_turns == 3);
    CHECK(t.backend_calls == 8);
    CHECK(roles(t) == "TaskSpecifier KGUser KGAssistant KGUser KGAssistant KGUser ");
    CHECK(check_transcript(t, run.config).empty());
    REQUIRE(t.search_decisions.size() == 2);
    CHECK(t.search_decisions[0].browse);
    CHECK(t.search_decisions[0].snippets_used.size() == 3);
    CHECK(t.messages[2].attachments.size() == 3);
    CHECK_FALSE(t.search_decisions[1].browse);

    KnowledgeGraph expected;
    expected.insert(make_triple("Across the Spider-Verse", "directed by", "Joaquim Dos Santos"));
    expected.insert(make_triple("Across the Spider-Verse", "release year", "2023"));
    REQUIRE(run.result.graph.size() == 2);
    for (const auto& triple : expected.triples())
        CHECK(run.result.graph.contains(triple));

    auto j = to_json(run.result, run.config);
    CHECK(j["outcome"] == "completed");
    CHECK(j["validated"] == false);
    CHECK(j["graph"].size() == 2);
}

TEST_CASE("marker-less session stops at exactly max_turns") {
    auto run = session_fixtures::run("markerless_session");
    const auto& t = run.result.transcript;
    CHECK(t.outcome == SessionOutcome::TurnLimit);
    CHECK(t.user_turns == run.config.max_turns);
    CHECK(t.backend_calls == 1 + 2 * run.config.max_turns);
    CHECK(t.search_decisions.empty());
    CHECK(check_transcript(t, run.config).empty());
    CHECK(run.result.graph.size() == 2);
}

TEST_CASE("malformed searcher reply continues without browsing") {
    auto run = session_fixtures::run("malformed_search_session");
    const auto& t = run.result.transcript;
    CHECK(t.outcome == SessionOutcome::Completed);
    REQUIRE(t.search_decisions.size() == 1);
    CHECK_FALSE(t.search_decisions[0].browse);
    CHECK(t.search_decisions[0].raw == "maybe?");
    CHECK(check_transcript(t, run.config).empty());
    CHECK(run.result.graph.size() == 1);
}

TEST_CASE("replay is deterministic") {
    for (const auto* name : {"completed_session", "markerless_session", "malformed_search_session"}) {
        auto a = session_fixtures::run(name);
        auto b = session_fixtures::run(name);
        CHECK(to_json(a.result, a.config).dump() == to_json(b.result, b.config).dump());
    }
}

TEST_CASE("backend failure keeps the partial transcript") {
    // Two responses: specifier and the first user turn; the assistant call misses.
    llm::Gateway g(sequence({"ELABORATED", "First instruction."}));
    Orchestrator o(g, nullptr);
    auto c = config(5, false);
    auto r = o.run_session(c);
    CHECK(r.transcript.outcome == SessionOutcome::BackendError);
    CHECK(r.transcript.messages.size() == 2);
    CHECK(r.transcript.error.find("FixtureMiss") != std::string::npos);
    CHECK(r.graph.empty());
    CHECK(check_transcript(r.transcript, c).empty());
}

TEST_CASE("turn-limit boundedness holds for every max_turns") {
    for (std::size_t n = 1; n <= 6; ++n) {
        std::vector<std::string> xs{"ELABORATED"};
        for (std::size_t i = 0; i < n; ++i) {
            xs.push_back("instruction");
            xs.push_back("BROWSE: no");
            xs.push_back("reply");
        }
        llm::Gateway g(sequence(xs));
        FixtureRetriever retriever({});
        Orchestrator o(g, &retriever);
        auto c = config(n, true);
        auto r = o.run_session(c);
        CHECK(r.transcript.outcome == SessionOutcome::TurnLimit);
        CHECK(r.transcript.backend_calls == 1 + 3 * n);
        CHECK(check_transcript(r.transcript, c).empty());
    }
}

TEST_CASE("harvest") {
    Transcript t;
    t.messages.push_back({AgentRole::KGAssistant, 1, "no marker here [A, r, B]", {}});
    CHECK(harvest_kg(t, "FINAL_KG:").graph.empty());

    t.messages.push_back({AgentRole::KGAssistant, 2, "FINAL_KG: [Schoolnogo, decidiaster, Reptance]", {}});
    CHECK(harvest_kg(t, "FINAL_KG:").graph.size() == 1);

    t.messages.push_back({AgentRole::KGUser, 3, "FINAL_KG: [user, should, ignore]", {}});
    t.messages.push_back({AgentRole::KGAssistant, 4, "again FINAL_KG: [schoolnogo, decidiaster, reptance]", {}});
    CHECK(harvest_kg(t, "FINAL_KG:").graph.size() == 1);

    Transcript two;
    two.messages.push_back({AgentRole::KGAssistant, 1, "FINAL_KG: [A, r, B]、[B, s, C]", {}});
    auto r = harvest_kg(two, "FINAL_KG:");
    CHECK(r.graph.size() == 2);
    CHECK(r.malformed.empty());
}

TEST_CASE("session config validation") {
    auto c = config(3, false);
    c.termination_marker = c.final_output_marker;
    CHECK_THROWS_AS(validate(c), Error);
    c = config(0, false);
    CHECK_THROWS_AS(validate(c), Error);
    auto j = nlohmann::json::parse(R"({"task":"t","max_turns":4,"language":"zh"})");
    auto parsed = session_config_from_json(j);
    CHECK(parsed.max_turns == 4);
    CHECK(parsed.language == Language::Zh);
    CHECK(parsed.termination_marker == "TASK_DONE");
}

TEST_CASE("personas name the two dialogue roles and round-trip through files") {
    const auto& p = PersonaPack::builtin();
    CHECK(p.get(AgentRole::KGAssistant).find("Consultant") != std::string::npos);
    CHECK(p.get(AgentRole::KGUser).find("KG domain expert") != std::string::npos);
    auto dir = std::filesystem::temp_directory_path() / "autokg_persona_test";
    std::filesystem::remove_all(dir);
    p.save_directory(dir);
    auto loaded = PersonaPack::load_directory(dir);
    CHECK(loaded.get(AgentRole::WebSearcher) == p.get(AgentRole::WebSearcher));
    text::write_file(dir / "kg_user.txt", "\n");
    CHECK_THROWS_AS(PersonaPack::load_directory(dir), Error);
    std::filesystem::remove_all(dir);

    auto shipped = PersonaPack::load_directory(std::filesystem::path(AUTOKG_SOURCE_DIR) / "assets" / "personas");
    for (auto role : {AgentRole::TaskSpecifier, AgentRole::KGAssistant, AgentRole::KGUser, AgentRole::WebSearcher})
        CHECK(shipped.get(role) == p.get(role));
}
