#include "autokg/error.hpp"
#include "autokg/prompt_forge.hpp"
#include "autokg/text.hpp"
#include "golden_inputs.hpp"

#include <doctest.h>

#include <filesystem>

using namespace autokg;

namespace {

const std::filesystem::path kPromptDir = std::filesystem::path(AUTOKG_TEST_DATA_DIR) / "prompts";

std::size_t count_occurrences(std::string_view hay, std::string_view needle) {
    std::size_t n = 0;
    for (auto pos = hay.find(needle); pos != std::string_view::npos; pos = hay.find(needle, pos + needle.size()))
        ++n;
    return n;
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

} // namespace

TEST_CASE("golden prompts match the reference snapshots byte for byte") {
    for (const auto& c : golden::cases()) {
        CAPTURE(c.fixture);
        auto expected = text::read_file(kPromptDir / c.fixture);
        auto bundle = c.build();
        CHECK(bundle.content() + "\n" == expected);
        REQUIRE(bundle.messages.size() == 1);
        CHECK(bundle.messages[0].role == "user");
    }
}

TEST_CASE("one-shot prompts carry exactly one demonstration block") {
    for (const auto& c : golden::cases()) {
        CAPTURE(c.fixture);
        auto bundle = c.build();
        bool zh = c.fixture.starts_with("duie");
        bool structural = c.fixture.starts_with("qa") || c.fixture.starts_with("fb15k");
        std::string_view marker = zh ? "例如:" : "Example:";
        if (bundle.mode == PromptMode::ZeroShot) {
            CHECK(bundle.demonstration_count == 0);
            CHECK(count_occurrences(bundle.content(), marker) == 0);
        } else if (bundle.task_kind == TaskKind::VKE) {
            CHECK(bundle.demonstration_count == 2);
            CHECK(count_occurrences(bundle.content(), marker) == 1);
        } else {
            CHECK(bundle.demonstration_count == 1);
            if (!structural)
                CHECK(count_occurrences(bundle.content(), marker) == 1);
        }
    }
}

TEST_CASE("prompts end with the answer cue") {
    for (const auto& c : golden::cases()) {
        auto s = c.build().content();
        bool ok = s.ends_with("Triples:") || s.ends_with("SPO三元组:") || s.ends_with("Ans:") ||
                  s.ends_with("Event type:") || s.ends_with("Answer:") || s.ends_with("The answer is\".");
        CHECK_MESSAGE(ok, c.fixture);
    }
}

TEST_CASE("mode and demonstration mismatches are rejected") {
    Demonstration d{"x", "y"};
    CHECK(code_of([] {
              build_extraction_prompt(golden::scierc_vocab(), "s", std::nullopt, PromptMode::OneShot);
          }) == ErrorCode::MissingDemo);
    CHECK(code_of([&] { build_extraction_prompt(golden::scierc_vocab(), "s", d, PromptMode::ZeroShot); }) ==
          ErrorCode::ModeMismatch);
    Demonstration test_demo{"x", "y", Split::Test};
    CHECK(code_of([&] { build_qa_prompt("q?", test_demo, PromptMode::OneShot); }) == ErrorCode::ModeMismatch);
    CHECK(code_of([] { build_extraction_prompt({}, "s", std::nullopt, PromptMode::ZeroShot); }) ==
          ErrorCode::EmptyVocabulary);
    CHECK(code_of([] { build_event_prompt(golden::maven_vocab(), "   ", std::nullopt, PromptMode::ZeroShot); }) ==
          ErrorCode::EmptySentence);
    CHECK(code_of([] { build_qa_prompt(" ", std::nullopt, PromptMode::ZeroShot); }) == ErrorCode::EmptyQuestion);
}

TEST_CASE("link prediction needs a template for the relation") {
    LinkQuery q{EntityName("Paris"), RelationType("capital of")};
    CHECK(code_of([&] { build_lp_prompt(q, golden::lp_registry(), std::nullopt, PromptMode::ZeroShot); }) ==
          ErrorCode::MissingTemplate);
    auto reg = golden::lp_registry();
    CHECK(reg.contains("Time Event Locations"));
    CHECK(reg.question_for("time event locations", "X") == "what is the locations of X?");
}

TEST_CASE("virtual knowledge prompts need two demos sharing the relation") {
    Demonstration a{"s1", "[A, rel, B]", Split::Train, "rel"};
    Demonstration b{"s2", "[C, rel, D]", Split::Train, "rel"};
    Demonstration other{"s3", "[E, other, F]", Split::Train, "other"};
    CHECK(code_of([&] { build_vke_prompt(RelationType("rel"), {a}, "t"); }) == ErrorCode::WrongDemoCount);
    CHECK(code_of([&] { build_vke_prompt(RelationType("rel"), {a, b, a}, "t"); }) == ErrorCode::WrongDemoCount);
    CHECK(code_of([&] { build_vke_prompt(RelationType("rel"), {a, other}, "t"); }) ==
          ErrorCode::DemoRelationMismatch);
    auto ok = build_vke_prompt(RelationType("rel"), {a, b}, "t");
    CHECK(ok.demonstration_count == 2);
}

TEST_CASE("duplicate vocabulary labels render once") {
    auto p = build_extraction_prompt({"A", "B", "A"}, "s", std::nullopt, PromptMode::ZeroShot);
    CHECK(p.content().find("['A', 'B']") != std::string::npos);
}

TEST_CASE("render_template") {
    CHECK(render_template("a {{x}} b {{y}}", {{"x", "1"}, {"y", "{{x}}"}}) == "a 1 b {{x}}");
    CHECK(code_of([] { render_template("{{missing}}", {}); }) == ErrorCode::UnresolvedPlaceholder);
    CHECK(render_label_list({"it's", "a\\b"}) == "['it\\'s', 'a\\\\b']");
    CHECK(render_label_list({}) == "[]");
}

TEST_CASE("system preamble is an optional leading message") {
    ForgeContext ctx;
    ctx.options.system_preamble = "You are a helpful assistant.";
    auto p = build_qa_prompt("q?", std::nullopt, PromptMode::ZeroShot, ctx);
    REQUIRE(p.messages.size() == 2);
    CHECK(p.messages[0].role == "system");
    CHECK(p.messages[1].role == "user");
}

TEST_CASE("template packs round-trip through a directory and override built-ins") {
    auto dir = std::filesystem::temp_directory_path() / "autokg_tpl_test";
    std::filesystem::remove_all(dir);
    TemplatePack::builtin().save_directory(dir);
    auto loaded = TemplatePack::load_directory(dir);
    CHECK(loaded.all() == TemplatePack::builtin().all());

    text::write_file(dir / "qa_zero_shot.txt", "Q: {{question}}\nA:\n");
    auto custom = TemplatePack::load_directory(dir);
    ForgeContext ctx{&custom, {}};
    CHECK(build_qa_prompt("why?", std::nullopt, PromptMode::ZeroShot, ctx).content() == "Q: why?\nA:");
    std::filesystem::remove_all(dir);
}

TEST_CASE("shipped template assets equal the built-in pack") {
    auto assets = std::filesystem::path(AUTOKG_SOURCE_DIR) / "assets" / "templates";
    auto loaded = TemplatePack::load_directory(assets);
    CHECK(loaded.all() == TemplatePack::builtin().all());
    std::size_t files = 0;
    for (const auto& entry : std::filesystem::directory_iterator(assets))
        files += entry.path().extension() == ".txt";
    CHECK(files == TemplatePack::builtin().all().size());
}
