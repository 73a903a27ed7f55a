#pragma once

#include "autokg/chat.hpp"
#include "autokg/http.hpp"

#include <nlohmann/json.hpp>

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <string>
#include <string_view>
#include <vector>

// Chat-completion access behind one interface, with a live HTTP backend and
// a scripted backend that replays recorded fixtures.
namespace autokg::llm {

struct ChatRequest {
    ChatMessages messages;
    std::string model_name = "scripted";
    double temperature = 0.0;
    int max_output_tokens = 512;
};

// Throws Error{InvalidRequest}: messages must be non-empty and end with a user turn.
void validate(const ChatRequest& request);

enum class FinishReason { Completed, Truncated, Error };

std::string_view to_string(FinishReason reason) noexcept;

struct ChatResponse {
    std::string text;
    std::size_t input_token_estimate = 0;
    FinishReason finish_reason = FinishReason::Completed;
};

// ceil(bytes / 4). An upper-bound heuristic, not a tokenizer.
std::size_t estimate_tokens(std::string_view text) noexcept;
std::size_t estimate_request_tokens(const ChatRequest& request) noexcept;

// SHA-256 over the role/content sequence (model and sampling settings are
// not part of the digest so fixtures replay across model names).
std::string request_digest(const ChatRequest& request);
// Short human-readable description: the head of the last user message.
std::string request_summary(const ChatRequest& request);

class Backend {
public:
    virtual ~Backend() = default;
    virtual ChatResponse send(const ChatRequest& request) = 0;
    virtual std::string_view kind() const noexcept = 0;
};

struct FixtureEntry {
    std::string digest;
    std::string request_summary;
    std::string response;
};

// JSON Lines: one {"digest","request_summary","response"} object per line.
struct Fixture {
    std::vector<FixtureEntry> entries;

    static Fixture parse_jsonl(std::string_view jsonl);
    static Fixture load(const std::filesystem::path& path);
    std::string to_jsonl() const;
    void save(const std::filesystem::path& path) const;
};

enum class ReplayMode {
    Sequence, // i-th call gets the i-th entry, whatever the prompt
    Digest,   // calls are matched by request digest; repeats consume in order
};

ReplayMode parse_replay_mode(std::string_view name);

// Never fabricates output: an unmatched or exhausted call throws
// Error{FixtureMiss}.
class ScriptedBackend final : public Backend {
public:
    ScriptedBackend(Fixture fixture, ReplayMode mode);

    ChatResponse send(const ChatRequest& request) override;
    std::string_view kind() const noexcept override { return "scripted"; }

    std::size_t calls() const;

private:
    mutable std::mutex mutex_;
    Fixture fixture_;
    ReplayMode mode_;
    std::size_t cursor_ = 0;
    std::map<std::string, std::vector<std::size_t>> by_digest_;
    std::map<std::string, std::size_t> digest_cursor_;
    std::size_t calls_ = 0;
};

struct LiveConfig {
    std::string endpoint = "https://api.openai.com/v1/chat/completions";
    std::string api_key_env = "OPENAI_API_KEY";
    int max_attempts = 4;
    std::chrono::milliseconds initial_backoff{500};
    std::chrono::milliseconds max_backoff{8000};
    int max_in_flight = 4;
};

using Sleeper = std::function<void(std::chrono::milliseconds)>;

// Speaks the common chat-completions wire protocol. 429 and 5xx (and
// connection failures) are retried with exponential backoff up to
// max_attempts network calls; 401/403 fail at once with Error{AuthError}.
class LiveBackend final : public Backend {
public:
    LiveBackend(LiveConfig config, std::shared_ptr<HttpTransport> transport, Sleeper sleeper = {});

    ChatResponse send(const ChatRequest& request) override;
    std::string_view kind() const noexcept override { return "live"; }

    // Wire body for a request (exposed for tests).
    static nlohmann::json request_body(const ChatRequest& request);

private:
    LiveConfig config_;
    std::shared_ptr<HttpTransport> transport_;
    Sleeper sleeper_;
    std::counting_semaphore<1024> in_flight_;
};

struct RunLogEntry {
    std::size_t index = 0;
    std::string digest;
    std::string request_summary;
    ChatRequest request;
    std::string response;
    FinishReason finish_reason = FinishReason::Completed;
    std::string error; // set when the call failed
};

// Append-only, internally serialized record of every gateway call.
class RunLog {
public:
    RunLog() = default;
    RunLog(RunLog&& other) noexcept;

    void append(RunLogEntry entry);
    std::vector<RunLogEntry> entries() const;
    std::size_t size() const;

    std::string to_jsonl() const;
    static RunLog parse_jsonl(std::string_view jsonl);

private:
    mutable std::mutex mutex_;
    std::vector<RunLogEntry> entries_;
};

// Ordered (digest, response) pairs of the successful calls in `log`.
// Throws Error{EmptyLog}.
Fixture record_fixture(const RunLog& log);

struct GatewayConfig {
    // Context window (in estimated tokens) per model name; `default_window`
    // applies to unlisted models. No window means no pre-flight check.
    std::map<std::string, std::size_t> model_windows;
    std::optional<std::size_t> default_window;
};

class Gateway {
public:
    Gateway(std::shared_ptr<Backend> backend, GatewayConfig config = {},
            std::shared_ptr<RunLog> log = std::make_shared<RunLog>());

    // Validates, checks the token budget (Error{TokenBudgetExceeded} without
    // dispatching), forwards to the backend and logs the exchange.
    ChatResponse complete(const ChatRequest& request);

    RunLog& log() noexcept { return *log_; }
    std::shared_ptr<RunLog> shared_log() const noexcept { return log_; }
    const Backend& backend() const noexcept { return *backend_; }
    std::optional<std::size_t> window_for(const std::string& model) const;

private:
    std::shared_ptr<Backend> backend_;
    GatewayConfig config_;
    std::shared_ptr<RunLog> log_;
};

// Backend selection from a JSON spec:
//   {"kind":"scripted","fixture":"path.jsonl","replay":"sequence"|"digest"}
//   {"kind":"live","endpoint":"...","api_key_env":"...","max_attempts":4,...}
// Relative fixture paths resolve against `base_dir`.
std::shared_ptr<Backend> make_backend(const nlohmann::json& spec, const std::filesystem::path& base_dir = {});

} // namespace autokg::llm
