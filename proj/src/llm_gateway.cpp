#include "autokg/llm_gateway.hpp"

#include "autokg/error.hpp"
#include "autokg/text.hpp"

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <cstdlib>
#include <thread>

namespace autokg::llm {

using json = nlohmann::json;

void validate(const ChatRequest& request) {
    if (request.messages.empty())
        throw Error(ErrorCode::InvalidRequest, "request has no messages");
    if (request.messages.back().role != "user")
        throw Error(ErrorCode::InvalidRequest, "the last message must come from the user");
    if (request.temperature < 0.0)
        throw Error(ErrorCode::InvalidRequest, "temperature must be >= 0");
    if (request.max_output_tokens <= 0)
        throw Error(ErrorCode::InvalidRequest, "max_output_tokens must be positive");
}

std::string_view to_string(FinishReason reason) noexcept {
    switch (reason) {
    case FinishReason::Completed: return "completed";
    case FinishReason::Truncated: return "truncated";
    case FinishReason::Error: return "error";
    }
    return "error";
}

namespace {

FinishReason parse_finish_reason(std::string_view s) {
    if (s == "truncated")
        return FinishReason::Truncated;
    if (s == "error")
        return FinishReason::Error;
    return FinishReason::Completed;
}

json messages_to_json(const ChatMessages& messages) {
    auto arr = json::array();
    for (const auto& m : messages)
        arr.push_back({{"role", m.role}, {"content", m.content}});
    return arr;
}

ChatMessages messages_from_json(const json& arr) {
    ChatMessages out;
    for (const auto& m : arr)
        out.push_back({m.at("role").get<std::string>(), m.at("content").get<std::string>()});
    return out;
}

} // namespace

std::size_t estimate_tokens(std::string_view text) noexcept { return (text.size() + 3) / 4; }

std::size_t estimate_request_tokens(const ChatRequest& request) noexcept {
    std::size_t bytes = 0;
    for (const auto& m : request.messages)
        bytes += m.content.size();
    return (bytes + 3) / 4;
}

std::string request_digest(const ChatRequest& request) {
    auto arr = json::array();
    for (const auto& m : request.messages)
        arr.push_back(json::array({m.role, m.content}));
    return text::sha256_hex(arr.dump());
}

std::string request_summary(const ChatRequest& request) {
    if (request.messages.empty())
        return {};
    auto flat = text::collapse_whitespace(request.messages.back().content);
    auto head = text::utf8_truncate(flat, 120);
    return head.size() < flat.size() ? std::string(head) + "..." : flat;
}

Fixture Fixture::parse_jsonl(std::string_view jsonl) {
    Fixture f;
    std::size_t line_no = 0;
    for (auto line : text::split_lines(jsonl)) {
        ++line_no;
        if (text::trim(line).empty())
            continue;
        try {
            auto j = json::parse(line);
            f.entries.push_back({j.value("digest", ""), j.value("request_summary", ""),
                                 j.at("response").get<std::string>()});
        } catch (const json::exception& e) {
            throw Error(ErrorCode::SchemaError, fmt::format("fixture line {}: {}", line_no, e.what()));
        }
    }
    return f;
}

Fixture Fixture::load(const std::filesystem::path& path) { return parse_jsonl(text::read_file(path)); }

std::string Fixture::to_jsonl() const {
    std::string out;
    for (const auto& e : entries) {
        nlohmann::ordered_json j;
        j["digest"] = e.digest;
        j["request_summary"] = e.request_summary;
        j["response"] = e.response;
        out += j.dump();
        out.push_back('\n');
    }
    return out;
}

void Fixture::save(const std::filesystem::path& path) const { text::write_file(path, to_jsonl()); }

ReplayMode parse_replay_mode(std::string_view name) {
    if (name == "sequence")
        return ReplayMode::Sequence;
    if (name == "digest")
        return ReplayMode::Digest;
    throw Error(ErrorCode::InvalidConfig, fmt::format("unknown replay mode '{}'", name));
}

ScriptedBackend::ScriptedBackend(Fixture fixture, ReplayMode mode) : fixture_(std::move(fixture)), mode_(mode) {
    for (std::size_t i = 0; i < fixture_.entries.size(); ++i)
        by_digest_[fixture_.entries[i].digest].push_back(i);
}

ChatResponse ScriptedBackend::send(const ChatRequest& request) {
    std::lock_guard lock(mutex_);
    ++calls_;
    const FixtureEntry* entry = nullptr;
    if (mode_ == ReplayMode::Sequence) {
        if (cursor_ >= fixture_.entries.size())
            throw Error(ErrorCode::FixtureMiss,
                        fmt::format("fixture exhausted after {} entries", fixture_.entries.size()));
        entry = &fixture_.entries[cursor_++];
    } else {
        const auto digest = request_digest(request);
        auto it = by_digest_.find(digest);
        auto& used = digest_cursor_[digest];
        if (it == by_digest_.end() || used >= it->second.size())
            throw Error(ErrorCode::FixtureMiss,
                        fmt::format("no fixture entry for digest {} ({})", digest.substr(0, 12),
                                    request_summary(request)));
        entry = &fixture_.entries[it->second[used++]];
    }
    return {entry->response, estimate_request_tokens(request), FinishReason::Completed};
}

std::size_t ScriptedBackend::calls() const {
    std::lock_guard lock(mutex_);
    return calls_;
}

LiveBackend::LiveBackend(LiveConfig config, std::shared_ptr<HttpTransport> transport, Sleeper sleeper)
    : config_(std::move(config)), transport_(std::move(transport)), sleeper_(std::move(sleeper)),
      in_flight_(std::clamp(config_.max_in_flight, 1, 1024)) {
    if (config_.max_attempts < 1)
        throw Error(ErrorCode::InvalidConfig, "max_attempts must be >= 1");
    if (!sleeper_)
        sleeper_ = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
}

json LiveBackend::request_body(const ChatRequest& request) {
    return {{"model", request.model_name},
            {"messages", messages_to_json(request.messages)},
            {"temperature", request.temperature},
            {"max_tokens", request.max_output_tokens}};
}

ChatResponse LiveBackend::send(const ChatRequest& request) {
    const char* key = std::getenv(config_.api_key_env.c_str());
    if (!key || !*key)
        throw Error(ErrorCode::AuthError, fmt::format("environment variable {} is not set", config_.api_key_env));

    const HttpHeaders headers{{"Authorization", fmt::format("Bearer {}", key)}};
    const std::string body = request_body(request).dump();

    in_flight_.acquire();
    struct Release {
        std::counting_semaphore<1024>& s;
        ~Release() { s.release(); }
    } release{in_flight_};

    HttpReply last;
    auto backoff = config_.initial_backoff;
    for (int attempt = 1; attempt <= config_.max_attempts; ++attempt) {
        last = transport_->post_json(config_.endpoint, headers, body);
        if (last.status == 200) {
            try {
                auto j = json::parse(last.body);
                const auto& choice = j.at("choices").at(0);
                ChatResponse r;
                r.text = choice.at("message").at("content").get<std::string>();
                r.input_token_estimate = estimate_request_tokens(request);
                const auto finish = choice.value("finish_reason", std::string("stop"));
                r.finish_reason = finish == "length" ? FinishReason::Truncated : FinishReason::Completed;
                return r;
            } catch (const json::exception& e) {
                throw Error(ErrorCode::BackendUnavailable, fmt::format("malformed completion body: {}", e.what()));
            }
        }
        if (last.status == 401 || last.status == 403)
            throw Error(ErrorCode::AuthError, fmt::format("endpoint rejected credentials (HTTP {})", last.status));
        const bool transient = last.status == 0 || last.status == 429 || last.status >= 500;
        if (!transient)
            throw Error(ErrorCode::InvalidRequest, fmt::format("HTTP {}: {}", last.status, last.body));
        if (attempt < config_.max_attempts) {
            spdlog::warn("chat completion attempt {}/{} failed ({}); retrying in {} ms", attempt,
                         config_.max_attempts, last.status ? std::to_string(last.status) : last.error,
                         backoff.count());
            sleeper_(backoff);
            backoff = std::min(backoff * 2, config_.max_backoff);
        }
    }
    if (last.status == 429)
        throw Error(ErrorCode::RateLimited, fmt::format("still rate limited after {} attempts", config_.max_attempts));
    throw Error(ErrorCode::BackendUnavailable,
                fmt::format("gave up after {} attempts (last: {})", config_.max_attempts,
                            last.status ? fmt::format("HTTP {}", last.status) : last.error));
}

RunLog::RunLog(RunLog&& other) noexcept {
    std::lock_guard lock(other.mutex_);
    entries_ = std::move(other.entries_);
}

void RunLog::append(RunLogEntry entry) {
    std::lock_guard lock(mutex_);
    entry.index = entries_.size();
    entries_.push_back(std::move(entry));
}

std::vector<RunLogEntry> RunLog::entries() const {
    std::lock_guard lock(mutex_);
    return entries_;
}

std::size_t RunLog::size() const {
    std::lock_guard lock(mutex_);
    return entries_.size();
}

std::string RunLog::to_jsonl() const {
    std::string out;
    for (const auto& e : entries()) {
        nlohmann::ordered_json j;
        j["index"] = e.index;
        j["digest"] = e.digest;
        j["request_summary"] = e.request_summary;
        j["model"] = e.request.model_name;
        j["temperature"] = e.request.temperature;
        j["max_output_tokens"] = e.request.max_output_tokens;
        j["messages"] = messages_to_json(e.request.messages);
        j["response"] = e.response;
        j["finish_reason"] = std::string(to_string(e.finish_reason));
        if (!e.error.empty())
            j["error"] = e.error;
        out += j.dump();
        out.push_back('\n');
    }
    return out;
}

RunLog RunLog::parse_jsonl(std::string_view jsonl) {
    RunLog log;
    std::size_t line_no = 0;
    for (auto line : text::split_lines(jsonl)) {
        ++line_no;
        if (text::trim(line).empty())
            continue;
        try {
            auto j = json::parse(line);
            RunLogEntry e;
            e.digest = j.at("digest").get<std::string>();
            e.request_summary = j.value("request_summary", "");
            e.request.model_name = j.value("model", "scripted");
            e.request.temperature = j.value("temperature", 0.0);
            e.request.max_output_tokens = j.value("max_output_tokens", 512);
            e.request.messages = messages_from_json(j.at("messages"));
            e.response = j.value("response", "");
            e.finish_reason = parse_finish_reason(j.value("finish_reason", "completed"));
            e.error = j.value("error", "");
            log.append(std::move(e));
        } catch (const json::exception& e) {
            throw Error(ErrorCode::SchemaError, fmt::format("run log line {}: {}", line_no, e.what()));
        }
    }
    return log;
}

Fixture record_fixture(const RunLog& log) {
    Fixture f;
    for (const auto& e : log.entries()) {
        if (e.error.empty())
            f.entries.push_back({e.digest, e.request_summary, e.response});
    }
    if (f.entries.empty())
        throw Error(ErrorCode::EmptyLog, "run log holds no completed calls");
    return f;
}

Gateway::Gateway(std::shared_ptr<Backend> backend, GatewayConfig config, std::shared_ptr<RunLog> log)
    : backend_(std::move(backend)), config_(std::move(config)), log_(std::move(log)) {
    if (!backend_)
        throw Error(ErrorCode::InvalidConfig, "gateway needs a backend");
    if (!log_)
        log_ = std::make_shared<RunLog>();
}

std::optional<std::size_t> Gateway::window_for(const std::string& model) const {
    if (auto it = config_.model_windows.find(model); it != config_.model_windows.end())
        return it->second;
    return config_.default_window;
}

ChatResponse Gateway::complete(const ChatRequest& request) {
    validate(request);
    const auto estimate = estimate_request_tokens(request);
    if (auto window = window_for(request.model_name); window && estimate > *window)
        throw Error(ErrorCode::TokenBudgetExceeded,
                    fmt::format("estimated {} input tokens exceed the {}-token window of '{}'", estimate, *window,
                                request.model_name));

    RunLogEntry entry;
    entry.digest = request_digest(request);
    entry.request_summary = request_summary(request);
    entry.request = request;
    try {
        auto response = backend_->send(request);
        response.input_token_estimate = estimate;
        if (response.finish_reason == FinishReason::Truncated)
            spdlog::warn("response to '{}' was truncated at the output token limit", entry.request_summary);
        entry.response = response.text;
        entry.finish_reason = response.finish_reason;
        log_->append(std::move(entry));
        return response;
    } catch (const Error& e) {
        entry.finish_reason = FinishReason::Error;
        entry.error = e.what();
        log_->append(std::move(entry));
        throw;
    }
}

std::shared_ptr<Backend> make_backend(const nlohmann::json& spec, const std::filesystem::path& base_dir) {
    const auto kind = spec.value("kind", std::string("scripted"));
    if (kind == "scripted") {
        std::filesystem::path fixture = spec.at("fixture").get<std::string>();
        if (fixture.is_relative() && !base_dir.empty())
            fixture = base_dir / fixture;
        return std::make_shared<ScriptedBackend>(Fixture::load(fixture),
                                                 parse_replay_mode(spec.value("replay", std::string("digest"))));
    }
    if (kind == "live") {
        LiveConfig c;
        c.endpoint = spec.value("endpoint", c.endpoint);
        c.api_key_env = spec.value("api_key_env", c.api_key_env);
        c.max_attempts = spec.value("max_attempts", c.max_attempts);
        c.initial_backoff = std::chrono::milliseconds(spec.value("initial_backoff_ms", 500));
        c.max_backoff = std::chrono::milliseconds(spec.value("max_backoff_ms", 8000));
        c.max_in_flight = spec.value("max_in_flight", c.max_in_flight);
        return std::make_shared<LiveBackend>(
            c, make_http_transport(std::chrono::seconds(spec.value("timeout_seconds", 60))));
    }
    throw Error(ErrorCode::InvalidConfig, fmt::format("unknown backend kind '{}'", kind));
}

} // namespace autokg::llm
