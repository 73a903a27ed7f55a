#pragma once

#include <string>
#include <vector>

namespace autokg {

struct ChatMessage {
    std::string role; // "system", "user" or "assistant"
    std::string content;

    friend bool operator==(const ChatMessage&, const ChatMessage&) = default;
};

using ChatMessages = std::vector<ChatMessage>;

} // namespace autokg
