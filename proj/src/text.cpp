#include "autokg/text.hpp"

#include "autokg/error.hpp"

#include <openssl/sha.h>

#include <algorithm>
#include <array>
#include <fstream>
#include <sstream>

namespace autokg::text {

namespace {

constexpr std::string_view kIdeographicSpace = "\xE3\x80\x80";
constexpr std::string_view kNoBreakSpace = "\xC2\xA0";

// Length in bytes of the multi-byte space starting at s[i], or 0.
std::size_t wide_space_at(std::string_view s, std::size_t i) noexcept {
    if (s.substr(i, 3) == kIdeographicSpace)
        return 3;
    if (s.substr(i, 2) == kNoBreakSpace)
        return 2;
    return 0;
}

bool is_continuation(unsigned char c) noexcept { return (c & 0xC0) == 0x80; }

std::size_t sequence_length(unsigned char lead) noexcept {
    if (lead < 0x80)
        return 1;
    if ((lead & 0xE0) == 0xC0)
        return 2;
    if ((lead & 0xF0) == 0xE0)
        return 3;
    if ((lead & 0xF8) == 0xF0)
        return 4;
    return 1;
}

} // namespace

bool is_space(char c) noexcept {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

std::string_view trim(std::string_view s) noexcept {
    std::size_t b = 0;
    while (b < s.size()) {
        if (is_space(s[b])) {
            ++b;
        } else if (auto w = wide_space_at(s, b)) {
            b += w;
        } else {
            break;
        }
    }
    s.remove_prefix(b);
    return trim_right(s);
}

std::string_view trim_right(std::string_view s) noexcept {
    while (!s.empty()) {
        if (is_space(s.back())) {
            s.remove_suffix(1);
        } else if (s.ends_with(kIdeographicSpace)) {
            s.remove_suffix(3);
        } else if (s.ends_with(kNoBreakSpace)) {
            s.remove_suffix(2);
        } else {
            break;
        }
    }
    return s;
}

std::string collapse_whitespace(std::string_view s) {
    s = trim(s);
    std::string out;
    out.reserve(s.size());
    bool pending_space = false;
    for (std::size_t i = 0; i < s.size();) {
        if (is_space(s[i])) {
            pending_space = true;
            ++i;
            continue;
        }
        if (auto w = wide_space_at(s, i)) {
            pending_space = true;
            i += w;
            continue;
        }
        if (pending_space) {
            out.push_back(' ');
            pending_space = false;
        }
        out.push_back(s[i]);
        ++i;
    }
    return out;
}

std::string ascii_lower(std::string_view s) {
    std::string out(s);
    for (char& c : out) {
        if (c >= 'A' && c <= 'Z')
            c = static_cast<char>(c - 'A' + 'a');
    }
    return out;
}

namespace {
char lower(char c) noexcept { return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c; }
} // namespace

bool iequals(std::string_view a, std::string_view b) noexcept {
    return a.size() == b.size() &&
           std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) { return lower(x) == lower(y); });
}

bool istarts_with(std::string_view s, std::string_view prefix) noexcept {
    return s.size() >= prefix.size() && iequals(s.substr(0, prefix.size()), prefix);
}

std::size_t ifind(std::string_view haystack, std::string_view needle, std::size_t from) noexcept {
    if (needle.empty())
        return from <= haystack.size() ? from : std::string_view::npos;
    for (std::size_t i = from; i + needle.size() <= haystack.size(); ++i) {
        if (iequals(haystack.substr(i, needle.size()), needle))
            return i;
    }
    return std::string_view::npos;
}

std::vector<std::string_view> split_lines(std::string_view s) {
    std::vector<std::string_view> lines;
    std::size_t start = 0;
    while (start <= s.size()) {
        auto nl = s.find('\n', start);
        if (nl == std::string_view::npos) {
            lines.push_back(s.substr(start));
            break;
        }
        auto line = s.substr(start, nl - start);
        if (!line.empty() && line.back() == '\r')
            line.remove_suffix(1);
        lines.push_back(line);
        start = nl + 1;
    }
    return lines;
}

std::string_view strip_quotes(std::string_view s) noexcept {
    static constexpr std::array<std::pair<std::string_view, std::string_view>, 6> pairs{{
        {"\"", "\""},
        {"'", "'"},
        {"\xE2\x80\x9C", "\xE2\x80\x9D"}, // “ ”
        {"\xE2\x80\x98", "\xE2\x80\x99"}, // ‘ ’
        {"\xE3\x80\x8C", "\xE3\x80\x8D"}, // 「 」
        {"`", "`"},
    }};
    for (const auto& [open, close] : pairs) {
        if (s.size() >= open.size() + close.size() && s.starts_with(open) && s.ends_with(close)) {
            s.remove_prefix(open.size());
            s.remove_suffix(close.size());
            return s;
        }
    }
    return s;
}

std::size_t utf8_length(std::string_view s) noexcept {
    std::size_t n = 0;
    for (std::size_t i = 0; i < s.size(); ++n)
        i += std::min(sequence_length(static_cast<unsigned char>(s[i])), s.size() - i);
    return n;
}

std::size_t utf8_byte_offset(std::string_view s, std::size_t cp_index) noexcept {
    std::size_t i = 0;
    for (std::size_t n = 0; n < cp_index; ++n) {
        if (i >= s.size())
            return std::string_view::npos;
        i += std::min(sequence_length(static_cast<unsigned char>(s[i])), s.size() - i);
    }
    return i;
}

std::size_t utf8_cp_index(std::string_view s, std::size_t byte_offset) noexcept {
    return utf8_length(s.substr(0, std::min(byte_offset, s.size())));
}

std::string_view utf8_truncate(std::string_view s, std::size_t max_bytes) noexcept {
    if (s.size() <= max_bytes)
        return s;
    std::size_t end = max_bytes;
    while (end > 0 && is_continuation(static_cast<unsigned char>(s[end])))
        --end;
    return s.substr(0, end);
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error(ErrorCode::IoError, "cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::filesystem::path& path, std::string_view content) {
    if (path.has_parent_path())
        std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw Error(ErrorCode::IoError, "cannot write " + path.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
}

std::string sha256_hex(std::string_view data) {
    std::array<unsigned char, SHA256_DIGEST_LENGTH> digest{};
    SHA256(reinterpret_cast<const unsigned char*>(data.data()), data.size(), digest.data());
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    out.reserve(digest.size() * 2);
    for (unsigned char b : digest) {
        out.push_back(hex[b >> 4]);
        out.push_back(hex[b & 0x0F]);
    }
    return out;
}

} // namespace autokg::text
