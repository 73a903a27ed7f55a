#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

// Small string utilities shared by the parser, metrics and synthesizer.
// All functions are byte-oriented over UTF-8; non-ASCII bytes pass through
// untouched unless stated otherwise.
namespace autokg::text {

bool is_space(char c) noexcept;

std::string_view trim(std::string_view s) noexcept;
std::string_view trim_right(std::string_view s) noexcept;

// Trims and collapses each run of whitespace (ASCII plus U+3000 and U+00A0)
// to one ASCII space.
std::string collapse_whitespace(std::string_view s);

std::string ascii_lower(std::string_view s);

bool iequals(std::string_view a, std::string_view b) noexcept;
bool istarts_with(std::string_view s, std::string_view prefix) noexcept;

// Case-insensitive search; returns npos when absent.
std::size_t ifind(std::string_view haystack, std::string_view needle, std::size_t from = 0) noexcept;

std::vector<std::string_view> split_lines(std::string_view s);

// Strips one layer of matching surrounding quotes ('', "", “”, ‘’, 「」).
std::string_view strip_quotes(std::string_view s) noexcept;

// UTF-8 helpers. Invalid sequences are treated as single bytes.
std::size_t utf8_length(std::string_view s) noexcept;
// Byte offset of the code point at index `cp_index`; npos when out of range
// (cp_index == length maps to s.size()).
std::size_t utf8_byte_offset(std::string_view s, std::size_t cp_index) noexcept;
// Code-point index of the byte offset; the offset must sit on a boundary.
std::size_t utf8_cp_index(std::string_view s, std::size_t byte_offset) noexcept;
// Longest prefix of at most `max_bytes` bytes that ends on a code-point boundary.
std::string_view utf8_truncate(std::string_view s, std::size_t max_bytes) noexcept;

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view content);

std::string sha256_hex(std::string_view data);

} // namespace autokg::text
