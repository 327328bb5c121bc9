#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace slt {

// Splits UTF-8 text into code points (each returned as its byte sequence).
std::vector<std::string> utf8_chars(std::string_view text);

std::vector<std::string> split_whitespace(std::string_view text);

std::string to_lower_ascii(std::string_view text);

std::string join(const std::vector<std::string>& parts, std::string_view sep);

}  // namespace slt
