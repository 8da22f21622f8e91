#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace yuepipe {

using Json = nlohmann::json;

/// Calls `fn(line_number, object)` for every line holding a JSON object.
/// Blank lines are ignored; other malformed lines add a line-numbered
/// warning. Returns false if the file cannot be opened. Exceptions thrown by
/// `fn` are turned into warnings for that line.
bool read_jsonl(const std::filesystem::path& path, const std::function<void(std::size_t, const Json&)>& fn,
                std::vector<std::string>& warnings);

/// Six significant digits, shortest of fixed/exponent form ("%.6g").
std::string format_real(double value);

/// JSON string literal (quotes and escapes), UTF-8 passed through.
std::string json_quote(std::string_view s);

/// 64-bit FNV-1a, hex encoded. Stable across platforms.
std::string fnv1a_hex(std::string_view data);

}  // namespace yuepipe
