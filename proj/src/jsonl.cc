#include "yuepipe/jsonl.h"

#include <cstdint>
#include <cstdio>
#include <fstream>

namespace yuepipe {

bool read_jsonl(const std::filesystem::path& path, const std::function<void(std::size_t, const Json&)>& fn,
                std::vector<std::string>& warnings) {
  std::ifstream in(path);
  if (!in) return false;
  std::string line;
  std::size_t number = 0;
  const std::string name = path.filename().string();
  while (std::getline(in, line)) {
    ++number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    Json value;
    try {
      value = Json::parse(line);
    } catch (const Json::parse_error&) {
      warnings.push_back(name + ":" + std::to_string(number) + ": malformed JSON, line skipped");
      continue;
    }
    if (!value.is_object()) {
      warnings.push_back(name + ":" + std::to_string(number) + ": not a JSON object, line skipped");
      continue;
    }
    try {
      fn(number, value);
    } catch (const std::exception& e) {
      warnings.push_back(name + ":" + std::to_string(number) + ": " + e.what());
    }
  }
  return true;
}

std::string format_real(double value) {
  if (value == 0.0) value = 0.0;  // no "-0"
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", value);
  return buf;
}

std::string json_quote(std::string_view s) { return Json(std::string(s)).dump(); }

std::string fnv1a_hex(std::string_view data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace yuepipe
