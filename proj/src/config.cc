#include "yuepipe/config.h"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include "yuepipe/jsonl.h"

namespace yuepipe::config {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || p != v.data() + v.size()) throw ConfigError(key + ": not a number: " + v);
  return out;
}

long long to_int(const std::string& key, const std::string& v) {
  long long out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || p != v.data() + v.size()) throw ConfigError(key + ": not an integer: " + v);
  return out;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) {
    cur = trim(cur);
    if (!cur.empty()) out.push_back(cur);
  }
  return out;
}

void check_range(const char* name, double v, double lo, double hi, bool lo_open = false) {
  if (!(lo_open ? v > lo : v >= lo) || !(v <= hi))
    throw ConfigError(std::string(name) + " out of range: " + format_real(v));
}

}  // namespace

void PipelineConfig::set(const std::string& key, const std::string& value, const std::filesystem::path& base) {
  auto path = [&] {
    std::filesystem::path p(value);
    return p.is_relative() && !base.empty() ? base / p : p;
  };
  if (key.rfind("system.", 0) == 0) {
    const std::string id = key.substr(7);
    if (id.empty()) throw ConfigError("empty system id");
    for (SystemInput& s : systems)
      if (s.id == id) {
        s.path = path();
        return;
      }
    systems.push_back({id, path()});
  } else if (key == "priority") {
    const auto ids = split(value, ',');
    std::vector<SystemInput> ordered;
    for (const std::string& id : ids) {
      auto it = std::find_if(systems.begin(), systems.end(), [&](const SystemInput& s) { return s.id == id; });
      if (it == systems.end()) throw ConfigError("priority names unknown system: " + id);
      ordered.push_back(*it);
    }
    if (ordered.size() != systems.size()) throw ConfigError("priority must list every system exactly once");
    systems = std::move(ordered);
  } else if (key == "tables_dir") tables_dir = path();
  else if (key == "jyutping_table") jyutping_table = path();
  else if (key == "utterances") utterances = path();
  else if (key == "quality_sidecar") quality_sidecar = path();
  else if (key == "speaker_sidecar") speaker_sidecar = path();
  else if (key == "filter_threshold") filter_threshold = to_double(key, value);
  else if (key == "corrector") corrector = split(value, ' ');
  else if (key == "corrector_guard") corrector_guard = to_double(key, value);
  else if (key == "corrector_timeout") corrector_timeout_s = to_double(key, value);
  else if (key == "corrector_jobs") corrector_jobs = static_cast<int>(to_int(key, value));
  else if (key == "replay_ledger") replay_ledger = path();
  else if (key == "dnsmos_min") dnsmos_min = to_double(key, value);
  else if (key == "snr_min") snr_min = to_double(key, value);
  else if (key == "energy_fraction") energy_fraction = to_double(key, value);
  else if (key == "bucket_strong") bucket_strong = to_double(key, value);
  else if (key == "bucket_moderate") bucket_moderate = to_double(key, value);
  else if (key == "bucket_keep") bucket_keep = to_double(key, value);
  else if (key == "out_manifest") out_manifest = path();
  else if (key == "stats_report") stats_report = path();
  else if (key == "ledger") ledger = path();
  else if (key == "workers") workers = static_cast<int>(to_int(key, value));
  else if (key == "seed") seed = static_cast<std::uint64_t>(to_int(key, value));
  else throw ConfigError("unknown key: " + key);
}

void PipelineConfig::validate() const {
  if (systems.empty()) throw ConfigError("no hypothesis systems configured");
  std::set<std::string> ids;
  for (const SystemInput& s : systems)
    if (!ids.insert(s.id).second) throw ConfigError("duplicate system id: " + s.id);
  check_range("filter_threshold", filter_threshold, 0.0, 1.0, true);
  check_range("corrector_guard", corrector_guard, 0.0, 1.0, true);
  if (!(corrector_timeout_s > 0.0)) throw ConfigError("corrector_timeout must be positive");
  if (corrector_jobs < 1 || corrector_jobs > 1024) throw ConfigError("corrector_jobs must be in 1..1024");
  check_range("dnsmos_min", dnsmos_min, 1.0, 5.0);
  check_range("snr_min", snr_min, -100.0, 200.0);
  check_range("energy_fraction", energy_fraction, 0.0, 1.0, true);
  if (energy_fraction >= 1.0) throw ConfigError("energy_fraction must be below 1");
  if (!(0.0 <= bucket_keep && bucket_keep <= bucket_moderate && bucket_moderate <= bucket_strong &&
        bucket_strong <= 1.0))
    throw ConfigError("bucket bounds must satisfy 0 <= keep <= moderate <= strong <= 1");
  if (workers < 0) throw ConfigError("workers must be >= 0");
}

std::string PipelineConfig::hash() const {
  std::ostringstream s;
  s << "systems=";
  for (const SystemInput& sys : systems) s << sys.id << ',';
  s << ";filter=" << format_real(filter_threshold) << ";corrector=";
  for (const std::string& a : corrector) s << a << ' ';
  s << ";guard=" << format_real(corrector_guard) << ";dnsmos=" << format_real(dnsmos_min)
    << ";snr=" << format_real(snr_min) << ";energy=" << format_real(energy_fraction)
    << ";buckets=" << format_real(bucket_strong) << ',' << format_real(bucket_moderate) << ','
    << format_real(bucket_keep) << ";seed=" << seed;
  return fnv1a_hex(s.str());
}

PipelineConfig parse_config(const std::string& text, const std::filesystem::path& base) {
  PipelineConfig cfg;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string body = trim(line);
    if (body.empty() || body[0] == '#') continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
    const std::string key = trim(body.substr(0, eq));
    std::string value = trim(body.substr(eq + 1));
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') {
      value = value.substr(1, value.size() - 2);
    } else if (const auto hash = value.find(" #"); hash != std::string::npos) {
      value = trim(value.substr(0, hash));
    }
    try {
      cfg.set(key, value, base);
    } catch (const ConfigError& e) {
      throw ConfigError("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return cfg;
}

PipelineConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), path.parent_path());
}

}  // namespace yuepipe::config
