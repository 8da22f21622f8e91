#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

// Pipeline configuration file: one `key = value` per line, '#' starts a
// comment, values may be double-quoted. Relative paths resolve against the
// directory holding the file.
//
//   tables_dir         normalization tables (default: built-in data dir)
//   jyutping_table     jyutping.tsv (default: <tables_dir>/jyutping.tsv)
//   utterances         utterance list JSONL (optional; else the union of hyps)
//   system.<id>        hypothesis JSONL for one ASR system; file order is priority
//   priority           comma-separated system ids, overrides file order
//   quality_sidecar    {utt_id, snr, dnsmos} JSONL
//   speaker_sidecar    {utt_id, speaker, gender, age} JSONL
//   filter_threshold   (0, 1], default 0.5
//   corrector          hook command line, split on whitespace
//   corrector_guard    [0, 1], default 0.3
//   corrector_timeout  seconds, default 30
//   corrector_jobs     concurrent hook processes, default 4
//   replay_ledger      earlier ledger whose corrector replies are reused
//   dnsmos_min, snr_min, energy_fraction
//   bucket_strong, bucket_moderate, bucket_keep
//   out_manifest, stats_report, ledger
//   workers            0 = available parallelism
//   seed
namespace yuepipe::config {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SystemInput {
  std::string id;
  std::filesystem::path path;
};

struct PipelineConfig {
  std::filesystem::path tables_dir;
  std::filesystem::path jyutping_table;
  std::filesystem::path utterances;
  std::vector<SystemInput> systems;
  std::filesystem::path quality_sidecar;
  std::filesystem::path speaker_sidecar;

  double filter_threshold = 0.5;
  std::vector<std::string> corrector;
  double corrector_guard = 0.3;
  double corrector_timeout_s = 30.0;
  int corrector_jobs = 4;
  std::filesystem::path replay_ledger;

  double dnsmos_min = 2.5;
  double snr_min = 25.0;
  double energy_fraction = 0.99;
  double bucket_strong = 0.9;
  double bucket_moderate = 0.8;
  double bucket_keep = 0.6;

  std::filesystem::path out_manifest;
  std::filesystem::path stats_report;
  std::filesystem::path ledger;
  int workers = 0;
  std::uint64_t seed = 0;

  /// Applies one setting; `base` anchors relative paths.
  void set(const std::string& key, const std::string& value, const std::filesystem::path& base = {});
  /// Throws ConfigError on out-of-range values or an unusable system list.
  void validate() const;
  /// Hash over the settings that affect output (not paths or worker count).
  std::string hash() const;
};

PipelineConfig load_config(const std::filesystem::path& path);
PipelineConfig parse_config(const std::string& text, const std::filesystem::path& base);

}  // namespace yuepipe::config
