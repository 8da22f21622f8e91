#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "yuepipe/config.h"
#include "yuepipe/corpusmeta.h"
#include "yuepipe/corrector.h"
#include "yuepipe/fusion.h"
#include "yuepipe/jsonl.h"
#include "yuepipe/quality.h"
#include "yuepipe/textnorm.h"

namespace yuepipe::pipeline {

enum class Status { kOk, kDropped, kError };
const char* to_string(Status s);

class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct UtteranceInput {
  std::string utt_id;
  corpusmeta::MetaInfo meta_info;
  std::filesystem::path audio;  // empty when no audio is available
  std::optional<double> duration;
  std::optional<int> sample_rate;
  std::optional<std::vector<corpusmeta::TimestampEntry>> timestamp;
  /// Raw hypotheses in system priority order; absent systems are skipped.
  std::vector<textnorm::RawTranscript> hypotheses;
  std::vector<std::string> missing_systems;
};

/// Read-only state shared by all workers.
struct Context {
  const config::PipelineConfig* config = nullptr;
  const textnorm::NormalizationTables* tables = nullptr;
  const fusion::JyutpingTable* jyutping = nullptr;
  const quality::QualitySidecar* quality = nullptr;
  const corpusmeta::SpeakerSidecar* speakers = nullptr;
  fusion::CorrectorHook* corrector = nullptr;  // thread-safe, may be null
};

struct UtteranceOutcome {
  std::string utt_id;
  Status status = Status::kError;
  std::string reason;
  std::vector<std::string> systems;  // systems that supplied a usable hypothesis
  std::vector<std::string> missing_systems;
  std::vector<std::string> excluded_systems;
  std::optional<fusion::CorrectorStatus> corrector;
  std::string corrector_reason;
  std::optional<std::string> corrector_reply;
  std::vector<std::string> warnings;
  std::optional<corpusmeta::MetadataRecord> record;  // set for ok and dropped

  /// One ledger line (no newline).
  std::string ledger_line() const;
};

/// normalize -> filter/align/vote -> corrector -> quality -> partition -> record.
/// Never throws; failures come back with status kError.
UtteranceOutcome process_utterance(const UtteranceInput& input, const Context& ctx);

struct RunOptions {
  bool resume = false;
  /// Replaces the hook built from the config (tests, embedding).
  fusion::CorrectorHook* corrector = nullptr;
};

struct RunSummary {
  std::size_t total = 0;
  std::size_t ok = 0;
  std::size_t dropped = 0;
  std::size_t error = 0;
  std::size_t restored = 0;
  std::size_t corrector_accepted = 0;
  std::size_t corrector_rejected = 0;
  std::size_t corrector_skipped = 0;
  std::size_t coverage_gaps = 0;
  std::vector<std::string> warnings;

  /// 0 clean, 2 completed with warnings or per-utterance errors.
  int exit_code() const noexcept { return (error > 0 || !warnings.empty()) ? 2 : 0; }
  Json to_json() const;
};

/// Joins the configured inputs into per-utterance work items. Throws
/// InputError when a configured file cannot be read.
std::vector<UtteranceInput> load_inputs(const config::PipelineConfig& cfg, std::vector<std::string>& warnings);

/// Runs the whole corpus. Throws InputError (before any output is written)
/// when tables or inputs are unreadable.
RunSummary run(const config::PipelineConfig& cfg, const RunOptions& options = {});

/// Corrector replies recorded in a ledger, keyed by utt_id.
std::map<std::string, std::string> read_replies(const std::filesystem::path& ledger);

}  // namespace yuepipe::pipeline
