#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "yuepipe/jsonl.h"
#include "yuepipe/textnorm.h"

// Mixed error rate: CJK scored per character, Latin per word (case-insensitive),
// pooled over the corpus as total errors over total reference tokens.
namespace yuepipe::evalmer {

struct MerCounts {
  std::size_t substitutions = 0;
  std::size_t deletions = 0;
  std::size_t insertions = 0;
  std::size_t ref_tokens = 0;
  /// Empty reference: the rate uses a denominator of 1 and is flagged.
  bool degenerate = false;

  std::size_t errors() const noexcept { return substitutions + deletions + insertions; }
  /// Percent.
  double mer() const noexcept;
  MerCounts& operator+=(const MerCounts& other);
};

MerCounts mer(const std::vector<textnorm::Token>& ref, const std::vector<textnorm::Token>& hyp);

struct UtteranceScore {
  std::string utt_id;
  std::vector<std::string> tags;
  MerCounts counts;
};

struct MerReport {
  std::vector<UtteranceScore> utterances;
  MerCounts corpus;
  std::map<std::string, MerCounts> by_tag;
  std::vector<std::string> warnings;

  double corpus_mer() const noexcept { return corpus.mer(); }
  Json to_json(bool include_utterances = false) const;
};

struct ScoreEntry {
  std::string utt_id;
  std::string text;
  std::vector<std::string> tags;
};

/// Reference lines carry "text" (and optional "tags"); hypothesis lines carry
/// "text" or, for pipeline manifests, "rover_result". Both sides are
/// normalized with `tables` before scoring. Hypotheses with no reference are
/// excluded with a warning; references with no hypothesis are scored against
/// an empty hypothesis, also with a warning.
MerReport score_entries(const std::vector<ScoreEntry>& refs, const std::vector<ScoreEntry>& hyps,
                        const textnorm::NormalizationTables& tables);

/// Throws std::runtime_error if either file cannot be read.
MerReport score_manifest(const std::filesystem::path& ref, const std::filesystem::path& hyp,
                         const textnorm::NormalizationTables& tables);

std::vector<ScoreEntry> load_score_entries(const std::filesystem::path& path, std::vector<std::string>& warnings);

}  // namespace yuepipe::evalmer
