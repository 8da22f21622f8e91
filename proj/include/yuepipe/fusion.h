#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "yuepipe/textnorm.h"

// Multi-system transcript fusion: outlier filtering, progressive alignment
// into a word transition network, position-wise voting and the
// pronunciation-level (jyutping) confidence.
namespace yuepipe::fusion {

using textnorm::Token;

struct Hypothesis {
  std::string system_id;
  std::vector<Token> tokens;
};

/// Hypotheses for one utterance, in system priority order (first wins ties).
struct HypothesisSet {
  std::string utt_id;
  std::vector<Hypothesis> hypotheses;

  /// Throws std::invalid_argument if empty or if system ids repeat.
  void validate() const;
};

/// One column per aligned position, one entry per system (slot order is the
/// priority order of `systems`). std::nullopt marks a gap.
struct WordTransitionNetwork {
  using Column = std::vector<std::optional<Token>>;

  std::vector<std::string> systems;
  std::vector<Column> columns;
  /// Total edit cost accumulated by the progressive alignment.
  std::size_t cost = 0;
};

struct ColumnVote {
  std::string system_id;        // highest-priority system voting for the winner
  std::optional<Token> token;   // nullopt when the gap won
  std::size_t count = 0;
  double fraction = 0.0;
};

struct FusionResult {
  std::string utt_id;
  std::vector<Token> fused_tokens;
  double text_confidence = 1.0;
  double jyutping_confidence = 1.0;
  std::vector<ColumnVote> per_column;
  std::vector<std::string> excluded_systems;
  /// Empty network: confidence is 1.0 by convention.
  bool degenerate = false;
  bool jyutping_degenerate = false;
  /// Only one hypothesis was available, nothing was voted on.
  bool no_vote = false;
  /// "none", "accepted", "rejected" or "skipped".
  std::string corrector = "none";

  std::string text() const { return textnorm::detokenize(fused_tokens); }
};

struct FilterResult {
  HypothesisSet kept;
  std::vector<std::string> excluded;
  /// Mean normalized distance of each input hypothesis to the others, in input order.
  std::vector<double> scores;
  bool no_vote = false;
  /// Set when the threshold would have left fewer than two voters.
  bool fallback = false;
};

/// Excludes hypotheses whose mean normalized edit distance to the others
/// exceeds `threshold`. Never leaves fewer than two voters when at least two
/// were given. Throws std::invalid_argument unless 0 < threshold <= 1.
FilterResult filter_candidates(const HypothesisSet& set, double threshold);

/// Progressive alignment in priority order. The first hypothesis seeds the
/// network; each later one is aligned by DP where matching any token already
/// in a column is free and every substitution, insertion or deletion costs 1.
WordTransitionNetwork align(const HypothesisSet& set);

/// Cost of an arbitrary network under the progressive cost model: for each
/// column and each system after the first, a token costs 0 if an earlier
/// system holds the same word in that column and 1 otherwise; a gap costs 1
/// if an earlier system holds a token there.
std::size_t alignment_cost(const WordTransitionNetwork& wtn);

/// Majority vote per column. Ties go to a token over the gap, then to the
/// word first voted for by the highest-priority system.
FusionResult vote(const WordTransitionNetwork& wtn);

class JyutpingTable {
 public:
  static JyutpingTable load(const std::filesystem::path& path);
  void add(char32_t cp, std::vector<std::string> readings);

  const std::string* default_reading(char32_t cp) const;
  const std::vector<std::string>* readings(char32_t cp) const;
  std::size_t size() const noexcept { return readings_.size(); }

 private:
  std::unordered_map<char32_t, std::vector<std::string>> readings_;
};

/// CJK tokens become their default reading (unmapped ones are dropped);
/// Latin words pass through lower-cased.
std::vector<Token> romanize(const std::vector<Token>& tokens, const JyutpingTable& table);

struct JyutpingConfidence {
  double value = 1.0;
  bool degenerate = false;
};

JyutpingConfidence jyutping_confidence(const HypothesisSet& kept, const JyutpingTable& table);

struct FusionOptions {
  double filter_threshold = 0.5;
};

/// filter -> align -> vote, plus the jyutping confidence when a table is given.
FusionResult fuse(const HypothesisSet& set, const JyutpingTable* table, const FusionOptions& options = {});

}  // namespace yuepipe::fusion
