#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "yuepipe/textnorm.h"

// Synthetic multi-system corpora with known ground truth, for desk-scale
// checks of fusion and scoring.
namespace yuepipe::synth {

struct SynthOptions {
  std::uint64_t seed = 1;
  std::size_t n_utts = 100;
  double error_rate = 0.1;
  std::size_t n_systems = 3;
  std::size_t min_tokens = 8;
  std::size_t max_tokens = 30;
  double latin_rate = 0.08;
  /// Adds punctuation, casing noise and (with tables) traditional characters
  /// to the system outputs; normalization is expected to remove all of it.
  bool surface_noise = true;
  bool with_audio = false;

  void validate() const;
};

struct SynthUtterance {
  std::string utt_id;
  std::vector<textnorm::Token> truth;
  std::vector<std::string> system_text;  // raw text per system
  double duration_s = 0.0;
  std::string domain;
  std::vector<std::string> tags;
};

struct SynthCorpus {
  std::vector<std::string> system_ids;
  std::vector<SynthUtterance> utterances;
};

/// Deterministic for a given seed and options: the engine is mt19937_64 and
/// all draws are derived from its raw output, not from std distributions.
SynthCorpus make_synthetic_corpus(const SynthOptions& options, const textnorm::NormalizationTables* tables = nullptr);

/// Writes truth.jsonl, utts.jsonl, hyp_<system>.jsonl, quality.jsonl,
/// speakers.jsonl, pipeline.conf and (optionally) audio/*.wav under `dir`.
void write_synthetic_corpus(const std::filesystem::path& dir, const SynthOptions& options,
                            const textnorm::NormalizationTables* tables = nullptr);

/// Corrupts one token sequence: each token independently, with probability
/// `rate`, is substituted, deleted, or followed by an inserted token.
std::vector<textnorm::Token> corrupt(const std::vector<textnorm::Token>& truth, double rate, std::mt19937_64& rng,
                                     const std::vector<textnorm::Token>& vocabulary);

/// Vocabulary used by the generator (CJK characters first, then Latin words).
const std::vector<textnorm::Token>& vocabulary();

}  // namespace yuepipe::synth
