#pragma once

#include <chrono>
#include <map>
#include <memory>
#include <optional>
#include <semaphore>
#include <string>
#include <vector>

#include "yuepipe/fusion.h"
#include "yuepipe/textnorm.h"

// External transcript-corrector hook. The hook is any executable reading one
// JSON request object on stdin and writing one JSON response object on stdout:
//
//   request:  {"utt_id": "...", "voted_text": "...",
//              "hypotheses": [{"system_id": "...", "text": "..."}, ...]}
//   response: {"corrected_text": "...", "confidence": 0-100, "analysis": "..."}
namespace yuepipe::fusion {

struct CorrectorRequest {
  std::string utt_id;
  std::string voted_text;
  std::vector<std::pair<std::string, std::string>> hypotheses;  // (system_id, text)

  std::string to_json() const;
};

struct CorrectorResponse {
  std::string corrected_text;
  int confidence = 0;
  std::string analysis;

  /// Throws std::invalid_argument on malformed JSON, missing fields, or a
  /// confidence outside 0..100.
  static CorrectorResponse parse(const std::string& json_text);
};

struct HookReply {
  bool ok = false;
  std::string output;  // raw stdout on success
  std::string error;
};

class CorrectorHook {
 public:
  virtual ~CorrectorHook() = default;
  virtual HookReply call(const std::string& utt_id, const std::string& request_json) = 0;
};

/// Runs an external command per request, at most `max_concurrent` at a time.
class CommandHook : public CorrectorHook {
 public:
  CommandHook(std::vector<std::string> argv, std::chrono::milliseconds timeout, int max_concurrent = 4);
  HookReply call(const std::string& utt_id, const std::string& request_json) override;

 private:
  std::vector<std::string> argv_;
  std::chrono::milliseconds timeout_;
  std::counting_semaphore<1024> slots_;
};

/// Serves replies recorded by an earlier run; utterances without a recorded
/// reply fall through to `fallback` (or fail when there is none).
class ReplayHook : public CorrectorHook {
 public:
  ReplayHook(std::map<std::string, std::string> replies, CorrectorHook* fallback = nullptr);
  HookReply call(const std::string& utt_id, const std::string& request_json) override;

 private:
  std::map<std::string, std::string> replies_;
  CorrectorHook* fallback_;
};

enum class CorrectorStatus { kAccepted, kRejected, kSkipped };
const char* to_string(CorrectorStatus status);

struct CorrectionOutcome {
  FusionResult result;
  CorrectorStatus status = CorrectorStatus::kSkipped;
  std::string reason;
  /// Raw hook output, kept for replay whenever the hook answered.
  std::optional<std::string> reply;
  std::optional<CorrectorResponse> response;
  /// Normalized edit distance between the voted and corrected token sequences.
  std::optional<double> distance;
};

/// Sends the voted text and all hypotheses to the hook. The corrected text is
/// re-normalized; it replaces the voted tokens only when its normalized edit
/// distance to them is at most `guard`. Hook failures never propagate: the
/// voted result comes back with status kSkipped and a reason.
CorrectionOutcome apply_corrector(const FusionResult& voted, const HypothesisSet& hypotheses, CorrectorHook& hook,
                                  double guard, const textnorm::NormalizationTables& tables);

}  // namespace yuepipe::fusion
