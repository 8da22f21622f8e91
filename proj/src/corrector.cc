#include "yuepipe/corrector.h"

#include <algorithm>
#include <json.hpp>
#include <stdexcept>

#include "yuepipe/edit_distance.h"
#include "yuepipe/subprocess.h"

namespace yuepipe::fusion {

using nlohmann::json;

std::string CorrectorRequest::to_json() const {
  json hyps = json::array();
  for (const auto& [system, text] : hypotheses) hyps.push_back({{"system_id", system}, {"text", text}});
  const json j = {{"utt_id", utt_id}, {"voted_text", voted_text}, {"hypotheses", std::move(hyps)}};
  return j.dump();
}

CorrectorResponse CorrectorResponse::parse(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(std::string("corrector reply is not JSON: ") + e.what());
  }
  if (!j.is_object()) throw std::invalid_argument("corrector reply is not a JSON object");
  const auto text = j.find("corrected_text");
  if (text == j.end() || !text->is_string()) throw std::invalid_argument("corrector reply lacks corrected_text");
  const auto conf = j.find("confidence");
  if (conf == j.end() || !conf->is_number_integer())
    throw std::invalid_argument("corrector reply lacks an integer confidence");
  const auto value = conf->get<long long>();
  if (value < 0 || value > 100) throw std::invalid_argument("corrector confidence outside 0..100");

  CorrectorResponse r;
  r.corrected_text = text->get<std::string>();
  r.confidence = static_cast<int>(value);
  if (const auto a = j.find("analysis"); a != j.end() && a->is_string()) r.analysis = a->get<std::string>();
  return r;
}

CommandHook::CommandHook(std::vector<std::string> argv, std::chrono::milliseconds timeout, int max_concurrent)
    : argv_(std::move(argv)), timeout_(timeout), slots_(std::clamp(max_concurrent, 1, 1024)) {}

HookReply CommandHook::call(const std::string& /*utt_id*/, const std::string& request_json) {
  slots_.acquire();
  const CommandResult r = run_command(argv_, request_json + "\n", timeout_);
  slots_.release();
  HookReply reply;
  if (r.spawn_failed) {
    reply.error = r.error_message;
  } else if (r.timed_out) {
    reply.error = "hook timed out";
  } else if (r.exit_code != 0) {
    reply.error = "hook exited with status " + std::to_string(r.exit_code);
  } else {
    reply.ok = true;
    reply.output = r.out;
  }
  return reply;
}

ReplayHook::ReplayHook(std::map<std::string, std::string> replies, CorrectorHook* fallback)
    : replies_(std::move(replies)), fallback_(fallback) {}

HookReply ReplayHook::call(const std::string& utt_id, const std::string& request_json) {
  if (const auto it = replies_.find(utt_id); it != replies_.end()) return {true, it->second, {}};
  if (fallback_) return fallback_->call(utt_id, request_json);
  return {false, {}, "no recorded reply"};
}

const char* to_string(CorrectorStatus status) {
  switch (status) {
    case CorrectorStatus::kAccepted: return "accepted";
    case CorrectorStatus::kRejected: return "rejected";
    case CorrectorStatus::kSkipped: return "skipped";
  }
  return "skipped";
}

CorrectionOutcome apply_corrector(const FusionResult& voted, const HypothesisSet& hypotheses, CorrectorHook& hook,
                                  double guard, const textnorm::NormalizationTables& tables) {
  if (!(guard > 0.0 && guard <= 1.0)) throw std::invalid_argument("corrector guard must be in (0, 1]");

  CorrectionOutcome outcome;
  outcome.result = voted;

  CorrectorRequest request;
  request.utt_id = voted.utt_id;
  request.voted_text = voted.text();
  for (const Hypothesis& h : hypotheses.hypotheses)
    request.hypotheses.emplace_back(h.system_id, textnorm::detokenize(h.tokens));

  auto skip = [&](std::string why) {
    outcome.status = CorrectorStatus::kSkipped;
    outcome.reason = std::move(why);
    outcome.result.corrector = to_string(outcome.status);
    return outcome;
  };

  HookReply reply;
  try {
    reply = hook.call(voted.utt_id, request.to_json());
  } catch (const std::exception& e) {
    return skip(e.what());
  }
  if (!reply.ok) return skip(reply.error);
  outcome.reply = reply.output;

  std::vector<textnorm::Token> corrected;
  try {
    outcome.response = CorrectorResponse::parse(reply.output);
    corrected = textnorm::tokenize(textnorm::normalize_text(outcome.response->corrected_text, tables));
  } catch (const std::exception& e) {
    return skip(e.what());
  }

  const double d = normalized_edit_distance(std::span<const textnorm::Token>(voted.fused_tokens),
                                            std::span<const textnorm::Token>(corrected),
                                            [](const auto& a, const auto& b) { return textnorm::same_word(a, b); });
  outcome.distance = d;
  if (d > guard) {
    outcome.status = CorrectorStatus::kRejected;
    outcome.reason = "edit distance " + std::to_string(d) + " exceeds guard";
  } else {
    outcome.status = CorrectorStatus::kAccepted;
    outcome.result.fused_tokens = std::move(corrected);
  }
  outcome.result.corrector = to_string(outcome.status);
  return outcome;
}

}  // namespace yuepipe::fusion
