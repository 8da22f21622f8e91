#include "yuepipe/evalmer.h"

#include <stdexcept>
#include <unordered_map>

#include "yuepipe/edit_distance.h"

namespace yuepipe::evalmer {

double MerCounts::mer() const noexcept {
  const double denom = ref_tokens == 0 ? 1.0 : static_cast<double>(ref_tokens);
  return 100.0 * static_cast<double>(errors()) / denom;
}

MerCounts& MerCounts::operator+=(const MerCounts& other) {
  substitutions += other.substitutions;
  deletions += other.deletions;
  insertions += other.insertions;
  ref_tokens += other.ref_tokens;
  degenerate = degenerate || other.degenerate;
  return *this;
}

MerCounts mer(const std::vector<textnorm::Token>& ref, const std::vector<textnorm::Token>& hyp) {
  const EditCounts ec = edit_counts(std::span<const textnorm::Token>(ref), std::span<const textnorm::Token>(hyp),
                                    [](const auto& a, const auto& b) { return textnorm::same_word(a, b); });
  MerCounts c;
  c.substitutions = ec.substitutions;
  c.deletions = ec.deletions;
  c.insertions = ec.insertions;
  c.ref_tokens = ref.size();
  c.degenerate = ref.empty();
  return c;
}

namespace {

Json counts_json(const MerCounts& c) {
  return {{"S", c.substitutions}, {"D", c.deletions}, {"I", c.insertions},
          {"N", c.ref_tokens},    {"mer", c.mer()},    {"degenerate", c.degenerate}};
}

}  // namespace

Json MerReport::to_json(bool include_utterances) const {
  Json j;
  j["corpus"] = counts_json(corpus);
  Json tags = Json::object();
  for (const auto& [tag, c] : by_tag) tags[tag] = counts_json(c);
  j["by_tag"] = std::move(tags);
  j["warnings"] = warnings;
  if (include_utterances) {
    Json utts = Json::array();
    for (const UtteranceScore& u : utterances) {
      Json e = counts_json(u.counts);
      e["utt_id"] = u.utt_id;
      utts.push_back(std::move(e));
    }
    j["utterances"] = std::move(utts);
  }
  return j;
}

MerReport score_entries(const std::vector<ScoreEntry>& refs, const std::vector<ScoreEntry>& hyps,
                        const textnorm::NormalizationTables& tables) {
  MerReport report;
  std::unordered_map<std::string, const ScoreEntry*> hyp_by_id;
  for (const ScoreEntry& h : hyps) hyp_by_id[h.utt_id] = &h;  // later lines win

  std::unordered_map<std::string, bool> ref_ids;
  for (const ScoreEntry& r : refs) ref_ids[r.utt_id] = true;
  for (const ScoreEntry& h : hyps)
    if (!ref_ids.count(h.utt_id)) report.warnings.push_back("hypothesis " + h.utt_id + " has no reference, excluded");

  auto tokens_of = [&](const std::string& text, const std::string& utt, const char* side) {
    try {
      return textnorm::tokenize(textnorm::normalize_text(text, tables));
    } catch (const std::exception& e) {
      report.warnings.push_back(std::string(side) + " " + utt + ": " + e.what() + ", scored as empty");
      return std::vector<textnorm::Token>{};
    }
  };

  for (const ScoreEntry& r : refs) {
    UtteranceScore u{r.utt_id, r.tags, {}};
    const auto ref_tokens = tokens_of(r.text, r.utt_id, "reference");
    std::vector<textnorm::Token> hyp_tokens;
    if (const auto it = hyp_by_id.find(r.utt_id); it != hyp_by_id.end())
      hyp_tokens = tokens_of(it->second->text, r.utt_id, "hypothesis");
    else
      report.warnings.push_back("reference " + r.utt_id + " has no hypothesis, scored as all deletions");
    u.counts = mer(ref_tokens, hyp_tokens);
    if (u.counts.degenerate) report.warnings.push_back("reference " + r.utt_id + " is empty after normalization");
    report.corpus += u.counts;
    for (const std::string& tag : r.tags) report.by_tag[tag] += u.counts;
    report.utterances.push_back(std::move(u));
  }
  // The corpus figure is degenerate only if there is no reference token at all.
  report.corpus.degenerate = report.corpus.ref_tokens == 0;
  for (auto& [tag, c] : report.by_tag) c.degenerate = c.ref_tokens == 0;
  return report;
}

std::vector<ScoreEntry> load_score_entries(const std::filesystem::path& path, std::vector<std::string>& warnings) {
  std::vector<ScoreEntry> entries;
  const bool opened = read_jsonl(
      path,
      [&](std::size_t, const Json& j) {
        const auto id = j.find("utt_id");
        if (id == j.end() || !id->is_string()) throw std::runtime_error("missing utt_id, line skipped");
        ScoreEntry e;
        e.utt_id = id->get<std::string>();
        auto text = j.find("text");
        if (text == j.end()) text = j.find("rover_result");
        if (text == j.end() || !text->is_string()) throw std::runtime_error("missing text, line skipped");
        e.text = text->get<std::string>();
        if (const auto tags = j.find("tags"); tags != j.end()) {
          if (tags->is_string()) {
            e.tags.push_back(tags->get<std::string>());
          } else if (tags->is_array()) {
            for (const Json& t : *tags)
              if (t.is_string()) e.tags.push_back(t.get<std::string>());
          }
        }
        entries.push_back(std::move(e));
      },
      warnings);
  if (!opened) throw std::runtime_error("cannot read " + path.string());
  return entries;
}

MerReport score_manifest(const std::filesystem::path& ref, const std::filesystem::path& hyp,
                         const textnorm::NormalizationTables& tables) {
  std::vector<std::string> warnings;
  const auto refs = load_score_entries(ref, warnings);
  const auto hyps = load_score_entries(hyp, warnings);
  MerReport report = score_entries(refs, hyps, tables);
  warnings.insert(warnings.end(), report.warnings.begin(), report.warnings.end());
  report.warnings = std::move(warnings);
  return report;
}

}  // namespace yuepipe::evalmer
