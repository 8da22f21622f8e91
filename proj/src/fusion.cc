#include "yuepipe/fusion.h"

#include <algorithm>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <stdexcept>

#include "yuepipe/edit_distance.h"
#include "yuepipe/unicode.h"

namespace yuepipe::fusion {

namespace {

using Column = WordTransitionNetwork::Column;

struct SameWord {
  bool operator()(const Token& a, const Token& b) const { return textnorm::same_word(a, b); }
};

double pair_distance(const Hypothesis& a, const Hypothesis& b) {
  return normalized_edit_distance(std::span<const Token>(a.tokens), std::span<const Token>(b.tokens), SameWord{});
}

// Maps words (kind + folded surface) to small integers so the DP compares ints.
class Interner {
 public:
  int id(const Token& t) {
    auto key = std::make_pair(t.kind, t.key());
    auto [it, inserted] = ids_.emplace(std::move(key), static_cast<int>(ids_.size()));
    return it->second;
  }

 private:
  std::map<std::pair<textnorm::TokenKind, std::string>, int> ids_;
};

constexpr int kGap = -1;

bool column_has(const std::vector<int>& column, int word) {
  return std::find(column.begin(), column.end(), word) != column.end();
}

}  // namespace

void HypothesisSet::validate() const {
  if (hypotheses.empty()) throw std::invalid_argument("utterance " + utt_id + " has no hypotheses");
  std::set<std::string> seen;
  for (const Hypothesis& h : hypotheses) {
    if (h.system_id.empty()) throw std::invalid_argument("empty system id in utterance " + utt_id);
    if (!seen.insert(h.system_id).second)
      throw std::invalid_argument("duplicate system id " + h.system_id + " in utterance " + utt_id);
  }
}

FilterResult filter_candidates(const HypothesisSet& set, double threshold) {
  if (!(threshold > 0.0 && threshold <= 1.0)) throw std::invalid_argument("filter threshold must be in (0, 1]");
  set.validate();

  FilterResult out;
  out.kept.utt_id = set.utt_id;
  const std::size_t n = set.hypotheses.size();
  if (n == 1) {
    out.kept = set;
    out.scores = {0.0};
    out.no_vote = true;
    return out;
  }

  std::vector<std::vector<double>> dist(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) dist[i][j] = dist[j][i] = pair_distance(set.hypotheses[i], set.hypotheses[j]);

  out.scores.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    // Summed in sorted order so that the score does not depend on input order.
    std::vector<double> row;
    for (std::size_t j = 0; j < n; ++j)
      if (j != i) row.push_back(dist[i][j]);
    std::sort(row.begin(), row.end());
    double sum = 0.0;
    for (double d : row) sum += d;
    out.scores[i] = sum / static_cast<double>(n - 1);
  }

  std::vector<bool> keep(n);
  std::size_t kept = 0;
  for (std::size_t i = 0; i < n; ++i) {
    keep[i] = out.scores[i] <= threshold;
    kept += keep[i];
  }
  if (kept < 2) {
    out.fallback = true;
    const std::size_t best =
        static_cast<std::size_t>(std::min_element(out.scores.begin(), out.scores.end()) - out.scores.begin());
    std::size_t nearest = best == 0 ? 1 : 0;
    for (std::size_t j = 0; j < n; ++j)
      if (j != best && dist[best][j] < dist[best][nearest]) nearest = j;
    std::fill(keep.begin(), keep.end(), false);
    keep[best] = keep[nearest] = true;
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (keep[i])
      out.kept.hypotheses.push_back(set.hypotheses[i]);
    else
      out.excluded.push_back(set.hypotheses[i].system_id);
  }
  return out;
}

WordTransitionNetwork align(const HypothesisSet& set) {
  set.validate();
  WordTransitionNetwork wtn;
  Interner interner;

  // Word ids per column and slot, mirrored into Token columns at the end.
  std::vector<std::vector<int>> ids;
  std::vector<Column> columns;

  const Hypothesis& first = set.hypotheses.front();
  wtn.systems.push_back(first.system_id);
  for (const Token& t : first.tokens) {
    ids.push_back({interner.id(t)});
    columns.push_back({t});
  }

  for (std::size_t k = 1; k < set.hypotheses.size(); ++k) {
    const Hypothesis& hyp = set.hypotheses[k];
    wtn.systems.push_back(hyp.system_id);
    std::vector<int> words;
    words.reserve(hyp.tokens.size());
    for (const Token& t : hyp.tokens) words.push_back(interner.id(t));

    const std::size_t m = ids.size();
    const std::size_t n = words.size();
    std::vector<std::size_t> cost((m + 1) * (n + 1));
    auto at = [n](std::size_t i, std::size_t j) { return i * (n + 1) + j; };
    for (std::size_t i = 0; i <= m; ++i) cost[at(i, 0)] = i;
    for (std::size_t j = 0; j <= n; ++j) cost[at(0, j)] = j;
    for (std::size_t i = 1; i <= m; ++i)
      for (std::size_t j = 1; j <= n; ++j)
        cost[at(i, j)] = std::min({cost[at(i - 1, j - 1)] + (column_has(ids[i - 1], words[j - 1]) ? 0 : 1),
                                   cost[at(i - 1, j)] + 1, cost[at(i, j - 1)] + 1});
    wtn.cost += cost[at(m, n)];

    std::vector<std::vector<int>> next_ids;
    std::vector<Column> next_columns;
    next_ids.reserve(m + n);
    next_columns.reserve(m + n);
    std::size_t i = m;
    std::size_t j = n;
    while (i > 0 || j > 0) {
      if (i > 0 && j > 0 &&
          cost[at(i, j)] == cost[at(i - 1, j - 1)] + (column_has(ids[i - 1], words[j - 1]) ? 0 : 1)) {
        next_ids.push_back(std::move(ids[i - 1]));
        next_ids.back().push_back(words[j - 1]);
        next_columns.push_back(std::move(columns[i - 1]));
        next_columns.back().push_back(hyp.tokens[j - 1]);
        --i, --j;
      } else if (i > 0 && cost[at(i, j)] == cost[at(i - 1, j)] + 1) {
        next_ids.push_back(std::move(ids[i - 1]));
        next_ids.back().push_back(kGap);
        next_columns.push_back(std::move(columns[i - 1]));
        next_columns.back().push_back(std::nullopt);
        --i;
      } else {
        std::vector<int> fresh(k, kGap);
        fresh.push_back(words[j - 1]);
        next_ids.push_back(std::move(fresh));
        Column col(k);
        col.push_back(hyp.tokens[j - 1]);
        next_columns.push_back(std::move(col));
        --j;
      }
    }
    std::reverse(next_ids.begin(), next_ids.end());
    std::reverse(next_columns.begin(), next_columns.end());
    ids = std::move(next_ids);
    columns = std::move(next_columns);
  }
  wtn.columns = std::move(columns);
  return wtn;
}

std::size_t alignment_cost(const WordTransitionNetwork& wtn) {
  std::size_t total = 0;
  for (const Column& col : wtn.columns) {
    for (std::size_t k = 1; k < col.size(); ++k) {
      bool earlier_token = false;
      bool earlier_same = false;
      for (std::size_t j = 0; j < k; ++j) {
        if (!col[j]) continue;
        earlier_token = true;
        if (col[k] && textnorm::same_word(*col[j], *col[k])) earlier_same = true;
      }
      if (col[k])
        total += earlier_same ? 0 : 1;
      else
        total += earlier_token ? 1 : 0;
    }
  }
  return total;
}

FusionResult vote(const WordTransitionNetwork& wtn) {
  FusionResult out;
  if (wtn.columns.empty()) {
    out.degenerate = true;
    out.text_confidence = 1.0;
    return out;
  }

  double sum = 0.0;
  for (const Column& col : wtn.columns) {
    // Candidates in order of first appearance by slot, so the earliest slot
    // of each candidate is its priority.
    struct Candidate {
      std::size_t first_slot;
      std::size_t count;
    };
    std::vector<Candidate> candidates;
    for (std::size_t s = 0; s < col.size(); ++s) {
      bool found = false;
      for (Candidate& c : candidates) {
        const auto& rep = col[c.first_slot];
        const bool same = (!rep && !col[s]) || (rep && col[s] && textnorm::same_word(*rep, *col[s]));
        if (same) {
          ++c.count;
          found = true;
          break;
        }
      }
      if (!found) candidates.push_back({s, 1});
    }

    const Candidate* best = &candidates.front();
    for (const Candidate& c : candidates) {
      if (c.count > best->count) {
        best = &c;
      } else if (c.count == best->count && !col[best->first_slot] && col[c.first_slot]) {
        best = &c;  // a token beats the gap on equal counts
      }
    }

    ColumnVote cv;
    cv.system_id = wtn.systems.at(best->first_slot);
    cv.token = col[best->first_slot];
    cv.count = best->count;
    cv.fraction = static_cast<double>(best->count) / static_cast<double>(col.size());
    sum += cv.fraction;
    if (cv.token) out.fused_tokens.push_back(*cv.token);
    out.per_column.push_back(std::move(cv));
  }
  out.text_confidence = sum / static_cast<double>(wtn.columns.size());
  return out;
}

JyutpingTable JyutpingTable::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw textnorm::TableError("cannot open jyutping table " + path.string());
  JyutpingTable table;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const std::size_t tab = line.find('\t');
    auto fail = [&](const std::string& why) {
      return textnorm::TableError(path.filename().string() + ":" + std::to_string(number) + ": " + why);
    };
    if (tab == std::string::npos) throw fail("expected codepoint<TAB>readings");
    char32_t cp;
    try {
      cp = unicode::parse_codepoint(line.substr(0, tab));
    } catch (const std::exception& e) {
      throw fail(e.what());
    }
    std::vector<std::string> readings;
    std::size_t start = tab + 1;
    while (start <= line.size()) {
      const std::size_t comma = line.find(',', start);
      std::string r = line.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
      if (!r.empty()) readings.push_back(std::move(r));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (readings.empty()) throw fail("no readings");
    if (table.readings_.count(cp)) throw fail("duplicate entry for " + unicode::codepoint_label(cp));
    table.readings_.emplace(cp, std::move(readings));
  }
  return table;
}

void JyutpingTable::add(char32_t cp, std::vector<std::string> readings) {
  if (readings.empty()) throw std::invalid_argument("jyutping entry needs at least one reading");
  readings_[cp] = std::move(readings);
}

const std::vector<std::string>* JyutpingTable::readings(char32_t cp) const {
  const auto it = readings_.find(cp);
  return it == readings_.end() ? nullptr : &it->second;
}

const std::string* JyutpingTable::default_reading(char32_t cp) const {
  const auto* r = readings(cp);
  return r ? &r->front() : nullptr;
}

std::vector<Token> romanize(const std::vector<Token>& tokens, const JyutpingTable& table) {
  std::vector<Token> out;
  out.reserve(tokens.size());
  for (const Token& t : tokens) {
    if (t.kind == textnorm::TokenKind::kLatinWord) {
      out.push_back({t.kind, unicode::ascii_lower(t.surface)});
      continue;
    }
    const std::u32string cp = unicode::decode_utf8(t.surface);
    if (cp.size() != 1) continue;
    if (const std::string* reading = table.default_reading(cp[0])) out.push_back({t.kind, *reading});
  }
  return out;
}

JyutpingConfidence jyutping_confidence(const HypothesisSet& kept, const JyutpingTable& table) {
  HypothesisSet romanized;
  romanized.utt_id = kept.utt_id;
  bool any = false;
  for (const Hypothesis& h : kept.hypotheses) {
    romanized.hypotheses.push_back({h.system_id, romanize(h.tokens, table)});
    any = any || !romanized.hypotheses.back().tokens.empty();
  }
  if (!any) return {1.0, true};
  const FusionResult r = vote(align(romanized));
  return {r.text_confidence, false};
}

FusionResult fuse(const HypothesisSet& set, const JyutpingTable* table, const FusionOptions& options) {
  FilterResult filtered = filter_candidates(set, options.filter_threshold);
  FusionResult result = vote(align(filtered.kept));
  result.utt_id = set.utt_id;
  result.excluded_systems = std::move(filtered.excluded);
  result.no_vote = filtered.no_vote;
  if (table) {
    const JyutpingConfidence jc = jyutping_confidence(filtered.kept, *table);
    result.jyutping_confidence = jc.value;
    result.jyutping_degenerate = jc.degenerate;
  }
  return result;
}

}  // namespace yuepipe::fusion
