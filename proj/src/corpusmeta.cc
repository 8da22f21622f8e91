#include "yuepipe/corpusmeta.h"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>

namespace yuepipe::corpusmeta {

namespace {

template <std::size_t N>
bool in_vocab(const std::array<std::string_view, N>& vocab, std::string_view s) {
  return std::find(vocab.begin(), vocab.end(), s) != vocab.end();
}

template <std::size_t N>
std::optional<std::string> match_vocab(const std::array<std::string_view, N>& vocab, std::string_view s) {
  for (std::string_view v : vocab) {
    if (v.size() != s.size()) continue;
    bool same = true;
    for (std::size_t i = 0; i < v.size() && same; ++i)
      same = std::tolower(static_cast<unsigned char>(v[i])) == std::tolower(static_cast<unsigned char>(s[i]));
    if (same) return std::string(v);
  }
  return std::nullopt;
}

const Json& require(const Json& j, const char* key) {
  const auto it = j.find(key);
  if (it == j.end()) throw ValidationError(std::string("missing field ") + key);
  return *it;
}

std::string get_string(const Json& j, const char* key) {
  const Json& v = require(j, key);
  if (!v.is_string()) throw ValidationError(std::string("field ") + key + " must be a string");
  return v.get<std::string>();
}

double get_number(const Json& j, const char* key) {
  const Json& v = require(j, key);
  if (!v.is_number()) throw ValidationError(std::string("field ") + key + " must be a number");
  return v.get<double>();
}

std::optional<std::string> opt_string(const Json& j, const char* key) {
  return j.contains(key) ? std::optional<std::string>(get_string(j, key)) : std::nullopt;
}

std::optional<double> opt_number(const Json& j, const char* key) {
  return j.contains(key) ? std::optional<double>(get_number(j, key)) : std::nullopt;
}

void add(Tally& t, double hours) {
  ++t.count;
  t.hours += hours;
}

std::vector<HistogramBin> make_bins(std::initializer_list<double> edges) {
  std::vector<HistogramBin> bins;
  const std::vector<double> e(edges);
  for (std::size_t i = 0; i + 1 < e.size(); ++i) bins.push_back({e[i], e[i + 1], {}});
  return bins;
}

void add_to_histogram(std::vector<HistogramBin>& bins, double value, double hours, bool close_last) {
  for (std::size_t i = 0; i < bins.size(); ++i) {
    const bool last = i + 1 == bins.size();
    if (value >= bins[i].lo && (value < bins[i].hi || (last && close_last && value <= bins[i].hi))) {
      add(bins[i].tally, hours);
      return;
    }
  }
}

Json tally_json(const Tally& t) { return {{"count", t.count}, {"hours", t.hours}}; }

}  // namespace

const char* to_string(Bucket b) {
  switch (b) {
    case Bucket::kStrong: return "strong";
    case Bucket::kModerate: return "moderate";
    case Bucket::kWeak: return "weak";
    case Bucket::kDropped: return "dropped";
  }
  return "dropped";
}

std::optional<Bucket> parse_bucket(std::string_view s) {
  for (Bucket b : kAllBuckets)
    if (s == to_string(b)) return b;
  return std::nullopt;
}

void BucketBounds::validate() const {
  if (!(0.0 <= keep && keep <= moderate && moderate <= strong && strong <= 1.0))
    throw ValidationError("confidence bounds must satisfy 0 <= keep <= moderate <= strong <= 1");
}

Bucket assign_bucket(double confidence, const BucketBounds& bounds) {
  if (!std::isfinite(confidence) || confidence < 0.0 || confidence > 1.0)
    throw ValidationError("confidence " + format_real(confidence) + " outside [0, 1]");
  if (confidence > bounds.strong) return Bucket::kStrong;
  if (confidence > bounds.moderate) return Bucket::kModerate;
  if (confidence > bounds.keep) return Bucket::kWeak;
  return Bucket::kDropped;
}

std::vector<std::string> validate(const MetadataRecord& r) {
  std::vector<std::string> problems;
  auto unit = [&](double v, const char* name) {
    if (!std::isfinite(v) || v < 0.0 || v > 1.0) problems.push_back(std::string(name) + " outside [0, 1]");
  };
  if (r.utt_id.empty()) problems.push_back("empty utt_id");
  unit(r.confidence, "confidence");
  unit(r.jyutping_confidence, "jyutping_confidence");
  if (!std::isfinite(r.duration) || r.duration <= 0.0) problems.push_back("duration must be positive");
  if (!in_vocab(kGenders, r.gender)) problems.push_back("unknown gender label " + r.gender);
  if (!in_vocab(kAges, r.age)) problems.push_back("unknown age label " + r.age);
  if (r.sample_rate && *r.sample_rate <= 0) problems.push_back("sample_rate must be positive");
  if (r.effective_bandwidth) {
    if (!std::isfinite(*r.effective_bandwidth) || *r.effective_bandwidth < 0.0)
      problems.push_back("effective_bandwidth must be non-negative");
    else if (r.sample_rate && *r.effective_bandwidth > *r.sample_rate / 2.0)
      problems.push_back("effective_bandwidth above Nyquist");
  }
  if (r.dnsmos && (!std::isfinite(*r.dnsmos) || *r.dnsmos < 1.0 || *r.dnsmos > 5.0))
    problems.push_back("DNSMOS outside [1, 5]");
  if (r.snr && !std::isfinite(*r.snr)) problems.push_back("SNR not finite");
  if (r.timestamp) {
    double previous_end = 0.0;
    for (std::size_t i = 0; i < r.timestamp->size(); ++i) {
      const TimestampEntry& t = (*r.timestamp)[i];
      const std::string at = "timestamp[" + std::to_string(i) + "] ";
      if (!std::isfinite(t.start_s) || !std::isfinite(t.end_s) || t.start_s > t.end_s) {
        problems.push_back(at + "has start after end");
      } else if (t.start_s < 0.0 || t.end_s > r.duration) {
        problems.push_back(at + "outside [0, duration]");
      } else if (t.start_s < previous_end) {
        problems.push_back(at + "overlaps the previous entry");
      }
      previous_end = std::max(previous_end, t.end_s);
    }
  }
  if (!in_vocab(kDomains, r.meta_info.domain)) problems.push_back("unknown domain " + r.meta_info.domain);
  return problems;
}

std::string to_json_line(const MetadataRecord& r) {
  std::string s = "{";
  auto key = [&](const char* k) {
    if (s.size() > 1) s += ',';
    s += '"';
    s += k;
    s += "\":";
  };
  key("utt_id"), s += json_quote(r.utt_id);
  key("rover_result"), s += json_quote(r.rover_result);
  key("confidence"), s += format_real(r.confidence);
  key("jyutping_confidence"), s += format_real(r.jyutping_confidence);
  key("bucket"), s += json_quote(to_string(r.bucket));
  key("duration"), s += format_real(r.duration);
  if (r.speaker_id) key("speaker_id"), s += json_quote(*r.speaker_id);
  key("gender"), s += json_quote(r.gender);
  key("age"), s += json_quote(r.age);
  if (r.sample_rate) key("sample_rate"), s += std::to_string(*r.sample_rate);
  if (r.effective_bandwidth) key("effective_bandwidth"), s += format_real(*r.effective_bandwidth);
  if (r.dnsmos) key("DNSMOS"), s += format_real(*r.dnsmos);
  if (r.snr) key("SNR"), s += format_real(*r.snr);
  key("tts_ready"), s += r.tts_ready ? "true" : "false";
  if (r.timestamp) {
    key("timestamp");
    s += '[';
    for (std::size_t i = 0; i < r.timestamp->size(); ++i) {
      const TimestampEntry& t = (*r.timestamp)[i];
      if (i) s += ',';
      s += "{\"token\":" + json_quote(t.token) + ",\"start\":" + format_real(t.start_s) +
           ",\"end\":" + format_real(t.end_s) + "}";
    }
    s += ']';
  }
  key("meta_info");
  s += "{\"program\":" + json_quote(r.meta_info.program) + ",\"region\":" + json_quote(r.meta_info.region) +
       ",\"link\":" + json_quote(r.meta_info.link) + ",\"domain\":" + json_quote(r.meta_info.domain) + "}";
  s += '}';
  return s;
}

MetadataRecord parse_record(const Json& j) {
  if (!j.is_object()) throw ValidationError("record is not a JSON object");
  MetadataRecord r;
  r.utt_id = get_string(j, "utt_id");
  r.rover_result = get_string(j, "rover_result");
  r.confidence = get_number(j, "confidence");
  r.jyutping_confidence = get_number(j, "jyutping_confidence");
  if (const auto b = opt_string(j, "bucket")) {
    const auto parsed = parse_bucket(*b);
    if (!parsed) throw ValidationError("unknown bucket " + *b);
    r.bucket = *parsed;
  } else {
    r.bucket = assign_bucket(r.confidence);
  }
  r.duration = get_number(j, "duration");
  r.speaker_id = opt_string(j, "speaker_id");
  r.gender = opt_string(j, "gender").value_or("unknown");
  r.age = opt_string(j, "age").value_or("unknown");
  if (j.contains("sample_rate")) {
    const Json& v = j["sample_rate"];
    if (!v.is_number_integer()) throw ValidationError("field sample_rate must be an integer");
    r.sample_rate = v.get<int>();
  }
  r.effective_bandwidth = opt_number(j, "effective_bandwidth");
  r.dnsmos = opt_number(j, "DNSMOS");
  r.snr = opt_number(j, "SNR");
  if (j.contains("tts_ready")) {
    if (!j["tts_ready"].is_boolean()) throw ValidationError("field tts_ready must be a boolean");
    r.tts_ready = j["tts_ready"].get<bool>();
  }
  if (j.contains("timestamp")) {
    const Json& ts = j["timestamp"];
    if (!ts.is_array()) throw ValidationError("field timestamp must be an array");
    std::vector<TimestampEntry> entries;
    for (const Json& e : ts) {
      if (!e.is_object()) throw ValidationError("timestamp entries must be objects");
      entries.push_back({get_string(e, "token"), get_number(e, "start"), get_number(e, "end")});
    }
    r.timestamp = std::move(entries);
  }
  if (j.contains("meta_info")) {
    const Json& m = j["meta_info"];
    if (!m.is_object()) throw ValidationError("field meta_info must be an object");
    r.meta_info.program = opt_string(m, "program").value_or("");
    r.meta_info.region = opt_string(m, "region").value_or("");
    r.meta_info.link = opt_string(m, "link").value_or("");
    r.meta_info.domain = opt_string(m, "domain").value_or("Others");
  }
  return r;
}

EmitReport emit_manifest(const std::vector<MetadataRecord>& records, std::ostream& out) {
  EmitReport report;
  for (const MetadataRecord& r : records) {
    const std::vector<std::string> problems = validate(r);
    if (!problems.empty()) {
      std::string reason;
      for (const std::string& p : problems) reason += (reason.empty() ? "" : "; ") + p;
      report.rejected.emplace_back(r.utt_id, std::move(reason));
      continue;
    }
    out << to_json_line(r) << '\n';
    ++report.written;
  }
  return report;
}

std::string source_of(std::string_view utt_id) {
  const std::size_t cut = utt_id.find_last_of("_-");
  if (cut == std::string_view::npos || cut == 0) return std::string(utt_id);
  return std::string(utt_id.substr(0, cut));
}

SpeakerSidecar ingest_speaker_sidecar(const std::filesystem::path& path) {
  SpeakerSidecar sidecar;
  const std::string name = path.filename().string();
  read_jsonl(
      path,
      [&](std::size_t number, const Json& j) {
        const auto id = j.find("utt_id");
        if (id == j.end() || !id->is_string() || id->get<std::string>().empty())
          throw std::runtime_error("missing utt_id, line skipped");
        const std::string utt = id->get<std::string>();
        auto warn = [&](const std::string& what) {
          sidecar.warnings.push_back(name + ":" + std::to_string(number) + ": " + what);
        };
        SpeakerInfo info;
        if (const auto s = j.find("speaker"); s != j.end() && s->is_string() && !s->get<std::string>().empty()) {
          std::string source = source_of(utt);
          if (const auto src = j.find("source"); src != j.end() && src->is_string()) source = src->get<std::string>();
          info.speaker_id = source + "#" + s->get<std::string>();
        }
        if (const auto g = j.find("gender"); g != j.end()) {
          const auto label = g->is_string() ? match_vocab(kGenders, g->get<std::string>()) : std::nullopt;
          if (label)
            info.gender = *label;
          else
            warn("unrecognised gender " + g->dump() + ", using unknown");
        }
        if (const auto a = j.find("age"); a != j.end()) {
          const auto label = a->is_string() ? match_vocab(kAges, a->get<std::string>()) : std::nullopt;
          if (label)
            info.age = *label;
          else
            warn("unrecognised age " + a->dump() + ", using unknown");
        }
        sidecar.entries[utt] = std::move(info);
      },
      sidecar.warnings);
  return sidecar;
}

CorpusStats corpus_stats(const std::vector<MetadataRecord>& records) {
  CorpusStats st;
  for (Bucket b : kAllBuckets) st.buckets[b] = {};
  for (std::string_view d : kDomains) st.domains[std::string(d)] = {};
  st.duration_histogram = make_bins({0, 3, 5, 10, 15, 20, 30, std::numeric_limits<double>::infinity()});
  st.confidence_histogram = make_bins({0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0});

  double seconds = 0.0;
  for (const MetadataRecord& r : records) {
    const double hours = r.duration / 3600.0;
    ++st.utterances;
    seconds += r.duration;
    st.total_hours += hours;
    add(st.buckets[r.bucket], hours);
    add_to_histogram(st.duration_histogram, r.duration, hours, false);
    add_to_histogram(st.confidence_histogram, r.confidence, hours, true);
    if (r.bucket == Bucket::kDropped) continue;
    st.retained_hours += hours;
    add(st.domains[r.meta_info.domain], hours);
    add(st.age_gender[r.age][r.gender], hours);
    if (r.tts_ready) st.tts_ready_hours += hours;
  }
  st.mean_duration_s = st.utterances ? seconds / static_cast<double>(st.utterances) : 0.0;
  return st;
}

Json CorpusStats::to_json() const {
  Json j;
  j["utterances"] = utterances;
  j["total_hours"] = total_hours;
  j["retained_hours"] = retained_hours;
  j["mean_duration_s"] = mean_duration_s;
  j["tts_ready_hours"] = tts_ready_hours;
  Json b = Json::object();
  for (const auto& [bucket, t] : buckets) b[to_string(bucket)] = tally_json(t);
  j["buckets"] = std::move(b);
  Json d = Json::object();
  for (const auto& [domain, t] : domains) d[domain] = tally_json(t);
  j["domains"] = std::move(d);
  auto hist = [](const std::vector<HistogramBin>& bins) {
    Json arr = Json::array();
    for (const HistogramBin& bin : bins) {
      Json e = {{"lo", bin.lo}, {"count", bin.tally.count}, {"hours", bin.tally.hours}};
      e["hi"] = std::isinf(bin.hi) ? Json(nullptr) : Json(bin.hi);
      arr.push_back(std::move(e));
    }
    return arr;
  };
  j["duration_histogram"] = hist(duration_histogram);
  j["confidence_histogram"] = hist(confidence_histogram);
  Json ag = Json::object();
  for (const auto& [age, genders] : age_gender)
    for (const auto& [gender, t] : genders) ag[age][gender] = tally_json(t);
  j["age_gender"] = std::move(ag);
  return j;
}

}  // namespace yuepipe::corpusmeta
