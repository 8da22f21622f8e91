#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "yuepipe/jsonl.h"

namespace yuepipe::corpusmeta {

class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Bucket { kStrong, kModerate, kWeak, kDropped };
inline constexpr std::array<Bucket, 4> kAllBuckets = {Bucket::kStrong, Bucket::kModerate, Bucket::kWeak,
                                                      Bucket::kDropped};
const char* to_string(Bucket b);
std::optional<Bucket> parse_bucket(std::string_view s);

/// Lower bounds are strict, upper bounds inclusive:
/// strong (strong, 1], moderate (moderate, strong], weak (keep, moderate], dropped [0, keep].
struct BucketBounds {
  double strong = 0.9;
  double moderate = 0.8;
  double keep = 0.6;

  void validate() const;  // requires 0 <= keep <= moderate <= strong <= 1
};

/// Throws ValidationError when confidence is outside [0, 1] or not finite.
Bucket assign_bucket(double confidence, const BucketBounds& bounds = {});

inline constexpr std::array<std::string_view, 10> kDomains = {
    "Storytelling", "Entertainment", "Drama", "Culture", "Vlog", "Commentary", "Education", "Podcast", "News", "Others"};
inline constexpr std::array<std::string_view, 3> kGenders = {"male", "female", "unknown"};
inline constexpr std::array<std::string_view, 5> kAges = {"Child", "Youth", "Middle_age", "Elderly", "unknown"};

struct TimestampEntry {
  std::string token;
  double start_s = 0.0;
  double end_s = 0.0;
};

struct MetaInfo {
  std::string program;
  std::string region;
  std::string link;
  std::string domain = "Others";
};

struct MetadataRecord {
  std::string utt_id;
  std::string rover_result;
  double confidence = 0.0;
  double jyutping_confidence = 0.0;
  Bucket bucket = Bucket::kDropped;
  double duration = 0.0;
  std::optional<std::string> speaker_id;
  std::string gender = "unknown";
  std::string age = "unknown";
  std::optional<int> sample_rate;
  std::optional<double> effective_bandwidth;
  std::optional<double> dnsmos;
  std::optional<double> snr;
  bool tts_ready = false;
  std::optional<std::vector<TimestampEntry>> timestamp;
  MetaInfo meta_info;
};

/// Every invariant violation, in a stable order; empty when the record is valid.
std::vector<std::string> validate(const MetadataRecord& r);

/// Canonical single-line JSON: fixed key order, reals with 6 significant
/// digits, absent optionals omitted. No trailing newline.
std::string to_json_line(const MetadataRecord& r);

/// Reads a record from a parsed manifest line. Throws ValidationError on
/// missing or mistyped fields (does not run validate()).
MetadataRecord parse_record(const Json& j);

struct EmitReport {
  std::size_t written = 0;
  std::vector<std::pair<std::string, std::string>> rejected;  // (utt_id, reason)
};

/// Writes valid records one per line; invalid ones are listed in the report.
EmitReport emit_manifest(const std::vector<MetadataRecord>& records, std::ostream& out);

struct SpeakerInfo {
  std::optional<std::string> speaker_id;  // "<source_id>#<local label>"
  std::string gender = "unknown";
  std::string age = "unknown";
};

struct SpeakerSidecar {
  std::map<std::string, SpeakerInfo> entries;
  std::vector<std::string> warnings;
};

/// JSONL lines {"utt_id", "speaker", "gender", "age", "source"?}. Speaker
/// labels are local to a source recording: the source comes from "source"
/// when given, otherwise from the utt_id up to its last '_' or '-'.
/// Unrecognised gender/age labels become "unknown" with a warning.
SpeakerSidecar ingest_speaker_sidecar(const std::filesystem::path& path);

/// Source recording implied by an utterance id ("show12_0003" -> "show12").
std::string source_of(std::string_view utt_id);

struct Tally {
  std::size_t count = 0;
  double hours = 0.0;
};

struct HistogramBin {
  double lo = 0.0;
  double hi = 0.0;  // +inf for the open last bin
  Tally tally;
};

struct CorpusStats {
  std::size_t utterances = 0;
  double total_hours = 0.0;
  double retained_hours = 0.0;
  double mean_duration_s = 0.0;
  double tts_ready_hours = 0.0;
  std::map<Bucket, Tally> buckets;
  std::map<std::string, Tally> domains;  // retained records only
  std::vector<HistogramBin> duration_histogram;
  std::vector<HistogramBin> confidence_histogram;
  std::map<std::string, std::map<std::string, Tally>> age_gender;  // retained, age -> gender

  Json to_json() const;
};

CorpusStats corpus_stats(const std::vector<MetadataRecord>& records);

}  // namespace yuepipe::corpusmeta
