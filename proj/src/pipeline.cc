#include "yuepipe/pipeline.h"

#include <algorithm>
#include <atomic>
#include <condition_variable>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "yuepipe/unicode.h"

namespace yuepipe::pipeline {

namespace {

using OJson = nlohmann::ordered_json;

std::optional<double> number_field(const Json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  if (!it->is_number()) throw std::invalid_argument(std::string(key) + " is not a number");
  return it->get<double>();
}

std::string string_field(const Json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return {};
  if (!it->is_string()) throw std::invalid_argument(std::string(key) + " is not a string");
  return it->get<std::string>();
}

std::vector<corpusmeta::TimestampEntry> parse_timestamps(const Json& j) {
  if (!j.is_array()) throw std::invalid_argument("timestamp is not an array");
  std::vector<corpusmeta::TimestampEntry> out;
  for (const Json& e : j) {
    if (!e.is_object()) throw std::invalid_argument("timestamp entry is not an object");
    out.push_back({e.at("token").get<std::string>(), e.at("start").get<double>(), e.at("end").get<double>()});
  }
  return out;
}

struct HypothesisLine {
  std::string text;
  std::optional<double> duration;
};

std::map<std::string, HypothesisLine> read_system(const config::SystemInput& sys, std::vector<std::string>& warnings) {
  std::map<std::string, HypothesisLine> out;
  std::vector<std::string> local;
  const bool readable = read_jsonl(sys.path, [&](std::size_t line, const Json& j) {
    const std::string id = string_field(j, "utt_id");
    if (id.empty()) throw std::invalid_argument("missing utt_id");
    auto text = j.find("text");
    if (text == j.end() || !text->is_string()) throw std::invalid_argument("missing text");
    HypothesisLine h{text->get<std::string>(), number_field(j, "duration")};
    if (!out.emplace(id, h).second) {
      local.push_back("line " + std::to_string(line) + ": duplicate utt_id " + id + ", later line wins");
      out[id] = std::move(h);
    }
  }, local);
  if (!readable) throw InputError("cannot read hypotheses for system " + sys.id + ": " + sys.path.string());
  for (std::string& w : local) warnings.push_back(sys.path.filename().string() + ": " + w);
  return out;
}

}  // namespace

const char* to_string(Status s) {
  switch (s) {
    case Status::kOk: return "ok";
    case Status::kDropped: return "dropped";
    case Status::kError: return "error";
  }
  return "error";
}

std::vector<UtteranceInput> load_inputs(const config::PipelineConfig& cfg, std::vector<std::string>& warnings) {
  std::vector<std::map<std::string, HypothesisLine>> per_system;
  for (const config::SystemInput& sys : cfg.systems) per_system.push_back(read_system(sys, warnings));

  std::vector<UtteranceInput> inputs;
  if (!cfg.utterances.empty()) {
    std::set<std::string> seen;
    std::vector<std::string> local;
    const std::filesystem::path base = cfg.utterances.parent_path();
    const bool readable = read_jsonl(cfg.utterances, [&](std::size_t line, const Json& j) {
      UtteranceInput in;
      in.utt_id = string_field(j, "utt_id");
      if (in.utt_id.empty()) throw std::invalid_argument("missing utt_id");
      if (!seen.insert(in.utt_id).second) {
        local.push_back("line " + std::to_string(line) + ": duplicate utt_id " + in.utt_id + " ignored");
        return;
      }
      if (const std::string audio = string_field(j, "audio"); !audio.empty()) {
        in.audio = audio;
        if (in.audio.is_relative()) in.audio = base / in.audio;
      }
      in.duration = number_field(j, "duration");
      if (auto sr = number_field(j, "sample_rate")) in.sample_rate = static_cast<int>(*sr);
      if (auto ts = j.find("timestamp"); ts != j.end() && !ts->is_null()) in.timestamp = parse_timestamps(*ts);
      if (auto meta = j.find("meta_info"); meta != j.end() && meta->is_object()) {
        in.meta_info.program = string_field(*meta, "program");
        in.meta_info.region = string_field(*meta, "region");
        in.meta_info.link = string_field(*meta, "link");
        if (std::string d = string_field(*meta, "domain"); !d.empty()) in.meta_info.domain = d;
      }
      inputs.push_back(std::move(in));
    }, local);
    if (!readable) throw InputError("cannot read utterance list " + cfg.utterances.string());
    for (std::string& w : local) warnings.push_back(cfg.utterances.filename().string() + ": " + w);
  } else {
    std::set<std::string> ids;
    for (const auto& m : per_system)
      for (const auto& [id, h] : m) ids.insert(id);
    for (const std::string& id : ids) {
      UtteranceInput in;
      in.utt_id = id;
      inputs.push_back(std::move(in));
    }
  }

  std::set<std::string> known;
  for (UtteranceInput& in : inputs) {
    known.insert(in.utt_id);
    for (std::size_t s = 0; s < cfg.systems.size(); ++s) {
      auto it = per_system[s].find(in.utt_id);
      if (it == per_system[s].end()) {
        in.missing_systems.push_back(cfg.systems[s].id);
        continue;
      }
      in.hypotheses.push_back({cfg.systems[s].id, it->second.text});
      if (!in.duration && it->second.duration) in.duration = it->second.duration;
    }
  }
  for (std::size_t s = 0; s < cfg.systems.size(); ++s) {
    std::size_t orphans = 0;
    for (const auto& [id, h] : per_system[s]) orphans += known.count(id) == 0;
    if (orphans > 0)
      warnings.push_back("system " + cfg.systems[s].id + ": " + std::to_string(orphans) +
                         " hypotheses for utterances not in the utterance list");
  }
  return inputs;
}

std::string UtteranceOutcome::ledger_line() const {
  OJson j;
  j["type"] = "utterance";
  j["utt_id"] = utt_id;
  j["status"] = to_string(status);
  j["reason"] = reason;
  j["systems"] = systems;
  j["missing_systems"] = missing_systems;
  j["excluded_systems"] = excluded_systems;
  if (record) {
    j["confidence"] = record->confidence;
    j["jyutping_confidence"] = record->jyutping_confidence;
  }
  if (corrector) {
    OJson c;
    c["status"] = fusion::to_string(*corrector);
    c["reason"] = corrector_reason;
    if (corrector_reply) c["reply"] = *corrector_reply;
    j["corrector"] = std::move(c);
  }
  j["warnings"] = warnings;
  if (record) j["record"] = OJson::parse(corpusmeta::to_json_line(*record));
  return j.dump();
}

UtteranceOutcome process_utterance(const UtteranceInput& input, const Context& ctx) {
  const config::PipelineConfig& cfg = *ctx.config;
  UtteranceOutcome out;
  out.utt_id = input.utt_id;
  out.missing_systems = input.missing_systems;
  auto fail = [&](std::string why) {
    out.status = Status::kError;
    out.reason = std::move(why);
    out.record.reset();
    return out;
  };

  try {
    // Stage B: normalization.
    fusion::HypothesisSet set;
    set.utt_id = input.utt_id;
    for (const textnorm::RawTranscript& raw : input.hypotheses) {
      try {
        textnorm::NormalizedTranscript n = textnorm::normalize(raw, *ctx.tables);
        set.hypotheses.push_back({raw.system_id, std::move(n.tokens)});
        out.systems.push_back(raw.system_id);
      } catch (const std::exception& e) {
        out.warnings.push_back("system " + raw.system_id + ": " + e.what());
      }
    }
    if (set.hypotheses.empty()) return fail(input.hypotheses.empty() ? "no hypotheses" : "no usable hypotheses");

    // Stage C: fusion, then the optional corrector.
    fusion::FusionOptions fo;
    fo.filter_threshold = cfg.filter_threshold;
    fusion::FusionResult fused = fusion::fuse(set, ctx.jyutping, fo);
    out.excluded_systems = fused.excluded_systems;
    if (fused.fused_tokens.empty()) {
      out.status = Status::kDropped;
      out.reason = "empty transcript";
      return out;
    }
    if (ctx.corrector) {
      fusion::CorrectionOutcome c =
          fusion::apply_corrector(fused, set, *ctx.corrector, cfg.corrector_guard, *ctx.tables);
      out.corrector = c.status;
      out.corrector_reason = c.reason;
      out.corrector_reply = c.reply;
      if (c.status == fusion::CorrectorStatus::kSkipped) out.warnings.push_back("corrector skipped: " + c.reason);
      fused = std::move(c.result);
      if (fused.fused_tokens.empty()) {
        out.status = Status::kDropped;
        out.reason = "empty transcript after correction";
        return out;
      }
    }

    // Stage D: audio facts and quality sidecar.
    corpusmeta::MetadataRecord r;
    r.utt_id = input.utt_id;
    r.rover_result = fused.text();
    r.confidence = fused.text_confidence;
    r.jyutping_confidence = fused.jyutping_confidence;
    r.meta_info = input.meta_info;
    r.timestamp = input.timestamp;
    r.duration = input.duration.value_or(0.0);
    r.sample_rate = input.sample_rate;
    if (!input.audio.empty()) {
      quality::AudioSegment audio;
      try {
        audio = quality::read_wav(input.audio);
      } catch (const std::exception& e) {
        return fail(std::string("audio: ") + e.what());
      }
      if (audio.samples.empty()) return fail("audio: no samples");
      r.duration = audio.duration_s();
      r.sample_rate = audio.sample_rate;
      const quality::BandwidthEstimate bw = quality::effective_bandwidth(audio, cfg.energy_fraction);
      r.effective_bandwidth = bw.hz;
      if (bw.low_reliability) out.warnings.push_back("bandwidth estimate has low reliability");
    }
    if (!(r.duration > 0.0)) return fail("unknown duration");

    quality::QualityAnnotation qa;
    if (ctx.quality) {
      if (auto it = ctx.quality->entries.find(input.utt_id); it != ctx.quality->entries.end()) {
        qa.snr_db = it->second.snr_db;
        qa.dnsmos = it->second.dnsmos;
      }
    }
    r.snr = qa.snr_db;
    r.dnsmos = qa.dnsmos;
    r.tts_ready = quality::tts_gate(qa, {cfg.dnsmos_min, cfg.snr_min});

    if (ctx.speakers) {
      if (auto it = ctx.speakers->entries.find(input.utt_id); it != ctx.speakers->entries.end()) {
        r.speaker_id = it->second.speaker_id;
        r.gender = it->second.gender;
        r.age = it->second.age;
      }
    }

    // Stage E: confidence partition.
    corpusmeta::BucketBounds bounds{cfg.bucket_strong, cfg.bucket_moderate, cfg.bucket_keep};
    r.bucket = corpusmeta::assign_bucket(r.confidence, bounds);

    if (const auto problems = corpusmeta::validate(r); !problems.empty()) {
      std::string why = "invalid record:";
      for (const std::string& p : problems) why += " " + p + ";";
      why.pop_back();
      return fail(why);
    }
    out.record = std::move(r);
    if (out.record->bucket == corpusmeta::Bucket::kDropped) {
      out.status = Status::kDropped;
      out.reason = "confidence ≤ " + format_real(cfg.bucket_keep);
    } else {
      out.status = Status::kOk;
    }
    return out;
  } catch (const std::exception& e) {
    return fail(e.what());
  }
}

Json RunSummary::to_json() const {
  return Json{{"total", total},
              {"ok", ok},
              {"dropped", dropped},
              {"error", error},
              {"restored", restored},
              {"corrector", {{"accepted", corrector_accepted}, {"rejected", corrector_rejected}, {"skipped", corrector_skipped}}},
              {"coverage_gaps", coverage_gaps},
              {"warnings", warnings.size()}};
}

std::map<std::string, std::string> read_replies(const std::filesystem::path& ledger) {
  std::map<std::string, std::string> replies;
  std::vector<std::string> warnings;
  const bool readable = read_jsonl(ledger, [&](std::size_t, const Json& j) {
    if (j.value("type", "") != "utterance") return;
    auto c = j.find("corrector");
    if (c == j.end() || !c->is_object()) return;
    auto reply = c->find("reply");
    if (reply != c->end() && reply->is_string()) replies[j.at("utt_id").get<std::string>()] = reply->get<std::string>();
  }, warnings);
  if (!readable) throw InputError("cannot read replay ledger " + ledger.string());
  return replies;
}

namespace {

struct Restored {
  std::string line;
  UtteranceOutcome outcome;
};

// Complete utterance lines of an earlier ledger written under the same config.
std::map<std::string, Restored> restore_ledger(const std::filesystem::path& path, const std::string& config_hash,
                                               std::vector<std::string>& warnings) {
  std::map<std::string, Restored> out;
  std::ifstream in(path, std::ios::binary);
  if (!in) return out;
  std::string line;
  bool header_ok = false;
  while (std::getline(in, line)) {
    Json j;
    try {
      j = Json::parse(line);
    } catch (const std::exception&) {
      break;  // torn tail of an interrupted run
    }
    const std::string type = j.value("type", "");
    if (type == "header") {
      header_ok = j.value("config_hash", "") == config_hash;
      if (!header_ok) {
        warnings.push_back("resume: ledger was written under a different config, starting over");
        return {};
      }
      continue;
    }
    if (type != "utterance" || !header_ok) continue;
    Restored r;
    r.line = line;
    UtteranceOutcome& o = r.outcome;
    o.utt_id = j.at("utt_id").get<std::string>();
    const std::string status = j.at("status").get<std::string>();
    o.status = status == "ok" ? Status::kOk : status == "dropped" ? Status::kDropped : Status::kError;
    o.missing_systems = j.value("missing_systems", std::vector<std::string>{});
    o.warnings = j.value("warnings", std::vector<std::string>{});
    if (auto c = j.find("corrector"); c != j.end()) {
      const std::string cs = c->value("status", "");
      o.corrector = cs == "accepted"   ? fusion::CorrectorStatus::kAccepted
                    : cs == "rejected" ? fusion::CorrectorStatus::kRejected
                                       : fusion::CorrectorStatus::kSkipped;
    }
    if (auto rec = j.find("record"); rec != j.end()) o.record = corpusmeta::parse_record(*rec);
    out[o.utt_id] = std::move(r);
  }
  return out;
}

std::ofstream open_output(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot write " + path.string());
  return out;
}

}  // namespace

RunSummary run(const config::PipelineConfig& cfg, const RunOptions& options) {
  cfg.validate();
  RunSummary summary;

  // Everything that can fail on input is loaded before any output is touched.
  const std::filesystem::path tables_dir = cfg.tables_dir.empty() ? YUEPIPE_DEFAULT_TABLES_DIR : cfg.tables_dir;
  textnorm::NormalizationTables tables;
  fusion::JyutpingTable jyutping;
  try {
    tables = textnorm::NormalizationTables::load(tables_dir);
    jyutping = fusion::JyutpingTable::load(cfg.jyutping_table.empty() ? tables_dir / "jyutping.tsv" : cfg.jyutping_table);
  } catch (const std::exception& e) {
    throw InputError(e.what());
  }
  std::vector<UtteranceInput> inputs = load_inputs(cfg, summary.warnings);
  quality::QualitySidecar quality_sidecar;
  corpusmeta::SpeakerSidecar speaker_sidecar;
  auto require = [](const std::filesystem::path& p, const char* what) {
    if (!p.empty() && !std::filesystem::is_regular_file(p)) throw InputError(std::string("cannot read ") + what + " " + p.string());
  };
  require(cfg.quality_sidecar, "quality sidecar");
  require(cfg.speaker_sidecar, "speaker sidecar");
  if (!cfg.quality_sidecar.empty()) {
    quality_sidecar = quality::ingest_quality_sidecar(cfg.quality_sidecar);
    for (const std::string& w : quality_sidecar.warnings) summary.warnings.push_back("quality sidecar: " + w);
  }
  if (!cfg.speaker_sidecar.empty()) {
    speaker_sidecar = corpusmeta::ingest_speaker_sidecar(cfg.speaker_sidecar);
    for (const std::string& w : speaker_sidecar.warnings) summary.warnings.push_back("speaker sidecar: " + w);
  }

  std::unique_ptr<fusion::CommandHook> command_hook;
  std::unique_ptr<fusion::ReplayHook> replay_hook;
  fusion::CorrectorHook* hook = options.corrector;
  if (!hook) {
    if (!cfg.corrector.empty())
      command_hook = std::make_unique<fusion::CommandHook>(
          cfg.corrector, std::chrono::milliseconds(static_cast<long long>(cfg.corrector_timeout_s * 1000.0)),
          cfg.corrector_jobs);
    if (!cfg.replay_ledger.empty()) {
      replay_hook = std::make_unique<fusion::ReplayHook>(read_replies(cfg.replay_ledger), command_hook.get());
      hook = replay_hook.get();
    } else {
      hook = command_hook.get();
    }
  }

  const std::string config_hash = cfg.hash();
  std::map<std::string, Restored> restored;
  if (options.resume && !cfg.ledger.empty()) restored = restore_ledger(cfg.ledger, config_hash, summary.warnings);

  std::ofstream manifest_out, ledger_out;
  if (!cfg.out_manifest.empty()) manifest_out = open_output(cfg.out_manifest);
  if (!cfg.ledger.empty()) {
    ledger_out = open_output(cfg.ledger);
    OJson header;
    header["type"] = "header";
    header["config_hash"] = config_hash;
    std::vector<std::string> ids;
    for (const auto& s : cfg.systems) ids.push_back(s.id);
    header["systems"] = ids;
    ledger_out << header.dump() << '\n' << std::flush;
  }

  const Context ctx{&cfg, &tables, &jyutping, &quality_sidecar, &speaker_sidecar, hook};
  const std::size_t n = inputs.size();
  std::vector<std::optional<UtteranceOutcome>> slots(n);
  std::vector<const Restored*> reused(n, nullptr);
  for (std::size_t i = 0; i < n; ++i)
    if (auto it = restored.find(inputs[i].utt_id); it != restored.end()) reused[i] = &it->second;

  std::mutex mu;
  std::condition_variable ready;
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      if (reused[i]) continue;
      UtteranceOutcome o = process_utterance(inputs[i], ctx);
      {
        std::lock_guard lock(mu);
        slots[i] = std::move(o);
      }
      ready.notify_all();
    }
  };
  std::size_t n_workers = cfg.workers > 0 ? static_cast<std::size_t>(cfg.workers)
                                          : std::max<std::size_t>(1, std::thread::hardware_concurrency());
  n_workers = std::min(n_workers, std::max<std::size_t>(n, 1));
  std::vector<std::jthread> pool;
  for (std::size_t w = 0; w < n_workers; ++w) pool.emplace_back(worker);

  // Single ordered writer: outputs follow input order whatever the schedule.
  std::vector<corpusmeta::MetadataRecord> stats_records;
  summary.total = n;
  for (std::size_t i = 0; i < n; ++i) {
    UtteranceOutcome o;
    std::string line;
    if (reused[i]) {
      o = reused[i]->outcome;
      line = reused[i]->line;
      ++summary.restored;
    } else {
      std::unique_lock lock(mu);
      ready.wait(lock, [&] { return slots[i].has_value(); });
      o = std::move(*slots[i]);
      slots[i].reset();
      lock.unlock();
      line = o.ledger_line();
    }
    switch (o.status) {
      case Status::kOk: ++summary.ok; break;
      case Status::kDropped: ++summary.dropped; break;
      case Status::kError: ++summary.error; break;
    }
    if (o.corrector) {
      switch (*o.corrector) {
        case fusion::CorrectorStatus::kAccepted: ++summary.corrector_accepted; break;
        case fusion::CorrectorStatus::kRejected: ++summary.corrector_rejected; break;
        case fusion::CorrectorStatus::kSkipped: ++summary.corrector_skipped; break;
      }
    }
    summary.coverage_gaps += !o.missing_systems.empty();
    for (const std::string& w : o.warnings) summary.warnings.push_back(o.utt_id + ": " + w);
    if (o.status == Status::kError) summary.warnings.push_back(o.utt_id + ": " + o.reason);
    if (ledger_out.is_open()) ledger_out << line << '\n' << std::flush;
    if (o.record) {
      if (o.status == Status::kOk && manifest_out.is_open()) manifest_out << corpusmeta::to_json_line(*o.record) << '\n';
      stats_records.push_back(std::move(*o.record));
    }
  }
  pool.clear();

  if (ledger_out.is_open()) {
    OJson s;
    s["type"] = "summary";
    s["counts"] = OJson::parse(summary.to_json().dump());
    ledger_out << s.dump() << '\n';
  }
  if (!cfg.stats_report.empty()) {
    std::ofstream stats_out = open_output(cfg.stats_report);
    Json report = corpusmeta::corpus_stats(stats_records).to_json();
    report["run"] = summary.to_json();
    stats_out << report.dump(2) << '\n';
  }
  return summary;
}

}  // namespace yuepipe::pipeline
