// yuepipe: transcript fusion and corpus annotation driver.
#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <set>

#include "yuepipe/config.h"
#include "yuepipe/corpusmeta.h"
#include "yuepipe/evalmer.h"
#include "yuepipe/pipeline.h"
#include "yuepipe/synth.h"

namespace {

using namespace yuepipe;

constexpr int kInputError = 1;
constexpr int kWarnings = 2;

std::filesystem::path tables_dir_or_default(const std::string& dir) {
  return dir.empty() ? std::filesystem::path(YUEPIPE_DEFAULT_TABLES_DIR) : std::filesystem::path(dir);
}

void print_warnings(const std::vector<std::string>& warnings, std::size_t limit = 20) {
  for (std::size_t i = 0; i < warnings.size() && i < limit; ++i) std::cerr << "warning: " << warnings[i] << '\n';
  if (warnings.size() > limit) std::cerr << "warning: ... " << warnings.size() - limit << " more\n";
}

struct RunArgs {
  std::string config;
  std::vector<std::string> hyps;
  std::vector<std::string> sets;
  std::string tables_dir, utterances, quality, speakers, corrector, replay, manifest, stats, ledger;
  std::optional<double> dnsmos_min, snr_min, energy_fraction, filter_threshold, guard;
  std::optional<int> workers;
  bool resume = false;
};

int cmd_run(const RunArgs& a) {
  config::PipelineConfig cfg;
  if (!a.config.empty()) cfg = config::load_config(a.config);
  if (!a.hyps.empty()) {
    cfg.systems.clear();
    for (const std::string& h : a.hyps) {
      const auto eq = h.find('=');
      if (eq == std::string::npos || eq == 0) throw config::ConfigError("--hyp expects ID=PATH, got " + h);
      cfg.set("system." + h.substr(0, eq), h.substr(eq + 1));
    }
  }
  auto over = [&](const char* key, const std::string& v) {
    if (!v.empty()) cfg.set(key, v);
  };
  auto over_num = [&](const char* key, const auto& v) {
    if (!v) return;
    if constexpr (std::is_floating_point_v<std::decay_t<decltype(*v)>>) {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.17g", *v);
      cfg.set(key, buf);
    } else {
      cfg.set(key, std::to_string(*v));
    }
  };
  over("tables_dir", a.tables_dir);
  over("utterances", a.utterances);
  over("quality_sidecar", a.quality);
  over("speaker_sidecar", a.speakers);
  over("corrector", a.corrector);
  over("replay_ledger", a.replay);
  over("out_manifest", a.manifest);
  over("stats_report", a.stats);
  over("ledger", a.ledger);
  over_num("dnsmos_min", a.dnsmos_min);
  over_num("snr_min", a.snr_min);
  over_num("energy_fraction", a.energy_fraction);
  over_num("filter_threshold", a.filter_threshold);
  over_num("corrector_guard", a.guard);
  over_num("workers", a.workers);
  for (const std::string& kv : a.sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw config::ConfigError("--set expects KEY=VALUE, got " + kv);
    cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
  }

  pipeline::RunOptions options;
  options.resume = a.resume;
  const pipeline::RunSummary s = pipeline::run(cfg, options);
  print_warnings(s.warnings);
  std::cout << s.to_json().dump() << '\n';
  return s.exit_code();
}

int cmd_mer(const std::string& ref, const std::string& hyp, const std::string& tables_dir, bool by_tag,
            bool per_utt) {
  const auto tables = textnorm::NormalizationTables::load(tables_dir_or_default(tables_dir));
  const evalmer::MerReport report = evalmer::score_manifest(ref, hyp, tables);
  Json j = report.to_json(per_utt);
  if (!by_tag) j.erase("by_tag");
  std::cout << j.dump(2) << '\n';
  print_warnings(report.warnings);
  return report.warnings.empty() ? 0 : kWarnings;
}

// Reads a manifest; every line must be a canonical, valid record.
std::vector<corpusmeta::MetadataRecord> read_manifest(const std::string& path, std::vector<std::string>& problems) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::vector<corpusmeta::MetadataRecord> records;
  std::set<std::string> ids;
  std::string line;
  for (std::size_t n = 1; std::getline(in, line); ++n) {
    const std::string at = "line " + std::to_string(n) + ": ";
    try {
      corpusmeta::MetadataRecord r = corpusmeta::parse_record(Json::parse(line));
      for (const std::string& p : corpusmeta::validate(r)) problems.push_back(at + p);
      if (corpusmeta::to_json_line(r) != line) problems.push_back(at + "not in canonical form");
      if (!ids.insert(r.utt_id).second) problems.push_back(at + "duplicate utt_id " + r.utt_id);
      records.push_back(std::move(r));
    } catch (const std::exception& e) {
      problems.push_back(at + e.what());
    }
  }
  return records;
}

int cmd_stats(const std::string& manifest) {
  std::vector<std::string> problems;
  const auto records = read_manifest(manifest, problems);
  std::cout << corpusmeta::corpus_stats(records).to_json().dump(2) << '\n';
  print_warnings(problems);
  return problems.empty() ? 0 : kWarnings;
}

int cmd_validate(const std::string& manifest) {
  std::vector<std::string> problems;
  const auto records = read_manifest(manifest, problems);
  for (const std::string& p : problems) std::cout << p << '\n';
  std::cout << records.size() << " records, " << problems.size() << " problems\n";
  return problems.empty() ? 0 : kWarnings;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-system transcript fusion and corpus annotation"};
  app.require_subcommand(1);

  RunArgs run;
  auto* run_cmd = app.add_subcommand("run", "Fuse hypotheses and write manifest, stats and ledger");
  run_cmd->add_option("-c,--config", run.config, "Pipeline config file");
  run_cmd->add_option("--hyp", run.hyps, "Hypothesis file as ID=PATH, in priority order (replaces config systems)");
  run_cmd->add_option("--set", run.sets, "Any config key as KEY=VALUE");
  run_cmd->add_option("--tables-dir", run.tables_dir);
  run_cmd->add_option("--utterances", run.utterances);
  run_cmd->add_option("--quality", run.quality, "SNR/DNSMOS sidecar");
  run_cmd->add_option("--speakers", run.speakers, "Speaker sidecar");
  run_cmd->add_option("--corrector", run.corrector, "Corrector hook command");
  run_cmd->add_option("--corrector-guard", run.guard);
  run_cmd->add_option("--replay", run.replay, "Reuse corrector replies from this ledger");
  run_cmd->add_option("--dnsmos-min", run.dnsmos_min);
  run_cmd->add_option("--snr-min", run.snr_min);
  run_cmd->add_option("--energy-fraction", run.energy_fraction);
  run_cmd->add_option("--filter-threshold", run.filter_threshold);
  run_cmd->add_option("--out-manifest", run.manifest);
  run_cmd->add_option("--stats-report", run.stats);
  run_cmd->add_option("--ledger", run.ledger);
  run_cmd->add_option("-j,--workers", run.workers);
  run_cmd->add_flag("--resume", run.resume, "Keep utterances already recorded in the ledger");

  std::string ref, hyp, tables_dir;
  bool by_tag = false, per_utt = false;
  auto* mer_cmd = app.add_subcommand("mer", "Mixed error rate of a hypothesis file against references");
  mer_cmd->add_option("--ref", ref)->required();
  mer_cmd->add_option("--hyp", hyp, "JSONL with text or rover_result")->required();
  mer_cmd->add_option("--tables-dir", tables_dir);
  mer_cmd->add_flag("--by-tag", by_tag);
  mer_cmd->add_flag("--per-utt", per_utt);

  std::string manifest;
  auto* stats_cmd = app.add_subcommand("stats", "Corpus statistics for a manifest");
  stats_cmd->add_option("manifest", manifest)->required();
  auto* validate_cmd = app.add_subcommand("validate", "Lint a manifest");
  validate_cmd->add_option("manifest", manifest)->required();

  synth::SynthOptions so;
  std::string out_dir;
  bool no_noise = false, traditional = true;
  auto* synth_cmd = app.add_subcommand("synth", "Write a synthetic multi-system corpus");
  synth_cmd->add_option("-o,--out", out_dir)->required();
  synth_cmd->add_option("--seed", so.seed);
  synth_cmd->add_option("-n,--utts", so.n_utts);
  synth_cmd->add_option("--error-rate", so.error_rate);
  synth_cmd->add_option("--systems", so.n_systems);
  synth_cmd->add_option("--tables-dir", tables_dir);
  synth_cmd->add_flag("--audio", so.with_audio, "Also write WAV files");
  synth_cmd->add_flag("--plain", no_noise, "No punctuation or casing noise");
  synth_cmd->add_flag("!--no-traditional", traditional, "Keep all characters simplified");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run_cmd) return cmd_run(run);
    if (*mer_cmd) return cmd_mer(ref, hyp, tables_dir, by_tag, per_utt);
    if (*stats_cmd) return cmd_stats(manifest);
    if (*validate_cmd) return cmd_validate(manifest);
    if (*synth_cmd) {
      so.surface_noise = !no_noise;
      std::optional<textnorm::NormalizationTables> tables;
      if (traditional) tables = textnorm::NormalizationTables::load(tables_dir_or_default(tables_dir));
      synth::write_synthetic_corpus(out_dir, so, tables ? &*tables : nullptr);
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInputError;
  }
  return 0;
}
