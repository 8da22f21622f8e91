#include <doctest.h>

#include <fstream>
#include <set>
#include <sstream>

#include "helpers.h"
#include "yuepipe/config.h"
#include "yuepipe/evalmer.h"
#include "yuepipe/pipeline.h"
#include "yuepipe/synth.h"

using namespace yuepipe;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void write(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

std::vector<Json> lines(const fs::path& p) {
  std::vector<Json> out;
  std::istringstream in(slurp(p));
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) out.push_back(Json::parse(line));
  return out;
}

config::PipelineConfig three_systems(const fs::path& dir) {
  config::PipelineConfig cfg;
  for (const char* s : {"a", "b", "c"}) cfg.set(std::string("system.") + s, (dir / (std::string(s) + ".jsonl")).string());
  cfg.set("utterances", (dir / "utts.jsonl").string());
  cfg.set("out_manifest", (dir / "out/manifest.jsonl").string());
  cfg.set("ledger", (dir / "out/ledger.jsonl").string());
  cfg.set("stats_report", (dir / "out/stats.json").string());
  cfg.workers = 2;
  return cfg;
}

}  // namespace

TEST_SUITE("config") {
  TEST_CASE("parsing, paths and overrides") {
    const auto cfg = config::parse_config(
        "# comment\n"
        "system.b = hyp_b.jsonl\n"
        "system.a = \"/abs/hyp_a.jsonl\"\n"
        "priority = a, b\n"
        "filter_threshold = 0.4  # inline\n"
        "corrector = python3 hook.py --fast\n"
        "bucket_keep = 0.5\n"
        "workers = 3\n",
        "/base");
    REQUIRE(cfg.systems.size() == 2);
    CHECK(cfg.systems[0].id == "a");
    CHECK(cfg.systems[0].path == "/abs/hyp_a.jsonl");
    CHECK(cfg.systems[1].path == fs::path("/base/hyp_b.jsonl"));
    CHECK(cfg.filter_threshold == 0.4);
    CHECK(cfg.corrector == std::vector<std::string>{"python3", "hook.py", "--fast"});
    CHECK(cfg.bucket_keep == 0.5);
    CHECK(cfg.workers == 3);
    CHECK_NOTHROW(cfg.validate());
  }

  TEST_CASE("errors") {
    CHECK_THROWS_AS(config::parse_config("bogus = 1\n", {}), config::ConfigError);
    CHECK_THROWS_AS(config::parse_config("no equals sign\n", {}), config::ConfigError);
    CHECK_THROWS_AS(config::parse_config("filter_threshold = abc\n", {}), config::ConfigError);
    CHECK_THROWS_AS(config::parse_config("system.a = x\npriority = a, b\n", {}), config::ConfigError);
    CHECK_THROWS_AS(config::parse_config("", {}).validate(), config::ConfigError);
    auto bad = [](const char* extra) {
      return config::parse_config(std::string("system.a = x\n") + extra, {});
    };
    CHECK_THROWS_AS(bad("filter_threshold = 0\n").validate(), config::ConfigError);
    CHECK_THROWS_AS(bad("corrector_guard = 1.5\n").validate(), config::ConfigError);
    CHECK_THROWS_AS(bad("energy_fraction = 1\n").validate(), config::ConfigError);
    CHECK_THROWS_AS(bad("bucket_keep = 0.95\n").validate(), config::ConfigError);
    CHECK_THROWS_AS(bad("dnsmos_min = 7\n").validate(), config::ConfigError);
    CHECK_NOTHROW(bad("").validate());
  }

  TEST_CASE("hash follows semantic settings only") {
    auto a = config::parse_config("system.a = x\nout_manifest = m1\n", {});
    auto b = config::parse_config("system.a = y\nout_manifest = m2\nworkers = 8\n", {});
    auto c = config::parse_config("system.a = x\nsnr_min = 20\n", {});
    CHECK(a.hash() == b.hash());
    CHECK(a.hash() != c.hash());
  }
}

TEST_SUITE("pipeline") {
  TEST_CASE("identical hypotheses give a strong record") {
    const auto dir = testenv::scratch("pipe_identical");
    for (const char* s : {"a", "b", "c"}) write(dir / (std::string(s) + ".jsonl"), R"({"utt_id":"u1","text":"我哋今日去饮茶！"})" "\n");
    write(dir / "utts.jsonl", R"({"utt_id":"u1","duration":2.5,"meta_info":{"program":"p","region":"HK","link":"","domain":"Vlog"}})" "\n");
    const auto cfg = three_systems(dir);
    const auto summary = pipeline::run(cfg);
    CHECK(summary.ok == 1);
    CHECK(summary.exit_code() == 0);
    const auto manifest = lines(dir / "out/manifest.jsonl");
    REQUIRE(manifest.size() == 1);
    CHECK(manifest[0]["confidence"] == 1.0);
    CHECK(manifest[0]["bucket"] == "strong");
    CHECK(manifest[0]["rover_result"] == "我哋今日去饮茶");
    CHECK(manifest[0]["meta_info"]["domain"] == "Vlog");
  }

  TEST_CASE("low confidence is dropped into the ledger only") {
    const auto dir = testenv::scratch("pipe_dropped");
    // Two voters that agree on 2 of 20 positions: (2 * 1 + 18 * 0.5) / 20 = 0.55.
    write(dir / "a.jsonl", R"({"utt_id":"u1","text":"我哋一二三四五六七八九十百千万年月日时分"})" "\n");
    write(dir / "b.jsonl", R"({"utt_id":"u1","text":"我哋甲乙丙丁戊己庚辛壬癸子丑寅卯辰巳午未"})" "\n");
    write(dir / "utts.jsonl", R"({"utt_id":"u1","duration":4})" "\n");
    config::PipelineConfig cfg = three_systems(dir);
    cfg.systems.pop_back();
    const auto summary = pipeline::run(cfg);
    CHECK(summary.dropped == 1);
    CHECK(slurp(dir / "out/manifest.jsonl").empty());
    const auto ledger = lines(dir / "out/ledger.jsonl");
    REQUIRE(ledger.size() == 3);
    CHECK(ledger[1]["status"] == "dropped");
    CHECK(ledger[1]["reason"] == "confidence ≤ 0.6");
    CHECK(ledger[1]["confidence"].get<double>() == doctest::Approx(0.55));
    CHECK(ledger[2]["type"] == "summary");
  }

  TEST_CASE("coverage gaps, errors and conservation") {
    const auto dir = testenv::scratch("pipe_gaps");
    write(dir / "a.jsonl", R"({"utt_id":"u1","text":"好"})" "\n" R"({"utt_id":"u2","text":"早晨"})" "\n"
                           R"({"utt_id":"u3","text":"，。"})" "\n");
    write(dir / "b.jsonl", R"({"utt_id":"u1","text":"好"})" "\n" R"({"utt_id":"u3","text":"！"})" "\n"
                           R"({"utt_id":"u9","text":"孤儿"})" "\n");
    write(dir / "c.jsonl", R"({"utt_id":"u1","text":"好"})" "\n" "not json\n");
    write(dir / "utts.jsonl", R"({"utt_id":"u1","duration":1})" "\n" R"({"utt_id":"u2","duration":1})" "\n"
                              R"({"utt_id":"u3","duration":1})" "\n" R"({"utt_id":"u4","duration":1})" "\n"
                              R"({"utt_id":"u5"})" "\n");
    const auto cfg = three_systems(dir);
    // u5 has no duration and no hypotheses: an error either way.
    const auto summary = pipeline::run(cfg);
    CHECK(summary.total == 5);
    CHECK(summary.ok + summary.dropped + summary.error == summary.total);
    CHECK(summary.exit_code() == 2);
    const auto ledger = lines(dir / "out/ledger.jsonl");
    std::map<std::string, Json> by_id;
    for (const Json& j : ledger)
      if (j["type"] == "utterance") by_id[j["utt_id"]] = j;
    REQUIRE(by_id.size() == 5);
    CHECK(by_id["u1"]["status"] == "ok");
    CHECK(by_id["u2"]["status"] == "ok");
    CHECK(by_id["u2"]["missing_systems"] == Json::array({"b", "c"}));
    CHECK(by_id["u3"]["status"] == "dropped");
    CHECK(by_id["u3"]["reason"] == "empty transcript");
    CHECK(by_id["u4"]["status"] == "error");
    CHECK(by_id["u4"]["reason"] == "no hypotheses");
    CHECK(by_id["u5"]["status"] == "error");
    std::set<std::string> manifest_ids;
    for (const Json& j : lines(dir / "out/manifest.jsonl")) manifest_ids.insert(j["utt_id"]);
    CHECK(manifest_ids == std::set<std::string>{"u1", "u2"});
  }

  TEST_CASE("unreadable input aborts before output") {
    const auto dir = testenv::scratch("pipe_abort");
    write(dir / "a.jsonl", R"({"utt_id":"u1","text":"好"})" "\n");
    write(dir / "b.jsonl", R"({"utt_id":"u1","text":"好"})" "\n");
    write(dir / "utts.jsonl", R"({"utt_id":"u1","duration":1})" "\n");
    const auto cfg = three_systems(dir);  // c.jsonl does not exist
    CHECK_THROWS_AS(pipeline::run(cfg), pipeline::InputError);
    CHECK_FALSE(fs::exists(dir / "out/manifest.jsonl"));
    CHECK_FALSE(fs::exists(dir / "out/ledger.jsonl"));
    auto with_quality = cfg;
    write(dir / "c.jsonl", "");
    with_quality.set("quality_sidecar", (dir / "missing_quality.jsonl").string());
    CHECK_THROWS_AS(pipeline::run(with_quality), pipeline::InputError);
  }

  TEST_CASE("synthetic corpus: determinism across worker counts, resume and stats") {
    const auto dir = testenv::scratch("pipe_synth");
    synth::SynthOptions so;
    so.seed = 5;
    so.n_utts = 120;
    synth::write_synthetic_corpus(dir, so, &testenv::tables());
    auto cfg = config::load_config(dir / "pipeline.conf");
    cfg.workers = 1;
    const auto s1 = pipeline::run(cfg);
    const std::string manifest1 = slurp(cfg.out_manifest), ledger1 = slurp(cfg.ledger), stats1 = slurp(cfg.stats_report);
    CHECK(s1.total == 120);
    CHECK(s1.ok + s1.dropped + s1.error == 120);
    CHECK_FALSE(manifest1.empty());

    cfg.workers = 4;
    pipeline::run(cfg);
    CHECK(slurp(cfg.out_manifest) == manifest1);
    CHECK(slurp(cfg.ledger) == ledger1);
    CHECK(slurp(cfg.stats_report) == stats1);

    // Interrupted run: keep the header and the first 50 utterances plus a torn line.
    std::istringstream in(ledger1);
    std::string partial, line;
    for (int i = 0; i < 51 && std::getline(in, line); ++i) partial += line + "\n";
    partial += "{\"type\":\"utter";
    write(cfg.ledger, partial);
    pipeline::RunOptions resume;
    resume.resume = true;
    const auto s3 = pipeline::run(cfg, resume);
    CHECK(s3.restored == 50);
    CHECK(slurp(cfg.out_manifest) == manifest1);
    // Only the summary line (which counts restored entries) may differ.
    auto without_summary = [](const std::string& text) { return text.substr(0, text.rfind("{\"type\":\"summary\"")); };
    CHECK(without_summary(slurp(cfg.ledger)) == without_summary(ledger1));
    CHECK(lines(cfg.ledger).back()["counts"]["restored"] == 50);

    const Json stats = Json::parse(stats1);
    CHECK(stats["utterances"].get<std::size_t>() == s1.ok + s1.dropped);
    CHECK(stats["run"]["total"] == 120);

    // The fused manifest scores better than any single system.
    const auto& tables = testenv::tables();
    const double fused = evalmer::score_manifest(dir / "truth.jsonl", cfg.out_manifest, tables).corpus_mer();
    for (const char* s : {"sys1", "sys2", "sys3"}) {
      const double single = evalmer::score_manifest(dir / "truth.jsonl", dir / (std::string("hyp_") + s + ".jsonl"), tables).corpus_mer();
      CHECK(fused < single);
    }
  }

  TEST_CASE("corrector replies are recorded and replayed") {
    const auto dir = testenv::scratch("pipe_replay");
    synth::SynthOptions so;
    so.seed = 9;
    so.n_utts = 12;
    synth::write_synthetic_corpus(dir, so, &testenv::tables());
    auto cfg = config::load_config(dir / "pipeline.conf");
    cfg.corrector = {"python3", (testenv::data_dir() / "mock_corrector.py").string(), "noisy"};
    cfg.workers = 3;
    const auto first = pipeline::run(cfg);
    CHECK(first.corrector_accepted > 0);
    const std::string manifest1 = slurp(cfg.out_manifest);
    CHECK(manifest1.find("啦\"") != std::string::npos);
    const fs::path recorded = dir / "recorded_ledger.jsonl";
    fs::copy_file(cfg.ledger, recorded);
    CHECK(pipeline::read_replies(recorded).size() == first.corrector_accepted + first.corrector_rejected);

    auto replay = cfg;
    replay.corrector.clear();
    replay.replay_ledger = recorded;
    pipeline::run(replay);
    CHECK(slurp(cfg.out_manifest) == manifest1);
    pipeline::run(replay);
    CHECK(slurp(cfg.out_manifest) == manifest1);
  }

  TEST_CASE("audio inputs add bandwidth and sample rate") {
    const auto dir = testenv::scratch("pipe_audio");
    synth::SynthOptions so;
    so.seed = 3;
    so.n_utts = 6;
    so.with_audio = true;
    synth::write_synthetic_corpus(dir, so, &testenv::tables());
    auto cfg = config::load_config(dir / "pipeline.conf");
    const auto s = pipeline::run(cfg);
    CHECK(s.error == 0);
    for (const Json& j : lines(cfg.out_manifest)) {
      CHECK(j["sample_rate"] == 16000);
      REQUIRE(j.contains("effective_bandwidth"));
      CHECK(j["effective_bandwidth"].get<double>() > 1000.0);
      CHECK(j["effective_bandwidth"].get<double>() <= 8000.0);
      CHECK(j.contains("SNR"));
      CHECK(j.contains("speaker_id"));
    }
  }
}

TEST_SUITE("synth") {
  TEST_CASE("zero error rate copies the truth") {
    synth::SynthOptions so;
    so.error_rate = 0.0;
    so.n_utts = 50;
    const auto corpus = synth::make_synthetic_corpus(so, &testenv::tables());
    for (const auto& u : corpus.utterances) {
      const std::string truth = textnorm::detokenize(u.truth);
      for (const std::string& raw : u.system_text) CHECK(evalmer::mer(u.truth, textnorm::tokenize(textnorm::normalize_text(raw, testenv::tables()))).errors() == 0);
      CHECK(textnorm::normalize_text(truth, testenv::tables()) == truth);
    }
    so.surface_noise = false;
    for (const auto& u : synth::make_synthetic_corpus(so).utterances)
      for (const std::string& raw : u.system_text) CHECK(raw == textnorm::detokenize(u.truth));
  }

  TEST_CASE("same seed, same files") {
    const auto a = testenv::scratch("synth_a"), b = testenv::scratch("synth_b");
    synth::SynthOptions so;
    so.n_utts = 40;
    synth::write_synthetic_corpus(a, so, &testenv::tables());
    synth::write_synthetic_corpus(b, so, &testenv::tables());
    for (const char* f : {"truth.jsonl", "utts.jsonl", "hyp_sys1.jsonl", "hyp_sys2.jsonl", "hyp_sys3.jsonl",
                          "quality.jsonl", "speakers.jsonl", "pipeline.conf"})
      CHECK(slurp(a / f) == slurp(b / f));
    so.seed = 2;
    const auto c = testenv::scratch("synth_c");
    synth::write_synthetic_corpus(c, so, &testenv::tables());
    CHECK(slurp(a / "truth.jsonl") != slurp(c / "truth.jsonl"));
  }

  TEST_CASE("per-system error rate sits slightly above the token rate") {
    const auto dir = testenv::scratch("synth_rate");
    synth::SynthOptions so;
    so.seed = 2024;
    so.n_utts = 500;
    synth::write_synthetic_corpus(dir, so, &testenv::tables());
    for (const char* s : {"hyp_sys1.jsonl", "hyp_sys2.jsonl", "hyp_sys3.jsonl"}) {
      const double m = evalmer::score_manifest(dir / "truth.jsonl", dir / s, testenv::tables()).corpus_mer();
      CAPTURE(m);
      CHECK(m >= 9.0);
      CHECK(m <= 13.0);
    }
  }

  TEST_CASE("options are validated") {
    synth::SynthOptions so;
    so.error_rate = 1.0;
    CHECK_THROWS_AS(synth::make_synthetic_corpus(so), std::invalid_argument);
    so.error_rate = -0.1;
    CHECK_THROWS_AS(synth::make_synthetic_corpus(so), std::invalid_argument);
  }
}
