#include "yuepipe/synth.h"

#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <stdexcept>

#include "yuepipe/jsonl.h"
#include "yuepipe/unicode.h"
#include "yuepipe/wav.h"

namespace yuepipe::synth {

namespace {

constexpr std::string_view kCharacters =
    "我你佢哋系嘅咗唔冇喺嚟去食饭饮茶好多少大细人时间今日听朝晚上落雨天气呢度嗰啲点样做乜嘢钱买卖屋企返工学校"
    "老师朋友街市场车站地铁巴士飞机香港广州深圳澳门中国话讲声音电视新闻节目故事影乐歌唱跳舞睇书写字开心伤难过"
    "觉得知道钟意想要可以应该已经仲未再成有候一二三四五六七八九十百千万年月号星期早晏夜头尾前后左右下里面外边"
    "东西南北水火山海花草树猫狗鸡鱼牛猪菜汤包蛋糕咖啡奶";

constexpr const char* kLatinWords[] = {"OK",      "iPhone", "app",    "email", "meeting", "project", "deadline",
                                       "WiFi",    "YouTube", "video", "online", "check",  "sorry",   "cute",
                                       "Facebook", "taxi",   "bus",   "party", "style",  "fans"};

constexpr std::string_view kDomains[] = {"Storytelling", "Entertainment", "Drama",   "Culture", "Vlog",
                                         "Commentary",   "Education",     "Podcast", "News",    "Others"};

double unit(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }
std::size_t pick(std::mt19937_64& rng, std::size_t n) { return static_cast<std::size_t>(rng() % n); }

const textnorm::Token& random_token(std::mt19937_64& rng, const std::vector<textnorm::Token>& vocab) {
  return vocab[pick(rng, vocab.size())];
}

std::string surface_text(const std::vector<textnorm::Token>& tokens, std::size_t system, std::mt19937_64& rng,
                         const std::vector<std::pair<char32_t, char32_t>>& simp_to_trad, bool noise) {
  if (!noise) return textnorm::detokenize(tokens);
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const textnorm::Token& t = tokens[i];
    if (i > 0 && (t.kind == textnorm::TokenKind::kLatinWord || tokens[i - 1].kind == textnorm::TokenKind::kLatinWord)) {
      // One system glues Latin words to neighbouring CJK; two Latin words always need the space.
      const bool both_latin = t.kind == tokens[i - 1].kind;
      out += (system == 2 && !both_latin && unit(rng) < 0.5) ? "" : " ";
    }
    if (t.kind == textnorm::TokenKind::kLatinWord) {
      out += system == 1 ? unicode::ascii_lower(t.surface) : t.surface;
    } else {
      std::string s = t.surface;
      if (system == 1 && !simp_to_trad.empty()) {
        const char32_t cp = unicode::decode_utf8(s)[0];
        for (const auto& [simp, trad] : simp_to_trad)
          if (simp == cp) {
            s.clear();
            unicode::append_utf8(s, trad);
            break;
          }
      }
      out += s;
    }
    if (unit(rng) < 0.04) out += system == 0 ? "，" : ", ";
  }
  out += system == 2 ? "." : "。";
  return out;
}

}  // namespace

void SynthOptions::validate() const {
  if (!(error_rate >= 0.0 && error_rate < 1.0)) throw std::invalid_argument("error rate must be in [0, 1)");
  if (n_systems == 0) throw std::invalid_argument("need at least one system");
  if (min_tokens == 0 || min_tokens > max_tokens) throw std::invalid_argument("bad utterance length range");
  if (!(latin_rate >= 0.0 && latin_rate <= 1.0)) throw std::invalid_argument("latin rate must be in [0, 1]");
}

const std::vector<textnorm::Token>& vocabulary() {
  static const std::vector<textnorm::Token> vocab = [] {
    std::vector<textnorm::Token> v;
    for (char32_t cp : unicode::decode_utf8(kCharacters)) {
      textnorm::Token t{textnorm::TokenKind::kCjkChar, {}};
      unicode::append_utf8(t.surface, cp);
      v.push_back(std::move(t));
    }
    for (const char* w : kLatinWords) v.push_back({textnorm::TokenKind::kLatinWord, w});
    return v;
  }();
  return vocab;
}

std::vector<textnorm::Token> corrupt(const std::vector<textnorm::Token>& truth, double rate, std::mt19937_64& rng,
                                     const std::vector<textnorm::Token>& vocab) {
  std::vector<textnorm::Token> out;
  out.reserve(truth.size() + truth.size() / 4);
  for (const textnorm::Token& t : truth) {
    if (unit(rng) >= rate) {
      out.push_back(t);
      continue;
    }
    switch (pick(rng, 3)) {
      case 0: {  // substitution with a different word
        const textnorm::Token* r = &random_token(rng, vocab);
        while (textnorm::same_word(*r, t)) r = &random_token(rng, vocab);
        out.push_back(*r);
        break;
      }
      case 1:  // deletion
        break;
      default:  // insertion after the kept token
        out.push_back(t);
        out.push_back(random_token(rng, vocab));
        break;
    }
  }
  return out;
}

SynthCorpus make_synthetic_corpus(const SynthOptions& options, const textnorm::NormalizationTables* tables) {
  options.validate();
  std::mt19937_64 rng(options.seed);
  const auto& vocab = vocabulary();
  std::size_t cjk_count = 0;
  while (cjk_count < vocab.size() && vocab[cjk_count].kind == textnorm::TokenKind::kCjkChar) ++cjk_count;
  const std::vector<textnorm::Token> cjk(vocab.begin(), vocab.begin() + static_cast<std::ptrdiff_t>(cjk_count));
  const std::vector<textnorm::Token> latin(vocab.begin() + static_cast<std::ptrdiff_t>(cjk_count), vocab.end());

  // Traditional forms for the vocabulary, sorted by simplified codepoint.
  std::vector<std::pair<char32_t, char32_t>> simp_to_trad;
  if (tables) {
    std::map<char32_t, char32_t> reverse;
    for (const auto& [trad, simp] : tables->trad_to_simp) {
      auto [it, inserted] = reverse.emplace(simp, trad);
      if (!inserted && trad < it->second) it->second = trad;
    }
    simp_to_trad.assign(reverse.begin(), reverse.end());
  }

  SynthCorpus corpus;
  for (std::size_t s = 0; s < options.n_systems; ++s) corpus.system_ids.push_back("sys" + std::to_string(s + 1));

  for (std::size_t u = 0; u < options.n_utts; ++u) {
    SynthUtterance utt;
    char id[32];
    std::snprintf(id, sizeof id, "syn%03zu_%05zu", u / 10, u);
    utt.utt_id = id;
    const std::size_t len = options.min_tokens + pick(rng, options.max_tokens - options.min_tokens + 1);
    for (std::size_t i = 0; i < len; ++i)
      utt.truth.push_back(unit(rng) < options.latin_rate ? random_token(rng, latin) : random_token(rng, cjk));
    for (std::size_t s = 0; s < options.n_systems; ++s) {
      const auto corrupted = corrupt(utt.truth, options.error_rate, rng, vocab);
      utt.system_text.push_back(surface_text(corrupted, s, rng, simp_to_trad, options.surface_noise));
    }
    utt.duration_s = std::round((0.5 + 0.22 * static_cast<double>(len)) * 1000.0) / 1000.0;
    utt.domain = std::string(kDomains[pick(rng, std::size(kDomains))]);
    utt.tags.push_back(utt.duration_s < 5.0 ? "short" : "long");
    corpus.utterances.push_back(std::move(utt));
  }
  return corpus;
}

void write_synthetic_corpus(const std::filesystem::path& dir, const SynthOptions& options,
                            const textnorm::NormalizationTables* tables) {
  const SynthCorpus corpus = make_synthetic_corpus(options, tables);
  std::filesystem::create_directories(dir);
  auto open = [&](const std::string& name) {
    std::ofstream out(dir / name, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + (dir / name).string());
    return out;
  };

  // Side channels use their own stream so that they do not perturb the text.
  std::mt19937_64 rng(options.seed ^ 0x9E3779B97F4A7C15ULL);
  constexpr const char* kGenders[] = {"male", "female"};
  constexpr const char* kAges[] = {"Child", "Youth", "Middle_age", "Elderly"};

  auto truth = open("truth.jsonl");
  auto utts = open("utts.jsonl");
  auto quality = open("quality.jsonl");
  auto speakers = open("speakers.jsonl");
  std::vector<std::ofstream> hyps;
  for (const std::string& sys : corpus.system_ids) hyps.push_back(open("hyp_" + sys + ".jsonl"));
  if (options.with_audio) std::filesystem::create_directories(dir / "audio");

  for (const SynthUtterance& u : corpus.utterances) {
    Json t = {{"utt_id", u.utt_id}, {"text", textnorm::detokenize(u.truth)}, {"tags", u.tags}};
    truth << t.dump() << '\n';

    Json meta = {{"program", "synthetic"}, {"region", "HK"}, {"link", ""}, {"domain", u.domain}};
    Json line = {{"utt_id", u.utt_id}, {"meta_info", meta}};
    if (options.with_audio) {
      // Band-limited noise: random partials below a per-utterance cutoff.
      constexpr int kRate = 16000;
      const double cutoffs[] = {3800.0, 5500.0, 7600.0};
      const double cutoff = cutoffs[pick(rng, 3)];
      quality::AudioSegment audio;
      audio.sample_rate = kRate;
      audio.samples.assign(static_cast<std::size_t>(u.duration_s * kRate), 0.0);
      for (int p = 0; p < 12; ++p) {
        const double f = 100.0 + unit(rng) * (cutoff - 100.0);
        const double phase = unit(rng) * 2.0 * std::numbers::pi;
        for (std::size_t n = 0; n < audio.samples.size(); ++n)
          audio.samples[n] += 0.05 * std::sin(2.0 * std::numbers::pi * f * static_cast<double>(n) / kRate + phase);
      }
      const std::string rel = "audio/" + u.utt_id + ".wav";
      quality::write_wav(dir / rel, audio);
      line["audio"] = rel;
    } else {
      line["duration"] = u.duration_s;
      line["sample_rate"] = 16000;
    }
    utts << line.dump() << '\n';

    const double snr = std::round((5.0 + 40.0 * unit(rng)) * 10.0) / 10.0;
    const double dnsmos = std::round((2.0 + 2.4 * unit(rng)) * 100.0) / 100.0;
    quality << Json({{"utt_id", u.utt_id}, {"snr", snr}, {"dnsmos", dnsmos}}).dump() << '\n';
    speakers << Json({{"utt_id", u.utt_id},
                      {"speaker", "S" + std::to_string(pick(rng, 4))},
                      {"gender", kGenders[pick(rng, 2)]},
                      {"age", kAges[pick(rng, 4)]}})
                    .dump()
             << '\n';
    for (std::size_t s = 0; s < hyps.size(); ++s)
      hyps[s] << Json({{"utt_id", u.utt_id}, {"text", u.system_text[s]}}).dump() << '\n';
  }

  auto conf = open("pipeline.conf");
  conf << "# synthetic corpus, seed " << options.seed << "\n";
  conf << "utterances = utts.jsonl\n";
  for (const std::string& sys : corpus.system_ids) conf << "system." << sys << " = hyp_" << sys << ".jsonl\n";
  conf << "quality_sidecar = quality.jsonl\n";
  conf << "speaker_sidecar = speakers.jsonl\n";
  conf << "out_manifest = out/manifest.jsonl\n";
  conf << "stats_report = out/stats.json\n";
  conf << "ledger = out/ledger.jsonl\n";
  conf << "seed = " << options.seed << "\n";
}

}  // namespace yuepipe::synth
