#include <doctest.h>

#include <cmath>
#include <fstream>
#include <numbers>
#include <random>

#include "../common/oracles.h"
#include "helpers.h"
#include "yuepipe/quality.h"
#include "yuepipe/wav.h"

using namespace yuepipe::quality;

namespace {

AudioSegment tone(double hz, double seconds = 1.0, double amp = 0.5, int rate = 16000) {
  AudioSegment a;
  a.sample_rate = rate;
  a.samples.resize(static_cast<std::size_t>(seconds * rate));
  for (std::size_t n = 0; n < a.samples.size(); ++n)
    a.samples[n] = amp * std::sin(2.0 * std::numbers::pi * hz * static_cast<double>(n) / rate);
  return a;
}

AudioSegment noise(std::uint64_t seed, double seconds = 2.0, int rate = 16000) {
  std::mt19937_64 rng(seed);
  AudioSegment a;
  a.sample_rate = rate;
  a.samples.resize(static_cast<std::size_t>(seconds * rate));
  for (double& s : a.samples) s = static_cast<double>(rng() >> 11) * 0x1.0p-52 - 1.0;
  return a;
}

constexpr double kBin = 16000.0 / 1024.0;

}  // namespace

TEST_SUITE("quality") {
  TEST_CASE("spectrum matches a direct DFT") {
    AudioSegment a = noise(4, 0.2);
    for (std::size_t i = 0; i < a.samples.size(); ++i) a.samples[i] += tone(3000.0, 0.2).samples[i];
    const auto fast = average_power_spectrum(a);
    const auto slow = oracle::dft_power(a.samples);
    REQUIRE(fast.size() == slow.size());
    double peak = 0.0;
    for (double v : slow) peak = std::max(peak, v);
    for (std::size_t k = 0; k < fast.size(); ++k) CHECK(std::abs(fast[k] - slow[k]) <= 1e-9 * peak);
    const auto bw = effective_bandwidth(a, 0.99);
    CHECK(bw.hz == doctest::Approx(oracle::rolloff_bin(slow, 0.99) * kBin).epsilon(1e-12));
  }

  TEST_CASE("single tones land within a bin of their frequency") {
    for (double f : {1000.0, 2500.0, 4000.0, 7500.0}) {
      CAPTURE(f);
      const auto bw = effective_bandwidth(tone(f));
      CHECK(std::abs(bw.hz - f) <= kBin + 1e-9);
      CHECK_FALSE(bw.low_reliability);
    }
  }

  TEST_CASE("two equal tones report the upper one") {
    AudioSegment a = tone(1000.0);
    const AudioSegment b = tone(4000.0);
    for (std::size_t i = 0; i < a.samples.size(); ++i) a.samples[i] += b.samples[i];
    CHECK(std::abs(effective_bandwidth(a).hz - 4000.0) <= kBin + 1e-9);
  }

  TEST_CASE("white noise rolloff tracks the energy fraction") {
    const auto bw = effective_bandwidth(noise(9));
    CHECK(std::abs(bw.hz - 0.99 * 8000.0) <= 2 * kBin);
    const auto half = effective_bandwidth(noise(9, 20.0), 0.5);
    CHECK(std::abs(half.hz - 0.5 * 8000.0) <= 2 * kBin);
  }

  TEST_CASE("monotone in the energy fraction") {
    std::mt19937_64 rng(2);
    for (int i = 0; i < 20; ++i) {
      AudioSegment a = noise(rng(), 0.3);
      const AudioSegment t = tone(200.0 + 7000.0 * (rng() % 1000) / 1000.0, 0.3, 3.0);
      for (std::size_t k = 0; k < a.samples.size(); ++k) a.samples[k] = 0.1 * a.samples[k] + t.samples[k];
      double last = 0.0;
      for (double f : {0.5, 0.8, 0.9, 0.95, 0.99, 0.999}) {
        const double hz = effective_bandwidth(a, f).hz;
        CHECK(hz >= last);
        last = hz;
      }
    }
  }

  TEST_CASE("amplitude scaling leaves the estimate unchanged") {
    AudioSegment base = noise(12, 0.5);
    const AudioSegment t = tone(3100.0, 0.5);
    for (std::size_t k = 0; k < base.samples.size(); ++k) base.samples[k] = 0.05 * base.samples[k] + t.samples[k];
    const double ref = effective_bandwidth(base).hz;
    for (double s : {0.001, 0.3, 0.5, 2.0, 7.0, 1000.0}) {
      AudioSegment scaled = base;
      for (double& v : scaled.samples) v *= s;
      CHECK(effective_bandwidth(scaled).hz == ref);
    }
  }

  TEST_CASE("short, silent and invalid segments") {
    const auto shortseg = effective_bandwidth(tone(1000.0, 0.03));
    CHECK(shortseg.low_reliability);
    // A truncated window smears the tone upwards, never below it.
    CHECK(shortseg.hz >= 1000.0 - kBin);
    CHECK(shortseg.hz <= 1500.0);
    AudioSegment silent;
    silent.sample_rate = 16000;
    silent.samples.assign(4000, 0.0);
    const auto s = effective_bandwidth(silent);
    CHECK(s.hz == 0.0);
    CHECK(s.low_reliability);
    CHECK_THROWS_AS(effective_bandwidth(AudioSegment{}), std::invalid_argument);
    CHECK_THROWS_AS(effective_bandwidth(tone(100.0), 1.0), std::invalid_argument);
    CHECK_THROWS_AS(effective_bandwidth(tone(100.0), 0.0), std::invalid_argument);
  }

  TEST_CASE("result never exceeds Nyquist") {
    AudioSegment a = tone(7990.0, 0.5, 0.9, 16000);
    CHECK(effective_bandwidth(a).hz <= 8000.0);
    AudioSegment low = tone(3000.0, 0.5, 0.9, 8000);
    const double hz = effective_bandwidth(low).hz;
    CHECK(hz <= 4000.0);
    CHECK(std::abs(hz - 3000.0) <= 8000.0 / 1024.0 + 1e-9);
  }

  TEST_CASE("wav round trip") {
    const auto dir = testenv::scratch("wav");
    AudioSegment a = tone(440.0, 0.1, 0.8);
    write_wav(dir / "a16.wav", a, WavEncoding::kPcm16);
    write_wav(dir / "af.wav", a, WavEncoding::kFloat32);
    const AudioSegment b = read_wav(dir / "a16.wav");
    const AudioSegment c = read_wav(dir / "af.wav");
    REQUIRE(b.samples.size() == a.samples.size());
    CHECK(b.sample_rate == 16000);
    for (std::size_t i = 0; i < a.samples.size(); ++i) {
      CHECK(std::abs(b.samples[i] - a.samples[i]) <= 1.0 / 32768.0);
      CHECK(std::abs(c.samples[i] - a.samples[i]) <= 1e-7);
    }
    CHECK(b.duration_s() == doctest::Approx(0.1));
  }

  TEST_CASE("stereo is averaged, junk is rejected") {
    // Hand-built 16-bit stereo file with two frames.
    auto le16 = [](std::string& s, int v) {
      s.push_back(static_cast<char>(v & 0xFF));
      s.push_back(static_cast<char>((v >> 8) & 0xFF));
    };
    auto le32 = [](std::string& s, std::uint32_t v) {
      for (int i = 0; i < 4; ++i) s.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
    };
    std::string data;
    le16(data, 16384);
    le16(data, 0);
    le16(data, -16384);
    le16(data, -16384);
    std::string wav = "RIFF";
    le32(wav, 36 + static_cast<std::uint32_t>(data.size()));
    wav += "WAVEfmt ";
    le32(wav, 16);
    le16(wav, 1);
    le16(wav, 2);
    le32(wav, 8000);
    le32(wav, 8000 * 4);
    le16(wav, 4);
    le16(wav, 16);
    wav += "data";
    le32(wav, static_cast<std::uint32_t>(data.size()));
    wav += data;
    const AudioSegment a = parse_wav(wav);
    REQUIRE(a.samples.size() == 2);
    CHECK(a.samples[0] == doctest::Approx(0.25));
    CHECK(a.samples[1] == doctest::Approx(-0.5));
    CHECK(a.sample_rate == 8000);
    CHECK_THROWS_AS(parse_wav("RIFF"), WavError);
    CHECK_THROWS_AS(parse_wav(std::string(64, 'x')), WavError);
    CHECK_THROWS_AS(read_wav("/nonexistent.wav"), WavError);
  }

  TEST_CASE("tts gate") {
    auto q = [](std::optional<double> snr, std::optional<double> mos) {
      QualityAnnotation a;
      a.snr_db = snr;
      a.dnsmos = mos;
      return tts_gate(a);
    };
    CHECK(q(30, 3.0));
    CHECK_FALSE(q(25, 3.0));
    CHECK_FALSE(q(30, 2.5));
    CHECK_FALSE(q(24.9, 4.0));
    CHECK_FALSE(q(40, std::nullopt));
    CHECK_FALSE(q(std::nullopt, 4.0));
  }

  TEST_CASE("tts gate is monotone in its thresholds") {
    std::mt19937_64 rng(8);
    for (int i = 0; i < 2000; ++i) {
      QualityAnnotation a;
      a.snr_db = static_cast<double>(rng() % 600) / 10.0 - 5.0;
      a.dnsmos = 1.0 + static_cast<double>(rng() % 400) / 100.0;
      const GateThresholds lo{1.0 + static_cast<double>(rng() % 400) / 100.0, static_cast<double>(rng() % 500) / 10.0};
      const GateThresholds hi{lo.dnsmos_min + static_cast<double>(rng() % 100) / 100.0,
                              lo.snr_min + static_cast<double>(rng() % 100) / 10.0};
      if (!tts_gate(a, lo)) CHECK_FALSE(tts_gate(a, hi));
    }
  }

  TEST_CASE("quality sidecar") {
    const auto dir = testenv::scratch("qsidecar");
    {
      std::ofstream out(dir / "q.jsonl");
      out << R"({"utt_id":"u1","snr":30.2,"dnsmos":3.1,"extra":1})" << '\n'
          << R"({"utt_id":"u2"})" << '\n'
          << "not json\n"
          << R"({"utt_id":"u3","snr":10})" << '\n'
          << R"({"utt_id":"u3","snr":20,"dnsmos":7})" << '\n';
    }
    const QualitySidecar s = ingest_quality_sidecar(dir / "q.jsonl");
    CHECK(s.entries.at("u1").snr_db == 30.2);
    CHECK(s.entries.at("u1").dnsmos == 3.1);
    CHECK_FALSE(s.entries.count("u2"));
    CHECK(s.entries.at("u3").snr_db == 20.0);
    CHECK_FALSE(s.entries.at("u3").dnsmos.has_value());
    CHECK(s.warnings.size() >= 3);
    bool numbered = false;
    for (const auto& w : s.warnings) numbered = numbered || w.find("q.jsonl:3:") != std::string::npos;
    CHECK(numbered);
    CHECK(ingest_quality_sidecar(dir / "absent.jsonl").entries.empty());
  }
}
