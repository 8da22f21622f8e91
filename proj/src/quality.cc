#include "yuepipe/quality.h"

#include <fftw3.h>

#include <cmath>
#include <memory>
#include <mutex>
#include <numbers>
#include <stdexcept>

#include "yuepipe/jsonl.h"

namespace yuepipe::quality {

namespace {

struct FftwFree {
  void operator()(void* p) const { fftw_free(p); }
};

// fftw planning is not thread-safe; executing an existing plan on new arrays is.
fftw_plan frame_plan() {
  static std::once_flag once;
  static fftw_plan plan = nullptr;
  std::call_once(once, [] {
    std::unique_ptr<double, FftwFree> in(fftw_alloc_real(kFrameSize));
    std::unique_ptr<fftw_complex, FftwFree> out(fftw_alloc_complex(kFrameSize / 2 + 1));
    plan = fftw_plan_dft_r2c_1d(static_cast<int>(kFrameSize), in.get(), out.get(), FFTW_ESTIMATE);
  });
  return plan;
}

const std::vector<double>& hann_window() {
  static const std::vector<double> window = [] {
    std::vector<double> w(kFrameSize);
    for (std::size_t n = 0; n < kFrameSize; ++n)
      w[n] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(n) / kFrameSize);
    return w;
  }();
  return window;
}

std::optional<double> number_field(const Json& j, const char* key) {
  const auto it = j.find(key);
  if (it == j.end() || !it->is_number()) return std::nullopt;
  const double v = it->get<double>();
  return std::isfinite(v) ? std::optional<double>(v) : std::nullopt;
}

}  // namespace

std::vector<double> average_power_spectrum(const AudioSegment& audio) {
  const std::size_t bins = kFrameSize / 2 + 1;
  std::vector<double> power(bins, 0.0);
  if (audio.samples.empty()) return power;

  std::unique_ptr<double, FftwFree> frame(fftw_alloc_real(kFrameSize));
  std::unique_ptr<fftw_complex, FftwFree> spectrum(fftw_alloc_complex(bins));
  const fftw_plan plan = frame_plan();
  const auto& window = hann_window();

  const std::size_t n = audio.samples.size();
  const std::size_t frames = n < kFrameSize ? 1 : 1 + (n - kFrameSize) / kHopSize;
  for (std::size_t f = 0; f < frames; ++f) {
    const std::size_t start = f * kHopSize;
    for (std::size_t i = 0; i < kFrameSize; ++i) {
      const std::size_t at = start + i;
      frame.get()[i] = at < n ? audio.samples[at] * window[i] : 0.0;
    }
    fftw_execute_dft_r2c(plan, frame.get(), spectrum.get());
    for (std::size_t k = 0; k < bins; ++k) {
      const double re = spectrum.get()[k][0];
      const double im = spectrum.get()[k][1];
      power[k] += re * re + im * im;
    }
  }
  for (double& p : power) p /= static_cast<double>(frames);
  return power;
}

BandwidthEstimate effective_bandwidth(const AudioSegment& audio, double energy_fraction) {
  if (!(energy_fraction > 0.0 && energy_fraction < 1.0))
    throw std::invalid_argument("energy fraction must be in (0, 1)");
  if (audio.samples.empty() || audio.sample_rate <= 0) throw std::invalid_argument("empty audio segment");

  BandwidthEstimate est;
  est.low_reliability = audio.samples.size() < kFrameSize;
  const std::vector<double> power = average_power_spectrum(audio);
  double total = 0.0;
  for (double p : power) total += p;
  if (!(total > 0.0)) {
    est.low_reliability = true;
    return est;
  }
  const double target = energy_fraction * total;
  const double bin_hz = static_cast<double>(audio.sample_rate) / kFrameSize;
  double cumulative = 0.0;
  for (std::size_t k = 0; k < power.size(); ++k) {
    cumulative += power[k];
    if (cumulative >= target) {
      est.hz = static_cast<double>(k) * bin_hz;
      return est;
    }
  }
  est.hz = static_cast<double>(power.size() - 1) * bin_hz;
  return est;
}

QualitySidecar ingest_quality_sidecar(const std::filesystem::path& path) {
  QualitySidecar sidecar;
  read_jsonl(
      path,
      [&](std::size_t number, const Json& j) {
        const auto id = j.find("utt_id");
        if (id == j.end() || !id->is_string() || id->get<std::string>().empty())
          throw std::runtime_error("missing utt_id, line skipped");
        QualityMetrics m;
        m.snr_db = number_field(j, "snr");
        m.dnsmos = number_field(j, "dnsmos");
        if (m.dnsmos && (*m.dnsmos < 1.0 || *m.dnsmos > 5.0)) {
          sidecar.warnings.push_back(path.filename().string() + ":" + std::to_string(number) +
                                     ": dnsmos outside [1, 5] ignored");
          m.dnsmos.reset();
        }
        if (!m.snr_db && !m.dnsmos) throw std::runtime_error("no snr or dnsmos value, line skipped");
        sidecar.entries[id->get<std::string>()] = m;
      },
      sidecar.warnings);
  return sidecar;
}

bool tts_gate(const QualityAnnotation& q, const GateThresholds& thresholds) {
  return q.dnsmos && q.snr_db && *q.dnsmos > thresholds.dnsmos_min && *q.snr_db > thresholds.snr_min;
}

}  // namespace yuepipe::quality
