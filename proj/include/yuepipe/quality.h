#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "yuepipe/wav.h"

namespace yuepipe::quality {

inline constexpr std::size_t kFrameSize = 1024;
inline constexpr std::size_t kHopSize = 512;

struct BandwidthEstimate {
  double hz = 0.0;
  /// Segment shorter than one frame (zero-padded) or without any energy.
  bool low_reliability = false;
};

/// Mean power spectrum over Hann-windowed frames (kFrameSize, hop kHopSize),
/// bins 0..kFrameSize/2. Short segments give one zero-padded frame.
std::vector<double> average_power_spectrum(const AudioSegment& audio);

/// Smallest bin frequency at which the cumulative power reaches
/// `energy_fraction` of the total. Throws std::invalid_argument unless
/// 0 < energy_fraction < 1 and the segment is non-empty.
BandwidthEstimate effective_bandwidth(const AudioSegment& audio, double energy_fraction = 0.99);

struct QualityMetrics {
  std::optional<double> snr_db;
  std::optional<double> dnsmos;
};

struct QualitySidecar {
  std::map<std::string, QualityMetrics> entries;
  std::vector<std::string> warnings;
};

/// JSONL lines {"utt_id": ..., "snr": ..., "dnsmos": ...}; later lines win,
/// unknown fields are ignored, a missing file yields an empty map.
QualitySidecar ingest_quality_sidecar(const std::filesystem::path& path);

struct QualityAnnotation {
  std::optional<double> snr_db;
  std::optional<double> dnsmos;
  std::optional<double> effective_bandwidth_hz;  // absent when no audio was analysed
  int sample_rate = 0;
  double duration_s = 0.0;
};

struct GateThresholds {
  double dnsmos_min = 2.5;
  double snr_min = 25.0;
};

/// Generation-ready subset: both metrics present and strictly above threshold.
bool tts_gate(const QualityAnnotation& q, const GateThresholds& thresholds = {});

}  // namespace yuepipe::quality
