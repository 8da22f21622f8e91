#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

namespace yuepipe::quality {

/// Mono audio, samples nominally in [-1, 1].
struct AudioSegment {
  std::vector<double> samples;
  int sample_rate = 0;

  double duration_s() const noexcept {
    return sample_rate > 0 ? static_cast<double>(samples.size()) / sample_rate : 0.0;
  }
};

class WavError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Reads RIFF/WAVE with integer PCM (8/16/24/32-bit) or IEEE float (32/64-bit)
/// samples, including WAVE_FORMAT_EXTENSIBLE. Multi-channel audio is
/// downmixed by averaging channels.
AudioSegment read_wav(const std::filesystem::path& path);
AudioSegment parse_wav(const std::string& bytes);

enum class WavEncoding { kPcm16, kFloat32 };

std::string encode_wav(const AudioSegment& audio, WavEncoding encoding = WavEncoding::kPcm16);
void write_wav(const std::filesystem::path& path, const AudioSegment& audio,
               WavEncoding encoding = WavEncoding::kPcm16);

}  // namespace yuepipe::quality
