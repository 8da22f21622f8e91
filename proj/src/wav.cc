#include "yuepipe/wav.h"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>

namespace yuepipe::quality {

namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

std::uint32_t le32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}
std::uint16_t le16(const unsigned char* p) { return static_cast<std::uint16_t>(p[0] | (p[1] << 8)); }

void put32(std::string& s, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) s.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}
void put16(std::string& s, std::uint16_t v) {
  s.push_back(static_cast<char>(v & 0xFF));
  s.push_back(static_cast<char>(v >> 8));
}

double decode_sample(const unsigned char* p, std::uint16_t format, std::uint16_t bits) {
  if (format == kFormatFloat) {
    if (bits == 32) {
      float f;
      std::uint32_t u = le32(p);
      std::memcpy(&f, &u, 4);
      return f;
    }
    std::uint64_t u = static_cast<std::uint64_t>(le32(p)) | (static_cast<std::uint64_t>(le32(p + 4)) << 32);
    double d;
    std::memcpy(&d, &u, 8);
    return d;
  }
  switch (bits) {
    case 8:
      return (static_cast<int>(p[0]) - 128) / 128.0;
    case 16:
      return static_cast<std::int16_t>(le16(p)) / 32768.0;
    case 24: {
      std::int32_t v = static_cast<std::int32_t>(p[0] | (p[1] << 8) | (p[2] << 16));
      if (v & 0x800000) v -= 0x1000000;
      return v / 8388608.0;
    }
    default:
      return static_cast<std::int32_t>(le32(p)) / 2147483648.0;
  }
}

}  // namespace

AudioSegment parse_wav(const std::string& bytes) {
  const auto* data = reinterpret_cast<const unsigned char*>(bytes.data());
  const std::size_t size = bytes.size();
  if (size < 12 || std::memcmp(data, "RIFF", 4) != 0 || std::memcmp(data + 8, "WAVE", 4) != 0)
    throw WavError("not a RIFF/WAVE file");

  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  const unsigned char* payload = nullptr;
  std::size_t payload_size = 0;

  std::size_t pos = 12;
  while (pos + 8 <= size) {
    const unsigned char* chunk = data + pos;
    const std::uint32_t chunk_size = le32(chunk + 4);
    const std::size_t body = pos + 8;
    const std::size_t available = std::min<std::size_t>(chunk_size, size - body);
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      if (available < 16) throw WavError("fmt chunk too short");
      format = le16(data + body);
      channels = le16(data + body + 2);
      rate = le32(data + body + 4);
      bits = le16(data + body + 14);
      if (format == kFormatExtensible) {
        if (available < 26) throw WavError("extensible fmt chunk too short");
        format = le16(data + body + 24);  // first two bytes of the subformat GUID
      }
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      payload = data + body;
      payload_size = available;
    }
    pos = body + chunk_size + (chunk_size & 1);
  }

  if (channels == 0 || rate == 0) throw WavError("missing or invalid fmt chunk");
  if (!payload) throw WavError("missing data chunk");
  const bool pcm_ok = format == kFormatPcm && (bits == 8 || bits == 16 || bits == 24 || bits == 32);
  const bool float_ok = format == kFormatFloat && (bits == 32 || bits == 64);
  if (!pcm_ok && !float_ok)
    throw WavError("unsupported sample format " + std::to_string(format) + "/" + std::to_string(bits) + " bit");

  const std::size_t width = bits / 8;
  const std::size_t frame = width * channels;
  const std::size_t frames = payload_size / frame;
  AudioSegment audio;
  audio.sample_rate = static_cast<int>(rate);
  audio.samples.resize(frames);
  for (std::size_t f = 0; f < frames; ++f) {
    double sum = 0.0;
    for (std::size_t c = 0; c < channels; ++c) sum += decode_sample(payload + f * frame + c * width, format, bits);
    audio.samples[f] = sum / channels;
  }
  return audio;
}

AudioSegment read_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw WavError("cannot open " + path.string());
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  try {
    return parse_wav(bytes);
  } catch (const WavError& e) {
    throw WavError(path.string() + ": " + e.what());
  }
}

std::string encode_wav(const AudioSegment& audio, WavEncoding encoding) {
  const std::uint16_t bits = encoding == WavEncoding::kPcm16 ? 16 : 32;
  const std::uint16_t format = encoding == WavEncoding::kPcm16 ? kFormatPcm : kFormatFloat;
  const auto data_size = static_cast<std::uint32_t>(audio.samples.size() * (bits / 8));
  std::string out;
  out.reserve(44 + data_size);
  out += "RIFF";
  put32(out, 36 + data_size);
  out += "WAVEfmt ";
  put32(out, 16);
  put16(out, format);
  put16(out, 1);
  put32(out, static_cast<std::uint32_t>(audio.sample_rate));
  put32(out, static_cast<std::uint32_t>(audio.sample_rate) * (bits / 8));
  put16(out, bits / 8);
  put16(out, bits);
  out += "data";
  put32(out, data_size);
  for (double s : audio.samples) {
    if (encoding == WavEncoding::kPcm16) {
      const double clamped = std::clamp(s, -1.0, 32767.0 / 32768.0);
      put16(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(std::lround(clamped * 32768.0))));
    } else {
      const float f = static_cast<float>(s);
      std::uint32_t u;
      std::memcpy(&u, &f, 4);
      put32(out, u);
    }
  }
  return out;
}

void write_wav(const std::filesystem::path& path, const AudioSegment& audio, WavEncoding encoding) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw WavError("cannot write " + path.string());
  const std::string bytes = encode_wav(audio, encoding);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace yuepipe::quality
