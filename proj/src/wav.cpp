#include "ctal/wav.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "ctal/errors.hpp"

namespace ctal {

namespace {

template <typename T>
T read_le(std::ifstream& f, const std::string& path) {
  T v{};
  if (!f.read(reinterpret_cast<char*>(&v), sizeof(T)))
    throw IoError("truncated WAV file: " + path);
  return v;
}

template <typename T>
void write_le(std::ofstream& f, T v) {
  f.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

}  // namespace

Waveform read_wav(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open WAV file: " + path);

  char tag[4];
  if (!f.read(tag, 4) || std::memcmp(tag, "RIFF", 4) != 0)
    throw IoError("not a RIFF file: " + path);
  read_le<uint32_t>(f, path);  // chunk size
  if (!f.read(tag, 4) || std::memcmp(tag, "WAVE", 4) != 0)
    throw IoError("not a WAVE file: " + path);

  uint16_t format = 0, channels = 0, bits = 0;
  uint32_t rate = 0;
  bool have_fmt = false;
  Waveform w;

  while (f.read(tag, 4)) {
    uint32_t size = read_le<uint32_t>(f, path);
    if (std::memcmp(tag, "fmt ", 4) == 0) {
      format = read_le<uint16_t>(f, path);
      channels = read_le<uint16_t>(f, path);
      rate = read_le<uint32_t>(f, path);
      read_le<uint32_t>(f, path);  // byte rate
      read_le<uint16_t>(f, path);  // block align
      bits = read_le<uint16_t>(f, path);
      if (size > 16) f.seekg(size - 16, std::ios::cur);
      have_fmt = true;
    } else if (std::memcmp(tag, "data", 4) == 0) {
      if (!have_fmt) throw IoError("WAV data chunk before fmt chunk: " + path);
      if (format != 1 || bits != 16)
        throw IoError("unsupported WAV encoding in " + path +
                      " (need 16-bit PCM, got format=" + std::to_string(format) +
                      " bits=" + std::to_string(bits) + ")");
      if (channels != 1)
        throw IoError("unsupported channel count in " + path + " (need mono, got " +
                      std::to_string(channels) + ")");
      size_t n = size / 2;
      std::vector<int16_t> raw(n);
      if (!f.read(reinterpret_cast<char*>(raw.data()), n * 2))
        throw IoError("truncated WAV data: " + path);
      w.samples.resize(n);
      for (size_t i = 0; i < n; ++i) w.samples[i] = raw[i] / 32768.0f;
      w.sample_rate = static_cast<int>(rate);
      return w;
    } else {
      f.seekg(size + (size & 1), std::ios::cur);  // chunks are word-aligned
    }
  }
  throw IoError("WAV file has no data chunk: " + path);
}

void write_wav(const std::string& path, const Waveform& w) {
  if (w.sample_rate <= 0) throw IoError("write_wav: sample rate must be positive");
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot create WAV file: " + path);
  const uint32_t data_size = static_cast<uint32_t>(w.samples.size() * 2);
  f.write("RIFF", 4);
  write_le<uint32_t>(f, 36 + data_size);
  f.write("WAVE", 4);
  f.write("fmt ", 4);
  write_le<uint32_t>(f, 16);
  write_le<uint16_t>(f, 1);  // PCM
  write_le<uint16_t>(f, 1);  // mono
  write_le<uint32_t>(f, static_cast<uint32_t>(w.sample_rate));
  write_le<uint32_t>(f, static_cast<uint32_t>(w.sample_rate * 2));
  write_le<uint16_t>(f, 2);
  write_le<uint16_t>(f, 16);
  f.write("data", 4);
  write_le<uint32_t>(f, data_size);
  for (float s : w.samples) {
    float c = std::clamp(s, -1.0f, 1.0f);
    write_le<int16_t>(f, static_cast<int16_t>(std::lround(c * 32767.0f)));
  }
  if (!f) throw IoError("failed writing WAV file: " + path);
}

Waveform resample_nearest(const Waveform& w, int target_rate) {
  if (w.sample_rate == target_rate) return w;
  if (w.sample_rate <= 0 || target_rate <= 0)
    throw IoError("resample: sample rates must be positive");
  Waveform out;
  out.sample_rate = target_rate;
  const size_t n = static_cast<size_t>(
      std::floor(static_cast<double>(w.samples.size()) * target_rate / w.sample_rate));
  out.samples.resize(n);
  const double ratio = static_cast<double>(w.sample_rate) / target_rate;
  for (size_t i = 0; i < n; ++i) {
    size_t j = static_cast<size_t>(std::llround(i * ratio));
    out.samples[i] = w.samples[std::min(j, w.samples.size() - 1)];
  }
  return out;
}

}  // namespace ctal
