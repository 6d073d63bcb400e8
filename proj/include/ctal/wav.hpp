#pragma once

#include <string>
#include <vector>

namespace ctal {

struct Waveform {
  std::vector<float> samples;  // [-1, 1]
  int sample_rate = 0;

  double duration_s() const {
    return sample_rate > 0 ? static_cast<double>(samples.size()) / sample_rate : 0.0;
  }
};

// 16-bit PCM mono reader/writer. Anything else is rejected with a diagnostic.
Waveform read_wav(const std::string& path);
void write_wav(const std::string& path, const Waveform& w);

// Nearest-kept-integer resampling: out[i] = in[round(i * in_rate / out_rate)].
Waveform resample_nearest(const Waveform& w, int target_rate);

}  // namespace ctal
