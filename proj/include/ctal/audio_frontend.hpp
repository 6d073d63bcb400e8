#pragma once

#include <string>
#include <vector>

#include "ctal/tensor.hpp"
#include "ctal/wav.hpp"

namespace ctal {

struct FrontendConfig {
  int sample_rate = 16000;
  double frame_ms = 50.0;
  double step_ms = 12.5;
  int num_mel = 80;
  double log_floor = 1e-10;
  int delta_window = 2;
  bool normalize = true;  // per-utterance mean/variance over time

  int frame_samples() const { return static_cast<int>(std::lround(frame_ms * sample_rate / 1000.0)); }
  int step_samples() const { return static_cast<int>(std::lround(step_ms * sample_rate / 1000.0)); }
  int feature_dim() const { return 2 * num_mel; }
};

// Frame-level surface features: log-Mel energies in columns [0, num_mel) and
// their first-order deltas in [num_mel, 2*num_mel).
struct AcousticFeatureSequence {
  MatX<float> frames;  // T x 160
  double frame_width_ms = 50.0;
  double frame_step_ms = 12.5;
  std::string source;

  Index num_frames() const { return frames.rows(); }
  Index dim() const { return frames.cols(); }
};

// Slice a waveform into fixed-width frames; no padding, so the signal must
// cover at least one full frame.
std::vector<std::vector<float>> frame_signal(const Waveform& w, const FrontendConfig& cfg);

// Hann window + power FFT + triangular Mel filterbank + floored log.
MatX<float> mel_features(const std::vector<std::vector<float>>& frames,
                         const FrontendConfig& cfg);

// Regression deltas (window K) with edge replication, appended column-wise.
MatX<float> append_deltas(const MatX<float>& mel, int window);

AcousticFeatureSequence extract(const Waveform& w, const FrontendConfig& cfg,
                                const std::string& source = "");

// Mel scale helpers (HTK formula), shared with the tests' filterbank oracle.
double hz_to_mel(double hz);
double mel_to_hz(double mel);

// Center frequencies (Hz) of the triangular filters spanning 0..Nyquist.
std::vector<double> mel_filter_centers(const FrontendConfig& cfg);

}  // namespace ctal
