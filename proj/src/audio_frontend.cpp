#include "ctal/audio_frontend.hpp"

#include <cmath>
#include <complex>

#include "ctal/errors.hpp"

namespace ctal {

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

std::vector<double> mel_filter_centers(const FrontendConfig& cfg) {
  const double mel_hi = hz_to_mel(cfg.sample_rate / 2.0);
  std::vector<double> centers(cfg.num_mel);
  for (int m = 0; m < cfg.num_mel; ++m)
    centers[m] = mel_to_hz(mel_hi * (m + 1) / (cfg.num_mel + 1));
  return centers;
}

std::vector<std::vector<float>> frame_signal(const Waveform& w, const FrontendConfig& cfg) {
  if (w.sample_rate <= 0) throw IoError("frame_signal: waveform has no sample rate");
  if (w.samples.empty()) throw IoError("frame_signal: empty waveform");
  const int width = cfg.frame_samples();
  const int step = cfg.step_samples();
  if (static_cast<int>(w.samples.size()) < width)
    throw IoError("waveform too short: " + std::to_string(w.samples.size()) + " samples (" +
                  std::to_string(w.duration_s() * 1000.0) + " ms), need at least " +
                  std::to_string(width) + " samples (" + std::to_string(cfg.frame_ms) + " ms)");
  const size_t count = (w.samples.size() - width) / step + 1;
  std::vector<std::vector<float>> frames(count);
  for (size_t t = 0; t < count; ++t) {
    frames[t].assign(w.samples.begin() + t * step, w.samples.begin() + t * step + width);
  }
  return frames;
}

namespace {

size_t next_pow2(size_t n) {
  size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

// In-place iterative radix-2 FFT; n must be a power of two.
void fft_radix2(std::vector<std::complex<double>>& a) {
  const size_t n = a.size();
  for (size_t i = 1, j = 0; i < n; ++i) {
    size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (size_t len = 2; len <= n; len <<= 1) {
    const double ang = -2.0 * M_PI / static_cast<double>(len);
    const std::complex<double> wl(std::cos(ang), std::sin(ang));
    for (size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (size_t k = 0; k < len / 2; ++k) {
        auto u = a[i + k];
        auto v = a[i + k + len / 2] * w;
        a[i + k] = u + v;
        a[i + k + len / 2] = u - v;
        w *= wl;
      }
    }
  }
}

// Triangular filterbank as a (num_mel x bins) weight matrix over FFT bins.
MatX<double> build_filterbank(const FrontendConfig& cfg, size_t nfft) {
  const size_t bins = nfft / 2 + 1;
  const double mel_hi = hz_to_mel(cfg.sample_rate / 2.0);
  std::vector<double> edges(cfg.num_mel + 2);
  for (int m = 0; m < cfg.num_mel + 2; ++m) edges[m] = mel_to_hz(mel_hi * m / (cfg.num_mel + 1));
  MatX<double> fb = MatX<double>::Zero(cfg.num_mel, static_cast<Index>(bins));
  for (int m = 0; m < cfg.num_mel; ++m) {
    const double lo = edges[m], c = edges[m + 1], hi = edges[m + 2];
    for (size_t b = 0; b < bins; ++b) {
      const double f = static_cast<double>(b) * cfg.sample_rate / static_cast<double>(nfft);
      if (f <= lo || f >= hi) continue;
      fb(m, static_cast<Index>(b)) = f <= c ? (f - lo) / (c - lo) : (hi - f) / (hi - c);
    }
  }
  return fb;
}

}  // namespace

MatX<float> mel_features(const std::vector<std::vector<float>>& frames,
                         const FrontendConfig& cfg) {
  if (frames.empty()) throw IoError("mel_features: no frames");
  const size_t width = frames[0].size();
  const size_t nfft = next_pow2(width);
  const size_t bins = nfft / 2 + 1;

  std::vector<double> window(width);
  for (size_t i = 0; i < width; ++i)
    window[i] = 0.5 - 0.5 * std::cos(2.0 * M_PI * i / static_cast<double>(width));

  const MatX<double> fb = build_filterbank(cfg, nfft);
  MatX<float> out(static_cast<Index>(frames.size()), cfg.num_mel);
  std::vector<std::complex<double>> buf(nfft);
  Eigen::VectorXd power(static_cast<Index>(bins));
  for (size_t t = 0; t < frames.size(); ++t) {
    for (size_t i = 0; i < nfft; ++i)
      buf[i] = i < width ? std::complex<double>(frames[t][i] * window[i], 0.0)
                         : std::complex<double>(0.0, 0.0);
    fft_radix2(buf);
    for (size_t b = 0; b < bins; ++b) power[static_cast<Index>(b)] = std::norm(buf[b]);
    Eigen::VectorXd mel = fb * power;
    for (int m = 0; m < cfg.num_mel; ++m)
      out(static_cast<Index>(t), m) =
          static_cast<float>(std::log(std::max(mel[m], cfg.log_floor)));
  }
  return out;
}

MatX<float> append_deltas(const MatX<float>& mel, int window) {
  const Index t_count = mel.rows(), d = mel.cols();
  if (t_count < 1) throw IoError("append_deltas: empty input");
  MatX<float> out(t_count, 2 * d);
  out.leftCols(d) = mel;
  double denom = 0;
  for (int k = 1; k <= window; ++k) denom += 2.0 * k * k;
  auto clamp_row = [&](Index t) { return std::max<Index>(0, std::min<Index>(t_count - 1, t)); };
  for (Index t = 0; t < t_count; ++t) {
    Eigen::RowVectorXd acc = Eigen::RowVectorXd::Zero(d);
    for (int k = 1; k <= window; ++k)
      acc += k * (mel.row(clamp_row(t + k)) - mel.row(clamp_row(t - k))).cast<double>();
    out.row(t).rightCols(d) = (acc / denom).cast<float>();
  }
  return out;
}

AcousticFeatureSequence extract(const Waveform& w, const FrontendConfig& cfg,
                                const std::string& source) {
  Waveform v = w.sample_rate == cfg.sample_rate ? w : resample_nearest(w, cfg.sample_rate);
  auto frames = frame_signal(v, cfg);
  MatX<float> feats = append_deltas(mel_features(frames, cfg), cfg.delta_window);
  if (cfg.normalize) {
    for (Index c = 0; c < feats.cols(); ++c) {
      const double mu = feats.col(c).cast<double>().mean();
      const double var = (feats.col(c).cast<double>().array() - mu).square().mean();
      if (var <= 0.0) {
        feats.col(c).setZero();
      } else {
        const double inv = 1.0 / std::sqrt(var);
        feats.col(c) = ((feats.col(c).cast<double>().array() - mu) * inv).cast<float>();
      }
    }
  }
  if (!feats.allFinite()) throw NumericError("non-finite value in extracted features");
  AcousticFeatureSequence seq;
  seq.frames = std::move(feats);
  seq.frame_width_ms = cfg.frame_ms;
  seq.frame_step_ms = cfg.step_ms;
  seq.source = source;
  return seq;
}

}  // namespace ctal
