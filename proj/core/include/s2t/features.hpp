#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "s2t/common.hpp"

namespace s2t::features {

struct AudioSignal {
  std::vector<double> samples;  // amplitudes in [-1, 1]
  int sample_rate = 16000;
};

// Raised when a signal holds fewer samples than one analysis window.
class SignalTooShort : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

struct FrontendConfig {
  double window_ms = 25.0;
  double hop_ms = 10.0;
  int n_mels = 80;
  double fmin = 0.0;
  double fmax = 0.0;  // <= 0 means Nyquist
  double log_floor = 1e-10;
  bool mean_subtract = false;  // optional per-utterance mean removal

  int window_samples(int sample_rate) const;
  int hop_samples(int sample_rate) const;
  // Smallest power of two >= window_samples.
  int n_fft(int sample_rate) const;
  double upper_edge(int sample_rate) const;
  void validate(int sample_rate) const;
};

// frames x n_mels log-Mel energies, row-major.
struct FeatureMatrix {
  int n_frames = 0;
  int n_mels = 0;
  double hop_ms = 10.0;
  std::vector<float> values;

  FeatureMatrix() = default;
  FeatureMatrix(int frames, int mels, double hop = 10.0)
      : n_frames(frames), n_mels(mels), hop_ms(hop),
        values(static_cast<size_t>(frames) * static_cast<size_t>(mels), 0.0f) {}

  float& at(int t, int m) { return values[static_cast<size_t>(t) * n_mels + m]; }
  float at(int t, int m) const { return values[static_cast<size_t>(t) * n_mels + m]; }
  std::span<const float> row(int t) const {
    return {values.data() + static_cast<size_t>(t) * n_mels, static_cast<size_t>(n_mels)};
  }
  bool operator==(const FeatureMatrix&) const = default;
};

double hz_to_mel(double hz);
double mel_to_hz(double mel);

// Triangular filters with unit peak, rows = filters, columns = FFT bins
// 0..n_fft/2. Row-major n_mels x (n_fft/2 + 1).
std::vector<double> mel_filterbank(int n_mels, int n_fft, int sample_rate, double fmin, double fmax);
// Center frequency in Hz of each filter.
std::vector<double> mel_centers(int n_mels, double fmin, double fmax);

int frame_count(int n_samples, int window_samples, int hop_samples);

FeatureMatrix extract_filterbank(const AudioSignal& signal, const FrontendConfig& cfg);

// Regression deltas over +-window frames with edge replication.
FeatureMatrix compute_deltas(const FeatureMatrix& feats, int window);
// Concatenates per-frame feature vectors; frame counts must match.
FeatureMatrix stack_features(const FeatureMatrix& base, const FeatureMatrix& extra);

// RIFF/WAVE PCM 16-bit mono.
AudioSignal read_wav(const std::filesystem::path& path);
void write_wav(const std::filesystem::path& path, const AudioSignal& signal);

// "FBK1" + u32 n_frames + u32 n_mels + float32 values, all little-endian.
void write_features(const std::filesystem::path& path, const FeatureMatrix& feats);
FeatureMatrix read_features(const std::filesystem::path& path);

}  // namespace s2t::features
