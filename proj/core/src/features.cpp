#include "s2t/features.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <memory>
#include <mutex>
#include <numbers>

#include "s2t/binary_io.hpp"

namespace s2t::features {

namespace {

// fftw planner calls are not thread-safe; execution on distinct plans is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

struct FftwPlan {
  fftw_plan plan = nullptr;
  ~FftwPlan() {
    if (plan) {
      std::lock_guard lock(planner_mutex());
      fftw_destroy_plan(plan);
    }
  }
};

struct FftwFree {
  void operator()(void* p) const { fftw_free(p); }
};

}  // namespace

int FrontendConfig::window_samples(int sample_rate) const {
  return static_cast<int>(std::lround(sample_rate * window_ms / 1000.0));
}

int FrontendConfig::hop_samples(int sample_rate) const {
  return static_cast<int>(std::lround(sample_rate * hop_ms / 1000.0));
}

int FrontendConfig::n_fft(int sample_rate) const {
  int n = 1;
  while (n < window_samples(sample_rate)) n <<= 1;
  return n;
}

double FrontendConfig::upper_edge(int sample_rate) const {
  return fmax > 0.0 ? fmax : sample_rate / 2.0;
}

void FrontendConfig::validate(int sample_rate) const {
  if (sample_rate <= 0) throw InvalidArgument("sample_rate must be positive");
  if (n_mels < 1) throw InvalidArgument("n_mels must be >= 1");
  if (hop_ms <= 0 || window_ms <= 0 || hop_ms > window_ms) {
    throw InvalidArgument("frontend requires 0 < hop_ms <= window_ms");
  }
  if (hop_samples(sample_rate) < 1) throw InvalidArgument("hop shorter than one sample");
  double hi = upper_edge(sample_rate);
  if (!(fmin >= 0.0 && fmin < hi && hi <= sample_rate / 2.0)) {
    throw InvalidArgument("frontend requires 0 <= fmin < fmax <= sample_rate/2");
  }
  if (!(log_floor > 0.0)) throw InvalidArgument("log_floor must be positive");
}

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

namespace {

std::vector<double> mel_edges(int n_mels, double fmin, double fmax) {
  double lo = hz_to_mel(fmin);
  double hi = hz_to_mel(fmax);
  std::vector<double> edges(static_cast<size_t>(n_mels) + 2);
  for (int i = 0; i < n_mels + 2; ++i) {
    edges[i] = mel_to_hz(lo + (hi - lo) * i / (n_mels + 1));
  }
  return edges;
}

}  // namespace

std::vector<double> mel_centers(int n_mels, double fmin, double fmax) {
  auto edges = mel_edges(n_mels, fmin, fmax);
  return {edges.begin() + 1, edges.end() - 1};
}

std::vector<double> mel_filterbank(int n_mels, int n_fft, int sample_rate, double fmin,
                                   double fmax) {
  const int n_bins = n_fft / 2 + 1;
  auto edges = mel_edges(n_mels, fmin, fmax);
  std::vector<double> bank(static_cast<size_t>(n_mels) * n_bins, 0.0);
  for (int m = 0; m < n_mels; ++m) {
    double left = edges[m], center = edges[m + 1], right = edges[m + 2];
    for (int k = 0; k < n_bins; ++k) {
      double f = static_cast<double>(k) * sample_rate / n_fft;
      double w = 0.0;
      if (f > left && f <= center) {
        w = (f - left) / (center - left);
      } else if (f > center && f < right) {
        w = (right - f) / (right - center);
      }
      bank[static_cast<size_t>(m) * n_bins + k] = w;
    }
  }
  return bank;
}

int frame_count(int n_samples, int window_samples, int hop_samples) {
  if (n_samples < window_samples) return 0;
  return (n_samples - window_samples) / hop_samples + 1;
}

FeatureMatrix extract_filterbank(const AudioSignal& signal, const FrontendConfig& cfg) {
  cfg.validate(signal.sample_rate);
  const int sr = signal.sample_rate;
  const int win = cfg.window_samples(sr);
  const int hop = cfg.hop_samples(sr);
  const int n_fft = cfg.n_fft(sr);
  const int n_bins = n_fft / 2 + 1;
  const int n = static_cast<int>(signal.samples.size());
  if (n < win) {
    throw SignalTooShort("signal has " + std::to_string(n) + " samples, window needs " +
                         std::to_string(win));
  }
  for (double s : signal.samples) {
    if (!std::isfinite(s)) throw InvalidArgument("signal contains a non-finite sample");
  }

  std::vector<double> hann(win);
  for (int i = 0; i < win; ++i) {
    hann[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * i / (win - 1 > 0 ? win - 1 : 1));
  }
  const auto bank = mel_filterbank(cfg.n_mels, n_fft, sr, cfg.fmin, cfg.upper_edge(sr));

  std::unique_ptr<double, FftwFree> in(static_cast<double*>(fftw_malloc(sizeof(double) * n_fft)));
  std::unique_ptr<fftw_complex, FftwFree> out(
      static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * n_bins)));
  FftwPlan plan;
  {
    std::lock_guard lock(planner_mutex());
    plan.plan = fftw_plan_dft_r2c_1d(n_fft, in.get(), out.get(), FFTW_ESTIMATE);
  }

  const int frames = frame_count(n, win, hop);
  FeatureMatrix feats(frames, cfg.n_mels, cfg.hop_ms);
  std::vector<double> power(n_bins);
  for (int t = 0; t < frames; ++t) {
    const double* src = signal.samples.data() + static_cast<size_t>(t) * hop;
    for (int i = 0; i < n_fft; ++i) in.get()[i] = i < win ? src[i] * hann[i] : 0.0;
    fftw_execute(plan.plan);
    for (int k = 0; k < n_bins; ++k) {
      double re = out.get()[k][0], im = out.get()[k][1];
      power[k] = re * re + im * im;
    }
    for (int m = 0; m < cfg.n_mels; ++m) {
      const double* w = bank.data() + static_cast<size_t>(m) * n_bins;
      double e = 0.0;
      for (int k = 0; k < n_bins; ++k) e += w[k] * power[k];
      feats.at(t, m) = static_cast<float>(std::log(std::max(e, cfg.log_floor)));
    }
  }

  if (cfg.mean_subtract) {
    for (int m = 0; m < cfg.n_mels; ++m) {
      double mean = 0.0;
      for (int t = 0; t < frames; ++t) mean += feats.at(t, m);
      mean /= frames;
      for (int t = 0; t < frames; ++t) feats.at(t, m) = static_cast<float>(feats.at(t, m) - mean);
    }
  }
  return feats;
}

FeatureMatrix compute_deltas(const FeatureMatrix& feats, int window) {
  if (window < 1) throw InvalidArgument("delta window must be >= 1");
  if (window >= feats.n_frames) {
    throw InvalidArgument("delta window " + std::to_string(window) + " needs more than " +
                          std::to_string(feats.n_frames) + " frames");
  }
  double denom = 0.0;
  for (int k = 1; k <= window; ++k) denom += 2.0 * k * k;
  FeatureMatrix out(feats.n_frames, feats.n_mels, feats.hop_ms);
  const int last = feats.n_frames - 1;
  for (int t = 0; t < feats.n_frames; ++t) {
    for (int m = 0; m < feats.n_mels; ++m) {
      double acc = 0.0;
      for (int k = 1; k <= window; ++k) {
        int ahead = std::min(t + k, last);
        int behind = std::max(t - k, 0);
        acc += k * (static_cast<double>(feats.at(ahead, m)) - feats.at(behind, m));
      }
      out.at(t, m) = static_cast<float>(acc / denom);
    }
  }
  return out;
}

FeatureMatrix stack_features(const FeatureMatrix& base, const FeatureMatrix& extra) {
  if (base.n_frames != extra.n_frames) throw InvalidArgument("stacked features differ in frame count");
  FeatureMatrix out(base.n_frames, base.n_mels + extra.n_mels, base.hop_ms);
  for (int t = 0; t < base.n_frames; ++t) {
    auto dst = out.values.begin() + static_cast<ptrdiff_t>(t) * out.n_mels;
    auto a = base.row(t);
    auto b = extra.row(t);
    std::copy(a.begin(), a.end(), dst);
    std::copy(b.begin(), b.end(), dst + base.n_mels);
  }
  return out;
}

void write_features(const std::filesystem::path& path, const FeatureMatrix& feats) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open feature file for writing: " + path.string());
  out.write("FBK1", 4);
  binary::write_u32(out, static_cast<uint32_t>(feats.n_frames));
  binary::write_u32(out, static_cast<uint32_t>(feats.n_mels));
  for (float v : feats.values) binary::write_f32(out, v);
  if (!out) throw Error("failed writing feature file: " + path.string());
}

FeatureMatrix read_features(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open feature file: " + path.string());
  binary::expect_magic(in, "FBK1", "feature file");
  uint32_t frames = binary::read_u32(in, "feature header");
  uint32_t mels = binary::read_u32(in, "feature header");
  if (frames == 0 || mels == 0 || static_cast<uint64_t>(frames) * mels > (1ull << 31)) {
    throw FormatError("implausible feature dimensions in " + path.string());
  }
  FeatureMatrix feats(static_cast<int>(frames), static_cast<int>(mels));
  std::vector<unsigned char> raw(feats.values.size() * 4);
  binary::read_exact(in, raw.data(), raw.size(), "feature values");
  for (size_t i = 0; i < feats.values.size(); ++i) {
    uint32_t bits = static_cast<uint32_t>(raw[4 * i]) | (static_cast<uint32_t>(raw[4 * i + 1]) << 8) |
                    (static_cast<uint32_t>(raw[4 * i + 2]) << 16) |
                    (static_cast<uint32_t>(raw[4 * i + 3]) << 24);
    feats.values[i] = std::bit_cast<float>(bits);
  }
  return feats;
}

}  // namespace s2t::features
