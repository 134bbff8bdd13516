#include "respire/handcrafted.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "respire/errors.hpp"

namespace respire::handcrafted {

namespace {

constexpr double kOnsetWindowSeconds = 0.1;
constexpr double kOnsetStdFactor = 0.3;
constexpr double kMinTempo = 30.0;
constexpr double kMaxTempo = 300.0;
constexpr int kDeltaHalfWidth = 4;
constexpr double kSmoothSigma = 1.0;  // frames
constexpr int kSmoothReach = 3;

double quantile_sorted(const std::vector<double>& sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + (sorted[hi] - sorted[lo]) * frac;
}

// Orthonormal DCT-II basis, rows = output coefficients.
Matrix dct_basis(int n_out, int n_in) {
  Matrix basis(n_out, n_in);
  for (int k = 0; k < n_out; ++k) {
    const double scale = k == 0 ? std::sqrt(1.0 / n_in) : std::sqrt(2.0 / n_in);
    for (int n = 0; n < n_in; ++n) {
      basis(k, n) = scale * std::cos(std::numbers::pi * k * (2.0 * n + 1.0) / (2.0 * n_in));
    }
  }
  return basis;
}

void require_samples(const audio::AudioClip& clip) {
  if (clip.samples.empty()) throw Error(ErrorCode::kEmptyAudio, "clip '" + clip.source_id + "' has no samples");
  for (double s : clip.samples) {
    if (!std::isfinite(s)) throw Error(ErrorCode::kNonFiniteFeature, "clip '" + clip.source_id + "' has non-finite samples");
  }
}

}  // namespace

std::vector<const std::vector<double>*> FrameSeries::ordered() const {
  std::vector<const std::vector<double>*> out{&rms_energy, &spectral_centroid, &rolloff_85, &zcr};
  for (const auto& s : mfcc) out.push_back(&s);
  for (const auto& s : d_mfcc) out.push_back(&s);
  for (const auto& s : d2_mfcc) out.push_back(&s);
  return out;
}

const std::array<std::string, kStatsPerSeries>& stat_names() {
  static const std::array<std::string, kStatsPerSeries> names{
      "mean", "median", "rms", "max", "min", "q1", "q3", "iqr", "std", "skewness", "kurtosis"};
  return names;
}

SeriesStats series_stats(const std::vector<double>& series) {
  if (series.empty()) throw Error(ErrorCode::kInvalidArgument, "series_stats needs at least one value");
  std::vector<double> sorted = series;
  std::sort(sorted.begin(), sorted.end());
  const auto n = static_cast<double>(series.size());

  SeriesStats s;
  s.min = sorted.front();
  s.max = sorted.back();
  s.median = quantile_sorted(sorted, 0.5);
  s.q1 = quantile_sorted(sorted, 0.25);
  s.q3 = quantile_sorted(sorted, 0.75);
  s.iqr = s.q3 - s.q1;

  double sum = 0.0, sum_sq = 0.0;
  for (double v : series) {
    sum += v;
    sum_sq += v * v;
  }
  s.mean = sum / n;
  s.rms = std::sqrt(sum_sq / n);

  if (s.max == s.min) {
    s.iqr = 0.0;
    return s;  // std, skewness, kurtosis stay 0
  }
  double m2 = 0.0, m3 = 0.0, m4 = 0.0;
  for (double v : series) {
    const double d = v - s.mean;
    const double d2 = d * d;
    m2 += d2;
    m3 += d2 * d;
    m4 += d2 * d2;
  }
  m2 /= n;
  m3 /= n;
  m4 /= n;
  s.std = std::sqrt(m2);
  if (m2 > 0.0) {
    s.skewness = m3 / std::pow(m2, 1.5);
    s.kurtosis = m4 / (m2 * m2) - 3.0;
  }
  return s;
}

std::vector<double> onset_envelope(const Matrix& power) {
  std::vector<double> env(static_cast<std::size_t>(power.rows()), 0.0);
  for (long t = 1; t < power.rows(); ++t) {
    double flux = 0.0;
    for (long k = 0; k < power.cols(); ++k) {
      flux += std::max(0.0, std::sqrt(power(t, k)) - std::sqrt(power(t - 1, k)));
    }
    env[static_cast<std::size_t>(t)] = flux;
  }
  return env;
}

std::vector<int> pick_onsets(const std::vector<double>& envelope, double frames_per_second) {
  const int n = static_cast<int>(envelope.size());
  std::vector<int> peaks;
  if (n == 0) return peaks;
  const double mean = std::accumulate(envelope.begin(), envelope.end(), 0.0) / n;
  double var = 0.0;
  for (double v : envelope) var += (v - mean) * (v - mean);
  const double global_std = std::sqrt(var / n);
  const int half = std::max(1, static_cast<int>(std::lround(kOnsetWindowSeconds * frames_per_second)));

  for (int t = 0; t < n; ++t) {
    const double v = envelope[static_cast<std::size_t>(t)];
    if (v <= 0.0) continue;
    const double prev = t > 0 ? envelope[static_cast<std::size_t>(t - 1)] : 0.0;
    const double next = t + 1 < n ? envelope[static_cast<std::size_t>(t + 1)] : 0.0;
    if (!(v > prev && v >= next)) continue;
    const int lo = std::max(0, t - half);
    const int hi = std::min(n - 1, t + half);
    double local = 0.0;
    for (int i = lo; i <= hi; ++i) local += envelope[static_cast<std::size_t>(i)];
    local /= (hi - lo + 1);
    if (v > local + kOnsetStdFactor * global_std) peaks.push_back(t);
  }
  return peaks;
}

double estimate_tempo(const std::vector<double>& envelope, double frames_per_second) {
  const int n = static_cast<int>(envelope.size());
  const int min_lag = std::max(1, static_cast<int>(std::ceil(60.0 * frames_per_second / kMaxTempo)));
  const int max_lag = std::min(n - 1, static_cast<int>(std::floor(60.0 * frames_per_second / kMinTempo)));
  if (max_lag < min_lag) return 0.0;

  // Light Gaussian smoothing so periods that fall between integer lags still correlate.
  std::vector<double> smooth(envelope.size(), 0.0);
  for (int t = 0; t < n; ++t) {
    double acc = 0.0, wsum = 0.0;
    for (int k = -kSmoothReach; k <= kSmoothReach; ++k) {
      if (t + k < 0 || t + k >= n) continue;
      const double w = std::exp(-0.5 * k * k / (kSmoothSigma * kSmoothSigma));
      acc += w * envelope[static_cast<std::size_t>(t + k)];
      wsum += w;
    }
    smooth[static_cast<std::size_t>(t)] = acc / wsum;
  }

  // Autocorrelation over lags [min_lag - 1, max_lag + 1] so the peak can be refined.
  const int lo = std::max(1, min_lag - 1);
  const int hi = std::min(n - 1, max_lag + 1);
  std::vector<double> ac(static_cast<std::size_t>(hi + 1), 0.0);
  for (int lag = lo; lag <= hi; ++lag) {
    double acc = 0.0;
    for (int t = 0; t + lag < n; ++t) acc += smooth[static_cast<std::size_t>(t)] * smooth[static_cast<std::size_t>(t + lag)];
    ac[static_cast<std::size_t>(lag)] = acc;
  }
  int best = min_lag;
  for (int lag = min_lag; lag <= max_lag; ++lag) {
    if (ac[static_cast<std::size_t>(lag)] > ac[static_cast<std::size_t>(best)]) best = lag;
  }
  if (ac[static_cast<std::size_t>(best)] <= 0.0) return 0.0;

  double refined = best;
  if (best - 1 >= lo && best + 1 <= hi) {
    const double a = ac[static_cast<std::size_t>(best - 1)];
    const double b = ac[static_cast<std::size_t>(best)];
    const double c = ac[static_cast<std::size_t>(best + 1)];
    const double denom = a - 2.0 * b + c;
    if (denom < 0.0) refined += std::clamp(0.5 * (a - c) / denom, -0.5, 0.5);
  }
  return 60.0 * frames_per_second / refined;
}

ScalarFeatures scalar_features(const audio::AudioClip& clip) {
  require_samples(clip);
  ScalarFeatures f;
  f.duration = clip.duration_seconds();

  const auto mag = audio::magnitude_spectrum(clip.samples);
  std::size_t peak = 0;
  double strongest = 0.0;
  for (std::size_t k = 1; k < mag.size(); ++k) {
    if (mag[k] > strongest) {
      strongest = mag[k];
      peak = k;
    }
  }
  f.period = static_cast<double>(peak) * clip.sample_rate / static_cast<double>(clip.samples.size());

  if (clip.samples.size() >= static_cast<std::size_t>(kStft.fft_size)) {
    const double fps = static_cast<double>(clip.sample_rate) / kStft.hop;
    const auto env = onset_envelope(audio::power_stft(clip, kStft));
    f.onsets = static_cast<double>(pick_onsets(env, fps).size());
    f.tempo = estimate_tempo(env, fps);
  }
  return f;
}

std::vector<double> delta(const std::vector<double>& series) {
  const int n = static_cast<int>(series.size());
  std::vector<double> out(series.size(), 0.0);
  double norm = 0.0;
  for (int k = 1; k <= kDeltaHalfWidth; ++k) norm += 2.0 * k * k;
  for (int t = 0; t < n; ++t) {
    double acc = 0.0;
    for (int k = 1; k <= kDeltaHalfWidth; ++k) {
      const double ahead = series[static_cast<std::size_t>(std::min(t + k, n - 1))];
      const double behind = series[static_cast<std::size_t>(std::max(t - k, 0))];
      acc += k * (ahead - behind);
    }
    out[static_cast<std::size_t>(t)] = acc / norm;
  }
  return out;
}

FrameSeries frame_series(const audio::AudioClip& clip) {
  require_samples(clip);
  const Matrix power = audio::power_stft(clip, kStft);
  const long frames = power.rows();
  const long bins = power.cols();
  const double bin_hz = static_cast<double>(clip.sample_rate) / kStft.fft_size;

  FrameSeries fs;
  fs.rms_energy.resize(static_cast<std::size_t>(frames));
  fs.spectral_centroid.resize(static_cast<std::size_t>(frames));
  fs.rolloff_85.resize(static_cast<std::size_t>(frames));
  fs.zcr.resize(static_cast<std::size_t>(frames));

  for (long t = 0; t < frames; ++t) {
    const auto ti = static_cast<std::size_t>(t);
    const double* x = clip.samples.data() + ti * static_cast<std::size_t>(kStft.hop);
    double energy = 0.0;
    int crossings = 0;
    for (int i = 0; i < kStft.fft_size; ++i) {
      energy += x[i] * x[i];
      if (i > 0 && std::signbit(x[i]) != std::signbit(x[i - 1])) ++crossings;
    }
    fs.rms_energy[ti] = std::sqrt(energy / kStft.fft_size);
    fs.zcr[ti] = static_cast<double>(crossings) / kStft.fft_size;

    double mag_sum = 0.0, weighted = 0.0, total = 0.0;
    for (long k = 0; k < bins; ++k) {
      const double m = std::sqrt(power(t, k));
      mag_sum += m;
      weighted += m * k * bin_hz;
      total += power(t, k);
    }
    fs.spectral_centroid[ti] = mag_sum > 0.0 ? weighted / mag_sum : 0.0;

    double rolloff = 0.0;
    if (total > 0.0) {
      const double target = kRolloffFraction * total;
      double cumulative = 0.0;
      for (long k = 0; k < bins; ++k) {
        cumulative += power(t, k);
        if (cumulative >= target) {
          rolloff = k * bin_hz;
          break;
        }
      }
    }
    fs.rolloff_85[ti] = rolloff;
  }

  static const Matrix dct = dct_basis(kMfccCount, kMfccMelBands);
  const Matrix fb = audio::mel_filterbank(kMfccMelBands, kStft.fft_size, clip.sample_rate);
  const Matrix log_mel =
      (power * fb.transpose()).unaryExpr([](double v) { return std::log(std::max(v, audio::kLogFloor)); });
  const Matrix coeffs = log_mel * dct.transpose();  // frames x 13
  for (int c = 0; c < kMfccCount; ++c) {
    auto& series = fs.mfcc[static_cast<std::size_t>(c)];
    series.resize(static_cast<std::size_t>(frames));
    for (long t = 0; t < frames; ++t) series[static_cast<std::size_t>(t)] = coeffs(t, c);
    fs.d_mfcc[static_cast<std::size_t>(c)] = delta(series);
    fs.d2_mfcc[static_cast<std::size_t>(c)] = delta(fs.d_mfcc[static_cast<std::size_t>(c)]);
  }
  return fs;
}

const std::vector<std::string>& HandcraftedVector::layout() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out{"duration", "onsets", "tempo", "period"};
    std::vector<std::string> series{"rms_energy", "spectral_centroid", "rolloff_85", "zcr"};
    for (const char* prefix : {"mfcc_", "d_mfcc_", "d2_mfcc_"}) {
      for (int c = 0; c < kMfccCount; ++c) series.push_back(prefix + std::to_string(c));
    }
    for (const auto& s : series) {
      for (const auto& stat : stat_names()) out.push_back(s + "." + stat);
    }
    return out;
  }();
  return names;
}

HandcraftedVector extract_handcrafted(const audio::AudioClip& input) {
  require_samples(input);
  const audio::AudioClip clip =
      input.sample_rate == audio::kHandcraftedRate ? input : audio::resample(input, audio::kHandcraftedRate);

  HandcraftedVector out;
  out.values.reserve(kVectorLength);
  const ScalarFeatures scalars = scalar_features(clip);
  // Duration is taken before resampling, which can shift the length by one sample.
  out.values.insert(out.values.end(), {input.duration_seconds(), scalars.onsets, scalars.tempo, scalars.period});
  const FrameSeries fs = frame_series(clip);
  for (const auto* series : fs.ordered()) {
    const auto stats = series_stats(*series).as_array();
    out.values.insert(out.values.end(), stats.begin(), stats.end());
  }
  for (std::size_t i = 0; i < out.values.size(); ++i) {
    if (!std::isfinite(out.values[i])) {
      throw Error(ErrorCode::kNonFiniteFeature, "feature " + HandcraftedVector::layout()[i] + " of '" +
                                                    input.source_id + "' is not finite");
    }
  }
  return out;
}

}  // namespace respire::handcrafted
