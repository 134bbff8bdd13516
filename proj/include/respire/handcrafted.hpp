#pragma once

#include <array>
#include <string>
#include <vector>

#include "respire/audio.hpp"

namespace respire::handcrafted {

inline constexpr int kMfccCount = 13;
inline constexpr int kMfccMelBands = 128;
inline constexpr int kStatsPerSeries = 11;
inline constexpr int kScalarCount = 4;
inline constexpr int kSeriesCount = 4 + 3 * kMfccCount;
inline constexpr int kVectorLength = kScalarCount + kSeriesCount * kStatsPerSeries;
static_assert(kVectorLength == 477);

inline constexpr audio::StftParams kStft{2048, 512};
inline constexpr double kRolloffFraction = 0.85;

struct ScalarFeatures {
  double duration = 0.0;  // seconds
  double onsets = 0.0;    // count
  double tempo = 0.0;     // BPM, 0 when no periodicity is found
  double period = 0.0;    // Hz of the strongest non-DC FFT bin
};

struct FrameSeries {
  std::vector<double> rms_energy;
  std::vector<double> spectral_centroid;  // Hz
  std::vector<double> rolloff_85;         // Hz
  std::vector<double> zcr;                // crossings per sample
  std::array<std::vector<double>, kMfccCount> mfcc;
  std::array<std::vector<double>, kMfccCount> d_mfcc;
  std::array<std::vector<double>, kMfccCount> d2_mfcc;

  /// All 43 series in vector layout order.
  std::vector<const std::vector<double>*> ordered() const;
};

/// Summary statistics of one series. Quartiles use linear interpolation between closest
/// ranks; std is the population value, skewness the third standardized moment and kurtosis
/// the excess fourth moment. A constant series reports std = iqr = skewness = kurtosis = 0.
struct SeriesStats {
  double mean = 0.0;
  double median = 0.0;
  double rms = 0.0;
  double max = 0.0;
  double min = 0.0;
  double q1 = 0.0;
  double q3 = 0.0;
  double iqr = 0.0;
  double std = 0.0;
  double skewness = 0.0;
  double kurtosis = 0.0;

  std::array<double, kStatsPerSeries> as_array() const {
    return {mean, median, rms, max, min, q1, q3, iqr, std, skewness, kurtosis};
  }
};

const std::array<std::string, kStatsPerSeries>& stat_names();

SeriesStats series_stats(const std::vector<double>& series);

/// Half-wave rectified spectral flux of the magnitude STFT, one value per frame.
std::vector<double> onset_envelope(const Matrix& power);

/// Frames where the envelope is a local maximum above local mean (+-0.1 s) + 0.3 * global std.
std::vector<int> pick_onsets(const std::vector<double>& envelope, double frames_per_second);

/// Autocorrelation tempo of the onset envelope restricted to 30..300 BPM.
double estimate_tempo(const std::vector<double>& envelope, double frames_per_second);

ScalarFeatures scalar_features(const audio::AudioClip& clip);

FrameSeries frame_series(const audio::AudioClip& clip);

/// 9-frame regression slope with edge replication.
std::vector<double> delta(const std::vector<double>& series);

struct HandcraftedVector {
  std::vector<double> values;

  /// Names of the 477 entries, e.g. "duration" or "mfcc_3.skewness".
  static const std::vector<std::string>& layout();
};

/// Resamples to 22050 Hz when needed, then concatenates
/// [duration, onsets, tempo, period] with 11 statistics of each of the 43 frame series.
HandcraftedVector extract_handcrafted(const audio::AudioClip& clip);

}  // namespace respire::handcrafted
