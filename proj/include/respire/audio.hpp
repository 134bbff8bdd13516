#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "respire/linalg.hpp"

namespace respire::audio {

inline constexpr int kMinSampleRate = 8000;
inline constexpr int kMaxSampleRate = 96000;

// Sample rate the hand-crafted feature path runs at.
inline constexpr int kHandcraftedRate = 22050;
// Native rate of the VGGish/YAMNet frontends (enforced by the exporter).
inline constexpr int kEmbeddingRate = 16000;

/// Mono waveform. Amplitudes are dimensionless, nominally in [-1, 1].
struct AudioClip {
  std::vector<double> samples;
  int sample_rate = 0;
  std::string source_id;

  double duration_seconds() const {
    return static_cast<double>(samples.size()) / static_cast<double>(sample_rate);
  }
};

struct FrameSpec {
  double window_seconds = 0.96;
  double hop_seconds = 0.96;
};

struct StftParams {
  int fft_size = 2048;
  int hop = 512;
};

enum class BinKind { kLinear, kMel };

enum class MelNorm {
  kNone,  // unit-peak triangles; adjacent filters sum to one between the outer centres
  kArea,  // each triangle scaled to unit area in Hz
};

/// Power (linear) or natural-log power (mel) image, frames along rows.
struct SpectrogramImage {
  Matrix values;
  BinKind bin_kind = BinKind::kLinear;
  int n_bins = 0;
  StftParams stft;
  int sample_rate = 0;
};

/// Decodes a RIFF/WAVE file holding integer PCM (8/16/24/32 bit) or 32-bit float samples.
/// Channels are averaged to mono. Throws kCorruptFile or kEmptyAudio.
AudioClip decode_wav(const std::filesystem::path& path);

/// Encodes a clip as 16-bit PCM or 32-bit float WAV. Used by fixtures and tools.
std::vector<std::uint8_t> encode_wav(const AudioClip& clip, int bits_per_sample = 16,
                                     bool floating_point = false);

/// Polyphase Kaiser-windowed sinc resampler (beta 8.6, 64 zero crossings).
AudioClip resample(const AudioClip& clip, int target_rate);

/// Peak-normalizes to max |x| = 1. All-zero input is returned unchanged.
AudioClip normalize(const AudioClip& clip);

/// Splits into windows starting at i*hop; trailing partial window is dropped.
std::vector<AudioClip> frame(const AudioClip& clip, const FrameSpec& spec);

/// Zero-pads a clip shorter than one window up to exactly one window.
AudioClip pad_to_window(const AudioClip& clip, const FrameSpec& spec);

int frame_count(std::size_t n_samples, std::size_t window, std::size_t hop);

/// Periodic Hann window of the given length.
std::vector<double> hann_window(int length);

/// |STFT|^2 with a Hann window, frames at i*hop without centring.
/// Rows are frames, columns the fft_size/2+1 one-sided bins.
Matrix power_stft(const AudioClip& clip, const StftParams& stft);

/// Magnitude of the one-sided DFT of a real sequence (any length).
std::vector<double> magnitude_spectrum(const std::vector<double>& signal);

double hz_to_mel(double hz);
double mel_to_hz(double mel);

/// Triangular filterbank on the HTK mel scale spanning [fmin, fmax].
/// Rows are filters, columns the fft_size/2+1 bins.
Matrix mel_filterbank(int n_mels, int fft_size, int sample_rate, double fmin = 0.0,
                      double fmax = -1.0, MelNorm norm = MelNorm::kNone);

inline constexpr double kLogFloor = 1e-10;

/// Linear kind yields power over all one-sided bins; mel kind yields ln(max(mel power, 1e-10)).
SpectrogramImage spectrogram(const AudioClip& clip, BinKind kind, int n_bins, const StftParams& stft);

}  // namespace respire::audio
