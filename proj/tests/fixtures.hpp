#pragma once

#include <cmath>
#include <complex>
#include <filesystem>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

#include "respire/audio.hpp"

namespace respire::testing {

inline audio::AudioClip sine(double freq, double seconds, int rate, double amp = 1.0) {
  audio::AudioClip c;
  c.sample_rate = rate;
  c.source_id = "sine";
  const auto n = static_cast<std::size_t>(std::llround(seconds * rate));
  c.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    c.samples[i] = amp * std::sin(2.0 * std::numbers::pi * freq * static_cast<double>(i) / rate);
  }
  return c;
}

inline audio::AudioClip noise(double seconds, int rate, std::uint64_t seed, double amp = 0.5) {
  audio::AudioClip c;
  c.sample_rate = rate;
  c.source_id = "noise";
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, amp);
  c.samples.resize(static_cast<std::size_t>(std::llround(seconds * rate)));
  for (double& s : c.samples) s = g(rng);
  return c;
}

inline audio::AudioClip silence(double seconds, int rate) {
  audio::AudioClip c;
  c.sample_rate = rate;
  c.source_id = "silence";
  c.samples.assign(static_cast<std::size_t>(std::llround(seconds * rate)), 0.0);
  return c;
}

inline audio::AudioClip click_train(double clicks_per_second, double seconds, int rate) {
  audio::AudioClip c = silence(seconds, rate);
  c.source_id = "clicks";
  const double period = rate / clicks_per_second;
  for (int k = 0;; ++k) {
    const auto idx = static_cast<std::size_t>(std::llround(period * (k + 0.5)));
    if (idx >= c.samples.size()) break;
    c.samples[idx] = 1.0;
  }
  return c;
}

// Naive O(N^2) DFT magnitude, independent of the FFT backend.
inline std::vector<double> naive_dft_magnitude(const std::vector<double>& x) {
  const std::size_t n = x.size();
  std::vector<double> mag(n / 2 + 1);
  for (std::size_t k = 0; k <= n / 2; ++k) {
    const std::complex<double> step = std::polar(1.0, -2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n));
    std::complex<double> w(1.0, 0.0), acc(0.0, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      acc += x[i] * w;
      w *= step;
      if ((i & 1023u) == 1023u) {
        w = std::polar(1.0, -2.0 * std::numbers::pi * static_cast<double>(k) * static_cast<double>(i + 1) / static_cast<double>(n));
      }
    }
    mag[k] = std::abs(acc);
  }
  return mag;
}

class TempDir {
 public:
  TempDir() {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("respire_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace respire::testing
