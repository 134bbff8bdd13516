#include <algorithm>
#include <cmath>
#include <random>

#include "doctest.h"
#include "fixtures.hpp"
#include "respire/errors.hpp"
#include "respire/handcrafted.hpp"

using namespace respire;
using namespace respire::handcrafted;

namespace {

// Independent statistics: long double accumulation and nth_element order statistics.
struct OracleStats {
  long double mean, median, rms, max, min, q1, q3, std, skew, kurt;
};

long double order_stat(std::vector<double> v, std::size_t k) {
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(k), v.end());
  return v[k];
}

long double oracle_quantile(const std::vector<double>& v, long double q) {
  const long double pos = q * static_cast<long double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(pos);
  const long double a = order_stat(v, lo);
  if (lo + 1 >= v.size()) return a;
  const long double b = order_stat(v, lo + 1);
  return a + (b - a) * (pos - static_cast<long double>(lo));
}

OracleStats oracle(const std::vector<double>& v) {
  OracleStats o{};
  const auto n = static_cast<long double>(v.size());
  long double s = 0, sq = 0;
  for (double x : v) {
    s += x;
    sq += static_cast<long double>(x) * x;
  }
  o.mean = s / n;
  o.rms = std::sqrt(sq / n);
  o.min = *std::min_element(v.begin(), v.end());
  o.max = *std::max_element(v.begin(), v.end());
  o.median = oracle_quantile(v, 0.5L);
  o.q1 = oracle_quantile(v, 0.25L);
  o.q3 = oracle_quantile(v, 0.75L);
  long double m2 = 0, m3 = 0, m4 = 0;
  for (double x : v) {
    const long double d = x - o.mean;
    m2 += d * d;
    m3 += d * d * d;
    m4 += d * d * d * d;
  }
  m2 /= n;
  m3 /= n;
  m4 /= n;
  o.std = std::sqrt(m2);
  o.skew = m3 / std::pow(m2, 1.5L);
  o.kurt = m4 / (m2 * m2) - 3.0L;
  return o;
}

bool close_rel(double got, long double want, double tol) {
  const long double scale = std::max<long double>(1.0L, std::fabs(want));
  return std::fabs(got - want) <= tol * scale;
}

}  // namespace

TEST_CASE("series_stats worked examples") {
  const auto s = series_stats({1, 2, 3, 4});
  CHECK(s.mean == 2.5);
  CHECK(s.median == 2.5);
  CHECK(s.min == 1);
  CHECK(s.max == 4);
  CHECK(s.q1 == 1.75);
  CHECK(s.q3 == 3.25);
  CHECK(s.iqr == 1.5);

  const auto c = series_stats({5, 5, 5});
  CHECK(c.std == 0);
  CHECK(c.skewness == 0);
  CHECK(c.kurtosis == 0);
  CHECK(c.iqr == 0);
  CHECK(c.rms == 5);

  const auto c2 = series_stats({0.1, 0.1, 0.1, 0.1, 0.1, 0.1, 0.1});
  CHECK(c2.std == 0);
  CHECK(c2.skewness == 0);

  CHECK(series_stats({-1, 0, 1}).skewness == 0);
  CHECK_THROWS_AS(series_stats({}), Error);
}

TEST_CASE("series_stats agrees with brute-force oracle on random sequences") {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 2 + rng() % 200;
    std::vector<double> v(n);
    std::lognormal_distribution<double> d(0.0, 1.0);
    std::normal_distribution<double> g(3.0, 10.0);
    for (auto& x : v) x = trial % 2 ? d(rng) : g(rng);
    const auto s = series_stats(v);
    const auto o = oracle(v);
    CHECK(close_rel(s.mean, o.mean, 1e-9));
    CHECK(close_rel(s.median, o.median, 1e-9));
    CHECK(close_rel(s.rms, o.rms, 1e-9));
    CHECK(close_rel(s.min, o.min, 1e-9));
    CHECK(close_rel(s.max, o.max, 1e-9));
    CHECK(close_rel(s.q1, o.q1, 1e-9));
    CHECK(close_rel(s.q3, o.q3, 1e-9));
    CHECK(close_rel(s.iqr, o.q3 - o.q1, 1e-9));
    CHECK(close_rel(s.std, o.std, 1e-9));
    CHECK(close_rel(s.skewness, o.skew, 1e-9));
    CHECK(close_rel(s.kurtosis, o.kurt, 1e-9));
    CHECK(s.min <= s.q1);
    CHECK(s.q1 <= s.median);
    CHECK(s.median <= s.q3);
    CHECK(s.q3 <= s.max);
  }
}

TEST_CASE("scalar features on silence, tones and clicks") {
  const auto sil = scalar_features(testing::silence(2.0, 16000));
  CHECK(sil.duration == 2.0);
  CHECK(sil.onsets == 0);
  CHECK(sil.tempo == 0);

  const auto tone = testing::sine(440.0, 1.0, 22050);
  const auto f = scalar_features(tone);
  CHECK(std::abs(f.period - 440.0) <= 22050.0 / tone.samples.size());

  const auto clicks = testing::click_train(2.0, 4.0, 22050);
  const auto c = scalar_features(clicks);
  CHECK(c.tempo == doctest::Approx(120.0).epsilon(5.0 / 120.0));
  CHECK(std::abs(c.onsets - 8.0) <= 1.0);

  audio::AudioClip empty;
  empty.sample_rate = 22050;
  CHECK_THROWS_AS(scalar_features(empty), Error);
}

TEST_CASE("tempo tracks other click rates") {
  for (double rate : {1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0}) {
    const auto c = scalar_features(testing::click_train(rate, 6.0, 22050));
    CHECK(c.tempo == doctest::Approx(60.0 * rate).epsilon(0.05));
  }
}

TEST_CASE("frame series basics") {
  audio::AudioClip dc = testing::silence(0.5, 22050);
  for (auto& s : dc.samples) s = 0.3;
  const auto fs = frame_series(dc);
  for (double z : fs.zcr) CHECK(z == 0.0);

  const auto tone = frame_series(testing::sine(1000.0, 0.5, 22050));
  const double bin_hz = 22050.0 / kStft.fft_size;
  for (double c : tone.spectral_centroid) CHECK(std::abs(c - 1000.0) <= 2 * bin_hz);

  double mean_rolloff = 0.0;
  int count = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto wn = frame_series(testing::noise(0.2, 22050, seed));
    for (double r : wn.rolloff_85) {
      mean_rolloff += r;
      ++count;
    }
  }
  mean_rolloff /= count;
  CHECK(std::abs(mean_rolloff - 0.85 * 11025.0) <= 0.1 * 0.85 * 11025.0);

  CHECK_THROWS_AS(frame_series(testing::noise(0.05, 22050, 1)), Error);
}

TEST_CASE("delta regression slope") {
  std::vector<double> ramp(20);
  for (std::size_t i = 0; i < ramp.size(); ++i) ramp[i] = 3.0 * static_cast<double>(i);
  const auto d = delta(ramp);
  for (std::size_t i = 4; i + 4 < ramp.size(); ++i) CHECK(d[i] == doctest::Approx(3.0));
  const auto flat = delta(std::vector<double>(7, 2.0));
  for (double v : flat) CHECK(v == 0.0);
}

TEST_CASE("handcrafted vector layout and determinism") {
  CHECK(HandcraftedVector::layout().size() == 477);
  CHECK(HandcraftedVector::layout()[0] == "duration");
  CHECK(HandcraftedVector::layout()[4] == "rms_energy.mean");
  CHECK(HandcraftedVector::layout()[476] == "d2_mfcc_12.kurtosis");

  const auto clip = testing::noise(1.0, 16000, 11);
  const auto a = extract_handcrafted(clip);
  const auto b = extract_handcrafted(clip);
  CHECK(a.values.size() == 477);
  CHECK(a.values == b.values);
}

TEST_CASE("silent clip forces zero energy statistics") {
  const auto v = extract_handcrafted(testing::silence(1.0, 22050));
  CHECK(v.values[0] == 1.0);
  const auto& names = HandcraftedVector::layout();
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i].rfind("rms_energy.", 0) == 0 || names[i].rfind("zcr.", 0) == 0) CHECK(v.values[i] == 0.0);
  }
}

TEST_CASE("amplitude scaling invariance") {
  const auto clip = testing::noise(1.0, 22050, 12, 0.2);
  audio::AudioClip scaled = clip;
  const double c = 3.7;
  for (auto& s : scaled.samples) s *= c;
  const auto a = extract_handcrafted(clip).values;
  const auto b = extract_handcrafted(scaled).values;
  const auto& names = HandcraftedVector::layout();
  auto starts = [](const std::string& s, const char* p) { return s.rfind(p, 0) == 0; };
  auto ends = [](const std::string& s, const std::string& suffix) {
    return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
  };
  for (std::size_t i = 0; i < names.size(); ++i) {
    const auto& n = names[i];
    if (starts(n, "zcr.") || starts(n, "spectral_centroid.") || starts(n, "rolloff_85.") ||
        ends(n, ".skewness") || ends(n, ".kurtosis")) {
      CHECK_MESSAGE(std::abs(a[i] - b[i]) <= 1e-9 * std::max(1.0, std::abs(a[i])), n);
    } else if (starts(n, "rms_energy.") && !ends(n, ".skewness") && !ends(n, ".kurtosis")) {
      CHECK_MESSAGE(std::abs(c * a[i] - b[i]) <= 1e-9 * std::max(1.0, std::abs(b[i])), n);
    }
  }
}

TEST_CASE("time reversal preserves zcr and rms location statistics") {
  // (N - fft) divisible by hop so the reversed frame grid mirrors the original.
  audio::AudioClip clip = testing::noise(1.0, 22050, 13, 0.3);
  clip.samples.resize(2048 + 40 * 512);
  for (std::size_t i = 0; i < clip.samples.size(); ++i) clip.samples[i] *= 1.0 + std::sin(static_cast<double>(i) / 900.0);
  audio::AudioClip rev = clip;
  std::reverse(rev.samples.begin(), rev.samples.end());
  const auto fa = frame_series(clip);
  const auto fb = frame_series(rev);
  using Member = std::vector<double> FrameSeries::*;
  for (Member member : {&FrameSeries::zcr, &FrameSeries::rms_energy}) {
    const auto sa = series_stats(fa.*member);
    const auto sb = series_stats(fb.*member);
    CHECK(sa.mean == doctest::Approx(sb.mean).epsilon(1e-9));
    CHECK(sa.min == doctest::Approx(sb.min).epsilon(1e-9));
    CHECK(sa.max == doctest::Approx(sb.max).epsilon(1e-9));
    CHECK(sa.median == doctest::Approx(sb.median).epsilon(1e-9));
  }
}
