#include "respire/audio.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <memory>
#include <mutex>
#include <numbers>
#include <numeric>

#include "respire/binary_io.hpp"
#include "respire/errors.hpp"

namespace respire::audio {

namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

void check_rate(int rate, ErrorCode code) {
  if (rate < kMinSampleRate || rate > kMaxSampleRate) {
    throw Error(code, "sample rate " + std::to_string(rate) + " outside [8000, 96000]");
  }
}

std::uint16_t le16(const std::uint8_t* p) { return static_cast<std::uint16_t>(p[0] | (p[1] << 8)); }
std::uint32_t le32(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

double decode_sample(const std::uint8_t* p, int bits, bool is_float) {
  if (is_float) {
    if (bits == 32) {
      float f;
      std::memcpy(&f, p, 4);
      return f;
    }
    double d;
    std::memcpy(&d, p, 8);
    return d;
  }
  switch (bits) {
    case 8: return (static_cast<int>(p[0]) - 128) / 128.0;
    case 16: return static_cast<std::int16_t>(le16(p)) / 32768.0;
    case 24: {
      std::int32_t v = static_cast<std::int32_t>(p[0] | (p[1] << 8) | (p[2] << 16));
      if (v & 0x800000) v -= 0x1000000;
      return v / 8388608.0;
    }
    default: return static_cast<std::int32_t>(le32(p)) / 2147483648.0;
  }
}

// FFTW planning is not thread-safe; execution with the new-array API is.
std::mutex& plan_mutex() {
  static std::mutex m;
  return m;
}

struct PlanDeleter {
  void operator()(fftw_plan_s* p) const {
    std::lock_guard lock(plan_mutex());
    fftw_destroy_plan(p);
  }
};
using PlanPtr = std::unique_ptr<fftw_plan_s, PlanDeleter>;

struct FftwFree {
  void operator()(void* p) const { fftw_free(p); }
};

// Real-to-complex transform of fixed length with owned aligned buffers.
class RealFft {
 public:
  explicit RealFft(int n)
      : n_(n),
        in_(static_cast<double*>(fftw_malloc(sizeof(double) * static_cast<std::size_t>(n)))),
        out_(static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * static_cast<std::size_t>(n / 2 + 1)))) {
    std::lock_guard lock(plan_mutex());
    plan_.reset(fftw_plan_dft_r2c_1d(n, in_.get(), reinterpret_cast<fftw_complex*>(out_.get()),
                                     FFTW_ESTIMATE));
  }

  double* input() { return in_.get(); }
  int bins() const { return n_ / 2 + 1; }

  void execute() { fftw_execute(plan_.get()); }
  double power(int k) const {
    const auto& c = reinterpret_cast<const fftw_complex*>(out_.get())[k];
    return c[0] * c[0] + c[1] * c[1];
  }

 private:
  int n_;
  std::unique_ptr<double, FftwFree> in_;
  std::unique_ptr<void, FftwFree> out_;
  PlanPtr plan_;
};

double bessel_i0(double x) {
  double sum = 1.0, term = 1.0;
  const double q = x * x / 4.0;
  for (int k = 1; k < 200; ++k) {
    term *= q / (static_cast<double>(k) * k);
    sum += term;
    if (term < sum * 1e-17) break;
  }
  return sum;
}

constexpr double kKaiserBeta = 8.6;
constexpr int kZeroCrossings = 64;
constexpr std::int64_t kMaxTablePhases = 4096;

// Windowed-sinc kernel at offset x (input samples) for normalized cutoff fc.
double sinc_kernel(double x, double fc, double half_width, double i0_beta) {
  const double r = x / half_width;
  if (std::abs(r) >= 1.0) return 0.0;
  const double arg = std::numbers::pi * fc * x;
  const double sinc = std::abs(arg) < 1e-12 ? 1.0 : std::sin(arg) / arg;
  return fc * sinc * bessel_i0(kKaiserBeta * std::sqrt(1.0 - r * r)) / i0_beta;
}

}  // namespace

AudioClip decode_wav(const std::filesystem::path& path) {
  std::vector<std::uint8_t> bytes;
  try {
    bytes = io::read_file(path);
  } catch (const Error& e) {
    throw Error(ErrorCode::kCorruptFile, e.what());
  }
  const auto corrupt = [&](const std::string& why) {
    return Error(ErrorCode::kCorruptFile, path.string() + ": " + why);
  };
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
    throw corrupt("not a RIFF/WAVE file");
  }

  bool have_fmt = false;
  std::uint16_t format = 0, channels = 0, bits = 0, block_align = 0;
  std::uint32_t rate = 0;
  const std::uint8_t* data = nullptr;
  std::size_t data_size = 0;
  bool have_data = false;

  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const std::uint8_t* hdr = bytes.data() + pos;
    const std::uint32_t chunk_size = le32(hdr + 4);
    const std::size_t body = pos + 8;
    const std::size_t available = bytes.size() - body;
    if (std::memcmp(hdr, "fmt ", 4) == 0) {
      if (chunk_size < 16 || chunk_size > available) throw corrupt("bad fmt chunk");
      const std::uint8_t* f = bytes.data() + body;
      format = le16(f);
      channels = le16(f + 2);
      rate = le32(f + 4);
      block_align = le16(f + 12);
      bits = le16(f + 14);
      if (format == kFormatExtensible) {
        if (chunk_size < 40) throw corrupt("short extensible fmt chunk");
        format = le16(f + 24);
      }
      have_fmt = true;
    } else if (std::memcmp(hdr, "data", 4) == 0) {
      data = bytes.data() + body;
      // Streaming writers leave the size field unset; take what is present.
      data_size = std::min<std::size_t>(chunk_size, available);
      have_data = true;
      break;
    }
    if (chunk_size > available) break;
    pos = body + chunk_size + (chunk_size & 1u);
  }

  if (!have_fmt) throw corrupt("missing fmt chunk");
  if (!have_data) throw corrupt("missing data chunk");
  const bool is_float = format == kFormatFloat;
  if (format != kFormatPcm && !is_float) throw corrupt("unsupported format tag " + std::to_string(format));
  if (channels == 0) throw corrupt("zero channels");
  const bool bits_ok = is_float ? (bits == 32 || bits == 64)
                                : (bits == 8 || bits == 16 || bits == 24 || bits == 32);
  if (!bits_ok) throw corrupt("unsupported bit depth " + std::to_string(bits));
  const std::size_t bytes_per_sample = bits / 8u;
  if (block_align != channels * bytes_per_sample) throw corrupt("inconsistent block alignment");
  if (rate < kMinSampleRate || rate > kMaxSampleRate) {
    throw corrupt("sample rate " + std::to_string(rate) + " outside [8000, 96000]");
  }

  const std::size_t n_frames = data_size / block_align;
  if (n_frames == 0) throw Error(ErrorCode::kEmptyAudio, path.string() + ": no samples");

  AudioClip clip;
  clip.sample_rate = static_cast<int>(rate);
  clip.source_id = path.filename().string();
  clip.samples.resize(n_frames);
  for (std::size_t i = 0; i < n_frames; ++i) {
    const std::uint8_t* frame = data + i * block_align;
    double acc = 0.0;
    for (std::size_t c = 0; c < channels; ++c) {
      acc += decode_sample(frame + c * bytes_per_sample, bits, is_float);
    }
    clip.samples[i] = acc / channels;
  }
  return clip;
}

std::vector<std::uint8_t> encode_wav(const AudioClip& clip, int bits_per_sample, bool floating_point) {
  if (floating_point ? bits_per_sample != 32 : bits_per_sample != 16) {
    throw Error(ErrorCode::kInvalidArgument, "encode_wav supports 16-bit PCM or 32-bit float");
  }
  const std::uint32_t bytes_per_sample = static_cast<std::uint32_t>(bits_per_sample) / 8u;
  const auto data_size = static_cast<std::uint32_t>(clip.samples.size() * bytes_per_sample);
  io::ByteWriter w;
  w.bytes("RIFF");
  w.u32(36 + data_size);
  w.bytes("WAVE");
  w.bytes("fmt ");
  w.u32(16);
  const std::uint16_t fmt = floating_point ? kFormatFloat : kFormatPcm;
  const std::uint32_t rate = static_cast<std::uint32_t>(clip.sample_rate);
  w.u32(fmt | (1u << 16));  // format tag, 1 channel
  w.u32(rate);
  w.u32(rate * bytes_per_sample);
  w.u32(bytes_per_sample | (static_cast<std::uint32_t>(bits_per_sample) << 16));
  w.bytes("data");
  w.u32(data_size);
  for (double s : clip.samples) {
    if (floating_point) {
      w.f32(static_cast<float>(s));
    } else {
      const double scaled = std::clamp(std::round(s * 32768.0), -32768.0, 32767.0);
      const auto v = static_cast<std::int16_t>(scaled);
      std::uint16_t u;
      std::memcpy(&u, &v, 2);
      w.bytes(std::string_view(reinterpret_cast<const char*>(&u), 2));
    }
  }
  return std::move(w).buffer();
}

AudioClip resample(const AudioClip& clip, int target_rate) {
  check_rate(target_rate, ErrorCode::kInvalidArgument);
  if (clip.samples.empty()) throw Error(ErrorCode::kEmptyAudio, "cannot resample an empty clip");
  if (target_rate == clip.sample_rate) return clip;
  check_rate(clip.sample_rate, ErrorCode::kInvalidArgument);

  const std::int64_t g = std::gcd(clip.sample_rate, target_rate);
  const std::int64_t up = target_rate / g;
  const std::int64_t down = clip.sample_rate / g;
  const double fc = std::min(1.0, static_cast<double>(up) / static_cast<double>(down));
  const double half_width = kZeroCrossings / fc;
  const auto reach = static_cast<std::int64_t>(std::ceil(half_width));
  const double i0_beta = bessel_i0(kKaiserBeta);

  const auto n_in = static_cast<std::int64_t>(clip.samples.size());
  const std::int64_t n_out = (n_in * up + down - 1) / down;
  const std::int64_t taps = 2 * reach + 2;  // offsets j in [-reach, reach+1]

  // Polyphase table: row p holds kernel values for fractional position p/up.
  std::vector<double> table;
  const bool tabulate = up <= kMaxTablePhases;
  if (tabulate) {
    table.resize(static_cast<std::size_t>(up * taps));
    for (std::int64_t p = 0; p < up; ++p) {
      const double frac = static_cast<double>(p) / static_cast<double>(up);
      for (std::int64_t j = -reach; j <= reach + 1; ++j) {
        table[static_cast<std::size_t>(p * taps + j + reach)] =
            sinc_kernel(frac - static_cast<double>(j), fc, half_width, i0_beta);
      }
    }
  }

  AudioClip out;
  out.sample_rate = target_rate;
  out.source_id = clip.source_id;
  out.samples.resize(static_cast<std::size_t>(n_out));
  for (std::int64_t n = 0; n < n_out; ++n) {
    const std::int64_t num = n * down;
    const std::int64_t base = num / up;
    const std::int64_t phase = num % up;
    const double frac = static_cast<double>(phase) / static_cast<double>(up);
    const std::int64_t lo = std::max<std::int64_t>(-reach, -base);
    const std::int64_t hi = std::min<std::int64_t>(reach + 1, n_in - 1 - base);
    double acc = 0.0;
    for (std::int64_t j = lo; j <= hi; ++j) {
      const double k = tabulate ? table[static_cast<std::size_t>(phase * taps + j + reach)]
                                : sinc_kernel(frac - static_cast<double>(j), fc, half_width, i0_beta);
      acc += clip.samples[static_cast<std::size_t>(base + j)] * k;
    }
    out.samples[static_cast<std::size_t>(n)] = acc;
  }
  return out;
}

AudioClip normalize(const AudioClip& clip) {
  double peak = 0.0;
  for (double s : clip.samples) peak = std::max(peak, std::abs(s));
  if (peak == 0.0) return clip;
  AudioClip out = clip;
  for (double& s : out.samples) s /= peak;
  return out;
}

int frame_count(std::size_t n_samples, std::size_t window, std::size_t hop) {
  if (window == 0 || hop == 0 || hop > window) {
    throw Error(ErrorCode::kInvalidArgument, "require 0 < hop <= window");
  }
  if (n_samples < window) return 0;
  return static_cast<int>((n_samples - window) / hop + 1);
}

namespace {

std::pair<std::size_t, std::size_t> frame_lengths(const FrameSpec& spec, int rate) {
  if (!(spec.hop_seconds > 0.0) || spec.hop_seconds > spec.window_seconds) {
    throw Error(ErrorCode::kInvalidArgument, "require 0 < hop_seconds <= window_seconds");
  }
  const auto window = static_cast<std::size_t>(std::llround(spec.window_seconds * rate));
  const auto hop = static_cast<std::size_t>(std::llround(spec.hop_seconds * rate));
  return {window, std::max<std::size_t>(hop, 1)};
}

}  // namespace

std::vector<AudioClip> frame(const AudioClip& clip, const FrameSpec& spec) {
  const auto [window, hop] = frame_lengths(spec, clip.sample_rate);
  const int count = frame_count(clip.samples.size(), window, hop);
  if (count == 0) {
    throw Error(ErrorCode::kTooShort, std::to_string(clip.samples.size()) +
                                          " samples is shorter than one window of " +
                                          std::to_string(window));
  }
  std::vector<AudioClip> windows;
  windows.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    const auto begin = clip.samples.begin() + static_cast<std::ptrdiff_t>(i * hop);
    windows.push_back({std::vector<double>(begin, begin + static_cast<std::ptrdiff_t>(window)),
                       clip.sample_rate, clip.source_id + "#" + std::to_string(i)});
  }
  return windows;
}

AudioClip pad_to_window(const AudioClip& clip, const FrameSpec& spec) {
  const auto [window, hop] = frame_lengths(spec, clip.sample_rate);
  if (clip.samples.size() >= window) return clip;
  AudioClip out = clip;
  out.samples.resize(window, 0.0);
  return out;
}

std::vector<double> hann_window(int length) {
  std::vector<double> w(static_cast<std::size_t>(length));
  for (int i = 0; i < length; ++i) {
    w[static_cast<std::size_t>(i)] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * i / length);
  }
  return w;
}

Matrix power_stft(const AudioClip& clip, const StftParams& stft) {
  const int n = stft.fft_size;
  if (n < 2 || (n & (n - 1)) != 0) {
    throw Error(ErrorCode::kInvalidArgument, "fft_size must be a power of two");
  }
  if (stft.hop < 1) throw Error(ErrorCode::kInvalidArgument, "hop must be positive");
  if (clip.samples.size() < static_cast<std::size_t>(n)) {
    throw Error(ErrorCode::kTooShort, std::to_string(clip.samples.size()) +
                                          " samples is shorter than one FFT frame of " +
                                          std::to_string(n));
  }
  const int n_frames =
      static_cast<int>((clip.samples.size() - static_cast<std::size_t>(n)) / static_cast<std::size_t>(stft.hop)) + 1;
  const auto window = hann_window(n);
  RealFft fft(n);
  Matrix power(n_frames, fft.bins());
  for (int t = 0; t < n_frames; ++t) {
    const double* src = clip.samples.data() + static_cast<std::size_t>(t) * static_cast<std::size_t>(stft.hop);
    double* in = fft.input();
    for (int i = 0; i < n; ++i) in[i] = src[i] * window[static_cast<std::size_t>(i)];
    fft.execute();
    for (int k = 0; k < fft.bins(); ++k) power(t, k) = fft.power(k);
  }
  return power;
}

std::vector<double> magnitude_spectrum(const std::vector<double>& signal) {
  if (signal.empty()) throw Error(ErrorCode::kEmptyAudio, "empty signal");
  const int n = static_cast<int>(signal.size());
  RealFft fft(n);
  std::copy(signal.begin(), signal.end(), fft.input());
  fft.execute();
  std::vector<double> mag(static_cast<std::size_t>(fft.bins()));
  for (int k = 0; k < fft.bins(); ++k) mag[static_cast<std::size_t>(k)] = std::sqrt(fft.power(k));
  return mag;
}

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

Matrix mel_filterbank(int n_mels, int fft_size, int sample_rate, double fmin, double fmax, MelNorm norm) {
  const int n_bins = fft_size / 2 + 1;
  if (n_mels < 1 || n_mels > n_bins) {
    throw Error(ErrorCode::kInvalidArgument, "mel band count must be in [1, fft_size/2+1]");
  }
  if (fmax < 0.0) fmax = sample_rate / 2.0;
  const double mel_lo = hz_to_mel(fmin);
  const double mel_hi = hz_to_mel(fmax);
  std::vector<double> edges(static_cast<std::size_t>(n_mels + 2));
  for (int i = 0; i < n_mels + 2; ++i) {
    edges[static_cast<std::size_t>(i)] = mel_to_hz(mel_lo + (mel_hi - mel_lo) * i / (n_mels + 1));
  }
  Matrix fb = Matrix::Zero(n_mels, n_bins);
  const double bin_hz = static_cast<double>(sample_rate) / fft_size;
  for (int m = 0; m < n_mels; ++m) {
    const double left = edges[static_cast<std::size_t>(m)];
    const double centre = edges[static_cast<std::size_t>(m + 1)];
    const double right = edges[static_cast<std::size_t>(m + 2)];
    const double scale = norm == MelNorm::kArea ? 2.0 / (right - left) : 1.0;
    for (int k = 0; k < n_bins; ++k) {
      const double f = k * bin_hz;
      const double rise = (f - left) / (centre - left);
      const double fall = (right - f) / (right - centre);
      fb(m, k) = scale * std::max(0.0, std::min(rise, fall));
    }
  }
  return fb;
}

SpectrogramImage spectrogram(const AudioClip& clip, BinKind kind, int n_bins, const StftParams& stft) {
  SpectrogramImage img;
  img.bin_kind = kind;
  img.stft = stft;
  img.sample_rate = clip.sample_rate;
  Matrix power = power_stft(clip, stft);
  if (kind == BinKind::kLinear) {
    img.n_bins = static_cast<int>(power.cols());
    img.values = std::move(power);
    return img;
  }
  const Matrix fb = mel_filterbank(n_bins, stft.fft_size, clip.sample_rate);
  img.n_bins = n_bins;
  img.values = (power * fb.transpose()).unaryExpr([](double v) { return std::log(std::max(v, kLogFloor)); });
  return img;
}

}  // namespace respire::audio
