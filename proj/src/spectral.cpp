#include "pitchtrack/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "pitchtrack/dsp.hpp"

namespace pitchtrack {

namespace {

constexpr double kGammaHz = 11.6;
constexpr int kMaxWindow = 4095;  // odd, keeps windows centered on a sample

double bin_midi(int j) { return kMinMidi + j * 12.0 / kBinsPerOctave; }

struct BinKernel {
  int radius;
  std::vector<double> cos_tab;  // window folded in, unit sine response
  std::vector<double> sin_tab;
};

// One kernel per log-frequency bin. The bandwidth term alpha*f matches the
// 60 bins/octave spacing; the constant gamma_hz term widens the low bins.
std::vector<BinKernel> make_kernels() {
  const double alpha =
      std::pow(2.0, 1.0 / kBinsPerOctave) - std::pow(2.0, -1.0 / kBinsPerOctave);
  std::vector<BinKernel> kernels(kNumBins);
  for (int j = 0; j < kNumBins; ++j) {
    const double f = midi_to_hz(bin_midi(j));
    const double bandwidth = alpha * f + kGammaHz;
    int len = static_cast<int>(std::lround(1.5 * kSampleRate / bandwidth));
    len = std::min(len, kMaxWindow);
    if (len % 2 == 0) ++len;
    len = std::max(len, 3);
    const int radius = len / 2;
    Vec w = hann_window(len);
    const double scale = 2.0 / w.sum();
    BinKernel k;
    k.radius = radius;
    k.cos_tab.resize(len);
    k.sin_tab.resize(len);
    for (int t = 0; t < len; ++t) {
      const double phase = 2.0 * M_PI * f * (t - radius) / kSampleRate;
      k.cos_tab[t] = scale * w[t] * std::cos(phase);
      k.sin_tab[t] = scale * w[t] * std::sin(phase);
    }
    kernels[j] = std::move(k);
  }
  return kernels;
}

const std::vector<BinKernel>& kernels() {
  static const std::vector<BinKernel> k = make_kernels();
  return k;
}

Mat db_of(const Mat& m) {
  return 20.0 * m.max(kLogFloor).log10();
}

}  // namespace

Vec spectrogram_bin_freqs() {
  Vec f(kNumBins);
  for (int j = 0; j < kNumBins; ++j) f[j] = midi_to_hz(bin_midi(j));
  return f;
}

MagnitudeSpectrogram compute_spectrogram(const AudioBuffer& audio) {
  if (audio.samples.empty())
    throw std::invalid_argument("compute_spectrogram: empty audio");
  for (double s : audio.samples) {
    if (!std::isfinite(s))
      throw std::invalid_argument("compute_spectrogram: non-finite sample");
  }
  AudioBuffer a =
      audio.sample_rate == kSampleRate ? audio : resample(audio, kSampleRate);

  const int n = static_cast<int>(a.samples.size());
  const int nf = (n + kHopSamples - 1) / kHopSamples;
  const int pad = kMaxWindow / 2 + 1;
  std::vector<double> x(n + 2 * pad, 0.0);
  for (int i = 0; i < n; ++i) x[pad + i] = a.samples[i] * kAudioScale;

  MagnitudeSpectrogram out;
  out.bin_freqs = spectrogram_bin_freqs();
  out.data.resize(kNumBins, nf);
  const auto& ks = kernels();

#pragma omp parallel for schedule(static)
  for (int i = 0; i < nf; ++i) {
    const int center = pad + i * kHopSamples;
    for (int j = 0; j < kNumBins; ++j) {
      const BinKernel& k = ks[j];
      const double* seg = x.data() + center - k.radius;
      double re = 0.0, im = 0.0;
      const int len = 2 * k.radius + 1;
      for (int t = 0; t < len; ++t) {
        re += seg[t] * k.cos_tab[t];
        im += seg[t] * k.sin_tab[t];
      }
      out.data(j, i) = std::sqrt(re * re + im * im);
    }
  }
  return out;
}

Mat spectral_variation(const MagnitudeSpectrogram& m) {
  const int nf = static_cast<int>(m.data.cols());
  Mat vs(kNumBins, nf);
  Vec cum = Vec::Zero(kNumBins);
  for (int i = 0; i < nf; ++i) {
    cum += m.data.col(i);
    vs.col(i) = 20.0 * (cum / (i + 1.0)).max(kLogFloor).log10();
  }
  vs = smooth_bins(vs, hann_window(33));
  for (int i = 0; i < nf; ++i) {
    vs.col(i) = (vs.col(i) - vs.col(i).maxCoeff()) / 3.0;
  }
  return vs;
}

Vec level_variation(const MagnitudeSpectrogram& m, bool causal) {
  const int nf = static_cast<int>(m.data.cols());
  const Mat db = db_of(m.data);
  Vec fmax(nf);
  for (int i = 0; i < nf; ++i) fmax[i] = db.col(i).maxCoeff();

  Vec cmax(nf);
  if (causal) {
    double run = fmax[0];
    for (int i = 0; i < nf; ++i) {
      run = std::max(run, fmax[i]);
      cmax[i] = run;
    }
  } else {
    cmax.setConstant(fmax.maxCoeff());
  }

  Vec compromise = fmax.max(cmax - 30.0);
  Vec smoothed = smooth(compromise, hann_window(33));

  Vec vl(nf);
  for (int i = 0; i < nf; ++i) {
    const int ahead = std::min(i + 16, nf - 1);
    vl[i] = 0.5 * (smoothed[i] + cmax[ahead]) - 6.0;
  }
  return vl;
}

Mat combine_noise_floor(const Mat& spectral, const Vec& level) {
  if (spectral.cols() != level.size())
    throw std::invalid_argument("combine_noise_floor: frame counts differ");
  Mat vls(spectral.rows(), spectral.cols());
  for (Eigen::Index i = 0; i < spectral.cols(); ++i) {
    vls.col(i) = spectral.col(i) * level[i];
  }
  return vls;
}

Mat whiten(const MagnitudeSpectrogram& m, const Mat& vls, double offset_db) {
  if (m.data.rows() != vls.rows() || m.data.cols() != vls.cols())
    throw std::invalid_argument("whiten: shape mismatch");
  return (db_of(m.data) - vls + offset_db).max(0.0);
}

Mat upsample4(const Mat& l) {
  const int nf = static_cast<int>(l.cols());
  const int nb = static_cast<int>(l.rows());
  Mat out(nb * kUpsampleFactor, nf);
  for (int j = 0; j < nb; ++j) {
    out.row(kUpsampleFactor * j) = l.row(j);
    const bool last = (j == nb - 1);
    for (int r = 1; r < kUpsampleFactor; ++r) {
      const double t = r / static_cast<double>(kUpsampleFactor);
      if (last) {
        out.row(kUpsampleFactor * j + r) = l.row(j);
      } else {
        out.row(kUpsampleFactor * j + r) = (1.0 - t) * l.row(j) + t * l.row(j + 1);
      }
    }
  }
  return out;
}

SpectrogramFamily analyze_audio(const AudioBuffer& audio, bool causal) {
  return family_from_magnitude(compute_spectrogram(audio), causal);
}

SpectrogramFamily family_from_magnitude(MagnitudeSpectrogram m, bool causal) {
  SpectrogramFamily fam;
  fam.m = std::move(m);
  fam.floor.spectral = spectral_variation(fam.m);
  fam.floor.level = level_variation(fam.m, causal);
  fam.floor.combined = combine_noise_floor(fam.floor.spectral, fam.floor.level);
  fam.white.l = whiten(fam.m, fam.floor.combined, 0.0);
  fam.white.l15 = whiten(fam.m, fam.floor.combined, 15.0);
  fam.white.l25 = whiten(fam.m, fam.floor.combined, 25.0);
  fam.l4 = upsample4(fam.white.l);
  return fam;
}

}  // namespace pitchtrack
