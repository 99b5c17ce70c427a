#pragma once

#include "pitchtrack/audio.hpp"
#include "pitchtrack/types.hpp"

namespace pitchtrack {

struct MagnitudeSpectrogram {
  Mat data;        // 518 bins x frames, linear magnitudes
  double sample_rate = kSampleRate;
  int hop = kHopSamples;
  Vec bin_freqs;   // Hz per bin, ratio 2^(1/60) between neighbors
};

struct NoiseFloor {
  Mat spectral;  // V^s, per-frame max is 0 after normalization
  Vec level;     // V^l, dB
  Mat combined;  // V^ls = V^s * V^l (per-frame vector-scalar product)
};

struct WhitenedSpectrogram {
  Mat l;    // dynamic range offsets 0 / 15 / 25 dB
  Mat l15;
  Mat l25;
};

// Everything downstream processing needs from one track.
struct SpectrogramFamily {
  MagnitudeSpectrogram m;
  NoiseFloor floor;
  WhitenedSpectrogram white;
  Mat l4;  // 2072 bins x frames
  int frames() const { return static_cast<int>(m.data.cols()); }
};

// Center frequencies of the 518-bin grid.
Vec spectrogram_bin_freqs();

// Magnitudes below this floor are clamped before any log.
constexpr double kLogFloor = 1e-10;

// Log-frequency magnitude spectrogram: 60 bins/octave from MIDI 26,
// hop 256 samples at 44.1 kHz. Input at other rates is resampled first.
// Per-bin analysis windows widen toward low frequencies following
// B(f) = alpha*f + gamma_hz, capped so no window exceeds 4095 samples.
MagnitudeSpectrogram compute_spectrogram(const AudioBuffer& audio);

// V^s: dB spectrum of the causal cumulative mean, smoothed across
// frequency with a 33-bin Hann window, normalized per frame and reduced.
Mat spectral_variation(const MagnitudeSpectrogram& m);

// V^l: compromise between framewise max level and cumulative max level,
// with a 16-frame look-ahead. In non-causal mode the cumulative max seed
// is the whole-track maximum.
Vec level_variation(const MagnitudeSpectrogram& m, bool causal = false);

// V^ls from its parts.
Mat combine_noise_floor(const Mat& spectral, const Vec& level);

// max{20*log10 M - V^ls + offset_db, 0}
Mat whiten(const MagnitudeSpectrogram& m, const Mat& vls, double offset_db);

// Linear interpolation along frequency to 4x resolution; original bins
// are preserved exactly and the trailing rows repeat the last bin.
Mat upsample4(const Mat& l);

// Full frontend for one track.
SpectrogramFamily analyze_audio(const AudioBuffer& audio, bool causal = false);

// Recomputes whitening and L4 from an (possibly refiltered) M.
SpectrogramFamily family_from_magnitude(MagnitudeSpectrogram m, bool causal = false);

}  // namespace pitchtrack
