#pragma once

#include <Eigen/Dense>
#include <cmath>

namespace pitchtrack {

// Planes are stored bins x frames so that one column is one time frame.
using Mat = Eigen::ArrayXXd;
using Vec = Eigen::ArrayXd;

// Analysis grid. All timing in the system lives on this grid.
constexpr double kSampleRate = 44100.0;
constexpr int kHopSamples = 256;  // ~5.8 ms/frame
constexpr double kFrameSeconds = kHopSamples / kSampleRate;

// Log-frequency spectrogram: 60 bins/octave starting at MIDI 26.
constexpr int kNumBins = 518;
constexpr int kBinsPerOctave = 60;
constexpr double kMinMidi = 26.0;

// Upsampled spectrogram L4: 20 bins/semitone (5 cents/bin).
constexpr int kUpsampleFactor = 4;
constexpr int kNumL4Bins = kNumBins * kUpsampleFactor;  // 2072

// Pitch range used by the Tentogram: MIDI 25.85..103.95, 5 cents/bin.
constexpr int kNumPitchBins = 1563;
constexpr double kMinPitchMidi = 25.85;
constexpr double kMaxPitchMidi = 103.95;
// Pitch bin b sits 3 L4 bins below L4 bin b: (25.85 - 26.0) * 20 = -3.
constexpr int kPitchToL4Offset = -3;

// Pitchogram: 1 cent/bin over the same pitch range.
constexpr int kNumCentBins = 7810;
constexpr double kMinCent = 2585.0;  // kMinPitchMidi * 100

// Audio is scaled to 16-bit full range before analysis so that frame
// levels of ordinary material land in positive dB.
constexpr double kAudioScale = 32768.0;

inline double midi_to_hz(double midi) {
  return 440.0 * std::pow(2.0, (midi - 69.0) / 12.0);
}

inline double hz_to_midi(double hz) {
  return 69.0 + 12.0 * std::log2(hz / 440.0);
}

inline double frame_to_seconds(double frame) { return frame * kFrameSeconds; }

inline int seconds_to_frame(double seconds) {
  return static_cast<int>(std::lround(seconds / kFrameSeconds));
}

// Cents here are absolute MIDI cents (A4 = 6900).
inline double midi_to_cents(double midi) { return midi * 100.0; }
inline double cents_to_midi(double cents) { return cents / 100.0; }

// Pitch bin (0-based Tentogram row) <-> MIDI.
inline double pitch_bin_to_midi(double bin) { return kMinPitchMidi + bin * 0.05; }
inline double midi_to_pitch_bin(double midi) { return (midi - kMinPitchMidi) * 20.0; }

// Cent bin (0-based Pitchogram row) <-> MIDI cents.
inline double cent_bin_to_cents(double bin) { return kMinCent + bin; }

// Spectrogram bin (518-grid) closest to a MIDI pitch.
inline int midi_to_spec_bin(double midi) {
  return static_cast<int>(std::lround((midi - kMinMidi) * kBinsPerOctave / 12.0));
}

}  // namespace pitchtrack
