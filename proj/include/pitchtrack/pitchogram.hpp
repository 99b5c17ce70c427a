#pragma once

#include <vector>

#include "pitchtrack/types.hpp"

namespace pitchtrack {

// A strict framewise local maximum of the Tentogram, refined by parabolic
// interpolation to 1-cent pitch resolution. N_2 results are attached once
// the t0 has been classified.
struct TentativeF0 {
  int frame = 0;
  int bin = 0;              // Tentogram row of the peak
  double pitch_cents = 0.0; // interpolated, rounded to 1 cent
  double value = 0.0;       // Tentogram value at (bin, frame)

  bool classified = false;
  double prelogit = 0.0;    // N_2 value before the output sigmoid
  double output = 0.0;      // sigmoid(prelogit)
  Vec hidden;               // last hidden layer of N_2
};

std::vector<TentativeF0> pick_tentative_f0s(const Mat& tentogram);

// N_2 input layout (176 features):
//   50 kernel levels, 50 pooled kernel levels (max within +-6 L4 bins),
//   73 co-occurring t0 maxima at -36..+36 semitones (+-50 cents each),
//   2 sums of t0 values beyond +-36.5 semitones, 1 pitch (MIDI).
constexpr int kN2InputSize = 176;
extern const char* kN2LayoutTag;

Vec assemble_n2_input(double pitch_cents, int frame, const Mat& l4,
                      const std::vector<int>& kernel_indices,
                      const std::vector<const TentativeF0*>& frame_t0s);

// Pitchogram activation of a classified t0; activations at or below zero
// are discarded from the grid.
inline double pitchogram_activation(double prelogit) { return prelogit + 3.6; }

// Deposits surviving activations at their cent bins and smooths each frame
// across pitch with a 41-bin Hann window scaled to unit peak.
Mat render_pitchogram(const std::vector<TentativeF0>& t0s, int frames);

// One framewise pitch estimate (also used for evaluation input).
struct FramePitch {
  int frame = 0;
  double cents = 0.0;
  double activation = 0.0;
};

// Strict per-frame local maxima of the grid above the threshold.
std::vector<FramePitch> threshold_framewise(const Mat& pitchogram, double threshold);

}  // namespace pitchtrack
