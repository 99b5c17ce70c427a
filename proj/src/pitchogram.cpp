#include "pitchtrack/pitchogram.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "pitchtrack/dsp.hpp"

namespace pitchtrack {

const char* kN2LayoutTag = "n2-input/v1";

std::vector<TentativeF0> pick_tentative_f0s(const Mat& tentogram) {
  std::vector<TentativeF0> out;
  const int nf = static_cast<int>(tentogram.cols());
  const int nb = static_cast<int>(tentogram.rows());
  for (int i = 0; i < nf; ++i) {
    const auto col = tentogram.col(i);
    for (int j = 1; j + 1 < nb; ++j) {
      if (col[j] > col[j - 1] && col[j] > col[j + 1]) {
        const ParabolicVertex v = parabolic_vertex(col[j - 1], col[j], col[j + 1]);
        TentativeF0 t0;
        t0.frame = i;
        t0.bin = j;
        // 5 cents per Tentogram bin, rounded to the 1-cent grid.
        t0.pitch_cents = std::round(kMinCent + 5.0 * (j + v.offset));
        t0.value = col[j];
        out.push_back(t0);
      }
    }
  }
  return out;
}

Vec assemble_n2_input(double pitch_cents, int frame, const Mat& l4,
                      const std::vector<int>& kernel_indices,
                      const std::vector<const TentativeF0*>& frame_t0s) {
  const int ksize = static_cast<int>(kernel_indices.size());
  if (2 * ksize + 73 + 2 + 1 != kN2InputSize)
    throw std::invalid_argument("assemble_n2_input: kernel size must be 50");
  const int nl4 = static_cast<int>(l4.rows());
  const int pitch_bin =
      static_cast<int>(std::lround(midi_to_pitch_bin(cents_to_midi(pitch_cents))));

  Vec features(kN2InputSize);
  int at = 0;
  for (int k = 0; k < ksize; ++k) {
    const int src = pitch_bin + kPitchToL4Offset + kernel_indices[k];
    features[at++] = (src >= 0 && src < nl4) ? l4(src, frame) : 0.0;
  }
  for (int k = 0; k < ksize; ++k) {
    const int src = pitch_bin + kPitchToL4Offset + kernel_indices[k];
    double pooled = 0.0;
    for (int d = -6; d <= 6; ++d) {
      const int idx = src + d;
      if (idx >= 0 && idx < nl4) pooled = std::max(pooled, l4(idx, frame));
    }
    features[at++] = pooled;
  }
  double low_sum = 0.0, high_sum = 0.0;
  for (int s = -36; s <= 36; ++s) {
    const double center = pitch_cents + 100.0 * s;
    double best = 0.0;
    for (const TentativeF0* other : frame_t0s) {
      if (std::abs(other->pitch_cents - center) <= 50.0)
        best = std::max(best, other->value);
    }
    features[at++] = best;
  }
  for (const TentativeF0* other : frame_t0s) {
    const double d = other->pitch_cents - pitch_cents;
    if (d > 3650.0) high_sum += other->value;
    if (d < -3650.0) low_sum += other->value;
  }
  features[at++] = high_sum;
  features[at++] = low_sum;
  features[at++] = cents_to_midi(pitch_cents);
  return features;
}

Mat render_pitchogram(const std::vector<TentativeF0>& t0s, int frames) {
  Mat grid = Mat::Zero(kNumCentBins, frames);
  for (const TentativeF0& t0 : t0s) {
    if (!t0.classified) continue;
    const double activation = pitchogram_activation(t0.prelogit);
    if (activation <= 0.0) continue;
    const int bin = std::clamp(
        static_cast<int>(std::lround(t0.pitch_cents - kMinCent)), 0,
        kNumCentBins - 1);
    grid(bin, t0.frame) += activation;
  }
  // Hann-41 across pitch, unit peak so a lone deposit keeps its value.
  Vec w = hann_window(41);
  w /= w.maxCoeff();
  const int radius = 20;
  Mat out = Mat::Zero(kNumCentBins, frames);
  for (int i = 0; i < frames; ++i) {
    for (int b = 0; b < kNumCentBins; ++b) {
      const double v = grid(b, i);
      if (v <= 0.0) continue;
      const int lo = std::max(0, b - radius);
      const int hi = std::min(kNumCentBins - 1, b + radius);
      for (int d = lo; d <= hi; ++d) {
        out(d, i) += v * w[d - b + radius];
      }
    }
  }
  return out;
}

std::vector<FramePitch> threshold_framewise(const Mat& pitchogram,
                                            double threshold) {
  std::vector<FramePitch> out;
  const int nf = static_cast<int>(pitchogram.cols());
  const int nb = static_cast<int>(pitchogram.rows());
  for (int i = 0; i < nf; ++i) {
    const auto col = pitchogram.col(i);
    for (int j = 1; j + 1 < nb; ++j) {
      if (col[j] > threshold && col[j] > col[j - 1] && col[j] > col[j + 1]) {
        const ParabolicVertex v = parabolic_vertex(col[j - 1], col[j], col[j + 1]);
        out.push_back({i, cent_bin_to_cents(j + v.offset), v.value});
      }
    }
  }
  return out;
}

}  // namespace pitchtrack
