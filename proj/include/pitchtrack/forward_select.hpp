#pragma once

#include "pitchtrack/kernel.hpp"
#include "pitchtrack/nn.hpp"

namespace pitchtrack {

// Labeled (track, frame, pitch bin) example for the summation network.
struct N1Example2 {
  int track = 0;
  int frame = 0;
  int pitch_bin = 0;  // Tentogram row
  double label = 0.0;
};

struct N1Corpus {
  std::vector<N1Example2> train;
  std::vector<N1Example2> validation;
  std::vector<const Mat*> l4;  // per track
};

struct ForwardSelectConfig {
  int target_size = 50;
  int candidate_lo = -800;  // -40 semitones at 20 bins/semitone
  int candidate_hi = 900;   // +45 semitones
  // Example subsampling for the two evaluation steps and the final fit.
  int screen_train_stride = 2900;
  int screen_val_stride = 500;
  int refine_stride = 100;
  int final_stride = 2;
  int refine_count = 45;  // candidates surviving the screening step
  nn::TrainConfig train;  // inner trainings (fresh seeded init per candidate)
};

struct ForwardSelectDiagnostics {
  std::vector<Vec> scores;           // raw X per iteration (interpolated gaps)
  std::vector<Vec> smoothed_scores;  // after the Hann-13 smoothing
  std::vector<int> selected;         // offset added per iteration
};

// Feature matrix: L4 levels at the kernel offsets plus the 15 DCT pitch
// components per example.
nn::Matrix n1_features(const std::vector<N1Example2>& examples,
                       const std::vector<const Mat*>& l4,
                       const std::vector<int>& indices, const Mat& basis);
nn::Vector n1_labels(const std::vector<N1Example2>& examples);

// Grows the kernel from the 11 partials (or `initial` when given) by
// forward selection over the 1701-candidate inter-partial grid, two
// evaluation steps per iteration, then fits the final weights, bias, and
// DCT whitening coefficients. A full initial kernel is returned unchanged.
PitchKernel forward_select_kernel(const N1Corpus& corpus,
                                  const ForwardSelectConfig& cfg,
                                  ForwardSelectDiagnostics* diagnostics = nullptr,
                                  const PitchKernel* initial = nullptr);

}  // namespace pitchtrack
