#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "pitchtrack/contours.hpp"
#include "pitchtrack/types.hpp"

namespace pitchtrack {

// Tap sets used by the onset/offset feature extractors.
namespace taps {
const std::vector<int>& t1();      // {-13 -8 -4 -2 0 2 4 8 13}
const std::vector<int>& t2();      // -40..40 step 2, 41 taps
const std::vector<int>& t4();      // {-12 -8 -4 0 4 8}
const std::vector<int>& t4_star(); // t4 shifted two frames forward
const std::vector<int>& f1();      // bins -186..306 step 2, 247 taps
}  // namespace taps

// Frequency smoothing applied to the spectrogram before contour-relative
// sampling, so skipped bins still contribute.
Mat smooth_spectrum_3tap(const Mat& plane);  // weights {0.25 0.5 0.25}

// Differences of the N_2 hidden activations between consecutive T_1 taps
// (8 per neuron) plus the 14 raw values at the evaluated frame.
Vec neural_flux(const Contour& contour, int t);

// Contour-relative spectral flux from the 3-tap smoothed L15: differences
// over every other T_4 index (4 x 247) plus the 247 levels at frame 0.
Vec spectral_flux(const Mat& l15_smooth, const Contour& contour, int t);

// Absolute first differences of the contour pitch at T_2 taps.
Vec pitch_flux(const Contour& contour, int t);
// Signed first differences of V^l at T_2 taps.
Vec level_flux(const Vec& vl, int t);

constexpr int kOnsetInputSize = 1487;
extern const char* kOnsetLayoutTag;

// N_3 / N_4 input: N_2 outputs at T_2, neural flux, spectral flux, pitch
// flux, level flux, then local time index, distance to the region end, and
// region mean pitch.
Vec assemble_onset_input(const Contour& contour, const Mat& l15_smooth,
                         const Vec& vl, int t);

// Smooth thresholding: shift by -z-r, exponential below zero, identity
// above, shift back by +r. Positive everywhere, C1 at the branch point.
double smooth_threshold(double x, double z = -4.8, double r = 1.0);

struct PeakPickParams {
  double z = -4.8;
  double sigma = 2.8;
  double threshold = 1.2;
  double r = 1.0;
};

struct OnsetEvent {
  int contour_id = 0;
  double frame = 0.0;  // absolute, fractional via parabolic interpolation
  double pitch_cents = 0.0;
  double strength = 0.0;  // OCS value at the peak
};

// OCS from a raw onset curve: smooth threshold then Gaussian smoothing.
Vec onset_curve_smooth(const Vec& oc, const PeakPickParams& params);

// Strict local maxima of the OCS above the threshold; the onset curve is
// indexed by contour-local frame.
std::vector<OnsetEvent> pick_onsets(const Vec& oc, const Contour& contour,
                                    int contour_id, const PeakPickParams& params);

// Grid-search score for peak-picking parameters (recall-weighted).
double onset_param_score(double recall, double precision);

// --- Stage-2 offset features ----------------------------------------------

constexpr int kOffsetInputSize = 153;
extern const char* kOffsetLayoutTag;

// Walks a note frame by frame from its onset, maintaining the cumulative
// quantities that reset at the note start. step() must be called with
// consecutive frames.
class OffsetFeatureAccumulator {
 public:
  // ofc holds the N_4 output per contour-local frame; kernel levels are
  // looked up per frame at the contour pitch.
  OffsetFeatureAccumulator(const Contour& contour, const Vec& ofc,
                           const Mat& l4, const std::vector<int>& kernel_indices,
                           int onset_frame);
  Vec step(int t);

 private:
  const Contour& contour_;
  const Vec& ofc_;
  const Mat& l4_;
  const std::vector<int>& kernel_indices_;
  int onset_frame_;
  int expected_t_;
  int count_ = 0;
  Vec hidden_sum_;
  double out_sum_ = 0.0;
  double ofc_sum_ = 0.0, ofc_sum_01_ = 0.0, ofc_sum_02_ = 0.0;
  Vec kl_sum_;
};

struct OffsetDecisionParams {
  double sigma = 4.3;
  double threshold = 0.47;
};

// First frame whose Gaussian-smoothed stage-2 activation exceeds the
// threshold; falls back to the last frame when no crossing occurs.
// Returns an index into the activations vector.
int decide_offset(const Vec& activations, const OffsetDecisionParams& params);

// --- Training annotation ----------------------------------------------------

struct NoteAnnotation {
  double onset_s = 0.0;
  double offset_s = 0.0;
  double pitch_midi = 0.0;
  int instrument = 0;
};

struct FrameTargets {
  Vec target;         // per contour-local frame
  std::vector<char> use;  // 0 = excluded from training
};

// Onset targets: 1 where the frame matches an annotated onset quantized to
// the frame grid with pitch within 55 cents; +-7 surrounding frames are
// excluded; surviving negatives are randomly subsampled.
FrameTargets annotate_onset_targets(const Contour& contour,
                                    const std::vector<NoteAnnotation>& notes,
                                    std::uint64_t seed,
                                    double negative_keep_rate = 0.05);

// N_4 targets: Hann bumps of width 13 centered at annotated offsets whose
// pitch matches the contour.
FrameTargets annotate_offset_targets(const Contour& contour,
                                     const std::vector<NoteAnnotation>& notes);

// N_5 targets for one note starting at a correctly detected onset: 0 before
// the annotated offset, 1 after, with a 5-frame linear ramp. Returns
// nothing when the note must be discarded (an intervening same-pitch
// annotated offset); drops the last 4 frames when the next same-pitch onset
// follows within 4 frames of the annotated offset.
std::optional<FrameTargets> annotate_offset_stage2_targets(
    const Contour& contour, int onset_frame, int end_frame,
    const NoteAnnotation& matched, const std::vector<NoteAnnotation>& notes);

}  // namespace pitchtrack
