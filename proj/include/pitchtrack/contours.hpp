#pragma once

#include <functional>
#include <vector>

#include "pitchtrack/types.hpp"

namespace pitchtrack {

// An 8-connected component of the Pitchogram's positive support.
struct Region {
  std::vector<std::pair<int, int>> cells;  // (cent bin, frame)
  double centroid_cents = 0.0;             // activation-weighted
  int start_frame = 0;
  int end_frame = 0;
};

std::vector<Region> extract_regions(const Mat& pitchogram);

// Regions within 50 cents whose start follows 0..130 ms after an earlier
// region's end are merged, recomputing pitch and extent after every merge,
// until a fixpoint is reached.
constexpr int kMergeGapFrames = 22;  // floor(0.130 s / frame)
std::vector<Region> merge_regions(std::vector<Region> regions,
                                  const Mat& pitchogram);

enum class ContourSource { kRidge, kInterpolated, kExtrapolated };

struct ContourFrame {
  int frame = 0;
  double bin = 0.0;          // cent-bin index, fractional in gaps
  double pitch_cents = 0.0;
  double activation = 0.0;   // f0 activation (Pitchogram scale)
  double n2_output = 0.0;    // sigmoid output of N_2
  Vec n2_hidden;             // last hidden layer of N_2
  ContourSource source = ContourSource::kRidge;
};

// A per-frame pitch ridge covering [region start - 30, region end] with no
// gaps; the leading 30 frames repeat the first ridge pitch.
struct Contour {
  int start_frame = 0;   // includes the backward extension
  int region_start = 0;
  int end_frame = 0;
  double mean_pitch_cents = 0.0;
  std::vector<ContourFrame> frames;

  int length() const { return static_cast<int>(frames.size()); }
  const ContourFrame& at(int frame) const {  // clamped to the span
    const int idx = std::clamp(frame - start_frame, 0, length() - 1);
    return frames[idx];
  }
};

constexpr int kContourBackExtension = 30;

// Pitch evaluation for contour frames. Implementations reuse previously
// classified t0s when one exists near the requested bin and run N_2 fresh
// otherwise.
struct ContourEval {
  double pitch_cents = 0.0;
  double activation = 0.0;
  double n2_output = 0.0;
  Vec n2_hidden;
};
using ContourEvaluator = std::function<ContourEval(int frame, double bin)>;

Contour extract_ridge(const Region& region, const Mat& pitchogram,
                      const ContourEvaluator& evaluate);

}  // namespace pitchtrack
