#pragma once

#include "pitchtrack/types.hpp"

namespace pitchtrack {

// Symmetric Hann window of the given length (endpoints are zero).
Vec hann_window(int length);

// Gaussian kernel truncated at the given radius, renormalized to unit sum.
Vec gaussian_kernel(double sigma, int radius);

// Truncation convention used wherever the source material gives only sigma.
inline int gaussian_radius(double sigma) {
  return static_cast<int>(std::ceil(3.0 * sigma));
}

// Normalized convolution of a single sequence: near the edges the kernel is
// renormalized over the in-range taps, so constant inputs stay constant.
Vec smooth(const Vec& x, const Vec& kernel);

// Smooth every column (per-frame, across bins) or every row (per-bin,
// across frames) of a plane with a normalized convolution.
Mat smooth_bins(const Mat& x, const Vec& kernel);
Mat smooth_frames(const Mat& x, const Vec& kernel);

// Vertex of the parabola through (-1, a), (0, b), (1, c).
// Returns the sub-bin offset in [-0.5, 0.5] for a strict peak at b.
struct ParabolicVertex {
  double offset = 0.0;
  double value = 0.0;
};
ParabolicVertex parabolic_vertex(double a, double b, double c);

}  // namespace pitchtrack
