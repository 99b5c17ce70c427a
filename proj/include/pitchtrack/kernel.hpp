#pragma once

#include <string>
#include <vector>

#include "pitchtrack/types.hpp"

namespace pitchtrack {

// Sparse pitch kernel: signed L4 bin offsets relative to the evaluated
// pitch bin, one weight per offset, plus the bias of the summation network.
struct PitchKernel {
  std::vector<int> indices;     // strictly sorted, unique
  std::vector<double> weights;  // same length as indices
  double bias = 0.0;
  std::vector<double> w_dct;    // 15 whitening weights (may be empty)

  int size() const { return static_cast<int>(indices.size()); }
  void validate() const;  // throws on malformed kernels
};

// L4 bin offset of the nth partial: round(log2(n) * bpo * uf).
int partial_bin_index(int n, int bpo = kBinsPerOctave, int uf = kUpsampleFactor);

// The 11 pre-determined partial offsets (n = 1..11).
std::vector<int> partial_offsets();

// The published 50-entry kernel with its constant term.
PitchKernel reference_kernel();

// Versioned text format: "(index weight)" pairs, bias, optional w_dct row.
void save_kernel(const std::string& path, const PitchKernel& kernel);
PitchKernel load_kernel(const std::string& path);

// --- Tentogram whitening -------------------------------------------------

// DCT-III components 1..15 (no DC) evaluated on the 1563-bin pitch grid.
Mat dct_basis();

// 1-based index into the pitch grid for a MIDI pitch in 25.85..103.95;
// throws outside the range.
int dct_index(double midi_pitch);

// W = W_DCT x B_DCT.
Vec whitening_vector(const Vec& w_dct, const Mat& basis);

// --- Spectral summation --------------------------------------------------

// L4 copies shifted by -indices[k], cropped to the 1563-bin pitch range.
struct ShiftedStack {
  std::vector<Mat> slices;  // one 1563 x frames slice per kernel index
  int frames() const {
    return slices.empty() ? 0 : static_cast<int>(slices[0].cols());
  }
};

ShiftedStack build_shifted_stack(const Mat& l4, const std::vector<int>& indices);

// Kernel levels K_L for one (pitch bin, frame) without materializing the
// stack: L4 values at pitch_bin + kPitchToL4Offset + indices[k], 0 outside.
Vec kernel_levels(const Mat& l4, int pitch_bin, int frame,
                  const std::vector<int>& indices);

// Weighted sum of the stack plus the per-bin constant c = W + bias + 3.5,
// clamped at 0 and smoothed with a truncated 11x11 Gaussian (sigma = 3).
Mat compute_tentogram(const ShiftedStack& stack, const std::vector<double>& weights,
                      double bias, const Vec& whitening);

// Same result computed directly from L4 (no stack allocation).
Mat tentogram_from_l4(const Mat& l4, const PitchKernel& kernel, const Vec& whitening);

}  // namespace pitchtrack
