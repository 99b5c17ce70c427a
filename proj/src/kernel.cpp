#include "pitchtrack/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "pitchtrack/dsp.hpp"

namespace pitchtrack {

namespace {

// Published kernel: 50 active bin offsets with their weights.
constexpr int kRefSize = 50;
constexpr int kRefIndices[kRefSize] = {
    -705, -655, -631, -624, -601, -559, -430, -429, -407, -388,
    -324, -238, -159, -142, -127, -117, -72,  0,    9,    25,
    133,  217,  240,  293,  315,  327,  333,  380,  434,  435,
    448,  480,  497,  505,  506,  520,  534,  535,  557,  593,
    620,  674,  720,  732,  738,  761,  797,  802,  830,  874};
constexpr double kRefWeights[kRefSize] = {
    -0.0207, 0.0018,  -0.0109, 0.0291,  0.0072,  -0.0511, -0.1713, 0.1418,
    0.0079,  -0.0582, -0.0020, -0.0961, 0.0091,  -0.0380, 0.0043,  -0.0054,
    -0.0313, 0.1152,  0.0392,  -0.0268, -0.0236, -0.0227, 0.0415,  -0.0513,
    -0.0447, -0.0094, -0.0063, 0.0439,  -0.0769, 0.0045,  -0.0213, 0.0192,
    -0.0103, 0.0128,  -0.0451, -0.0209, 0.0119,  -0.0226, 0.0491,  -0.0559,
    -0.0053, 0.0612,  0.0051,  -0.0192, -0.0253, 0.0046,  -0.0058, 0.0064,
    0.0742,  0.1063};
constexpr double kRefBias = -5.2314;

}  // namespace

void PitchKernel::validate() const {
  if (indices.size() != weights.size())
    throw std::invalid_argument("kernel: index/weight count mismatch");
  if (indices.empty()) throw std::invalid_argument("kernel: empty");
  for (size_t i = 1; i < indices.size(); ++i) {
    if (indices[i] <= indices[i - 1])
      throw std::invalid_argument("kernel: indices must be strictly sorted");
  }
  for (int p : partial_offsets()) {
    if (!std::binary_search(indices.begin(), indices.end(), p))
      throw std::invalid_argument("kernel: missing partial offset " +
                                  std::to_string(p));
  }
  if (!w_dct.empty() && w_dct.size() != 15)
    throw std::invalid_argument("kernel: w_dct must have 15 entries");
}

int partial_bin_index(int n, int bpo, int uf) {
  if (n < 1) throw std::invalid_argument("partial_bin_index: n must be >= 1");
  return static_cast<int>(std::lround(std::log2(double(n)) * bpo * uf));
}

std::vector<int> partial_offsets() {
  std::vector<int> out;
  for (int n = 1; n <= 11; ++n) out.push_back(partial_bin_index(n));
  return out;
}

PitchKernel reference_kernel() {
  PitchKernel k;
  k.indices.assign(kRefIndices, kRefIndices + kRefSize);
  k.weights.assign(kRefWeights, kRefWeights + kRefSize);
  k.bias = kRefBias;
  k.validate();
  return k;
}

void save_kernel(const std::string& path, const PitchKernel& kernel) {
  kernel.validate();
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write kernel file: " + path);
  out << "pitchtrack-kernel v1\n";
  out << "size " << kernel.size() << "\n";
  out.precision(17);
  for (int i = 0; i < kernel.size(); ++i) {
    out << kernel.indices[i] << " " << kernel.weights[i] << "\n";
  }
  out << "bias " << kernel.bias << "\n";
  if (!kernel.w_dct.empty()) {
    out << "wdct";
    for (double v : kernel.w_dct) out << " " << v;
    out << "\n";
  }
}

PitchKernel load_kernel(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open kernel file: " + path);
  std::string header;
  std::getline(in, header);
  if (header != "pitchtrack-kernel v1")
    throw std::runtime_error("unsupported kernel format: " + header);
  std::string key;
  int size = 0;
  in >> key >> size;
  if (key != "size" || size < 1)
    throw std::runtime_error("malformed kernel file: " + path);
  PitchKernel k;
  k.indices.resize(size);
  k.weights.resize(size);
  for (int i = 0; i < size; ++i) in >> k.indices[i] >> k.weights[i];
  in >> key;
  if (key != "bias") throw std::runtime_error("kernel file missing bias");
  in >> k.bias;
  if (in >> key && key == "wdct") {
    k.w_dct.resize(15);
    for (double& v : k.w_dct) in >> v;
  }
  if (!in && !in.eof()) throw std::runtime_error("malformed kernel file: " + path);
  k.validate();
  return k;
}

Mat dct_basis() {
  Mat basis(15, kNumPitchBins);
  for (int c = 1; c <= 15; ++c) {
    for (int n = 0; n < kNumPitchBins; ++n) {
      basis(c - 1, n) = std::cos(M_PI * c * (n + 0.5) / kNumPitchBins);
    }
  }
  return basis;
}

int dct_index(double midi_pitch) {
  if (midi_pitch < kMinPitchMidi || midi_pitch > kMaxPitchMidi)
    throw std::invalid_argument("dct_index: pitch outside 25.85..103.95");
  int i = static_cast<int>(std::lround((midi_pitch - 25.8) * 20.0));
  return std::clamp(i, 1, kNumPitchBins);
}

Vec whitening_vector(const Vec& w_dct, const Mat& basis) {
  if (w_dct.size() != basis.rows())
    throw std::invalid_argument("whitening_vector: shape mismatch");
  Vec w = Vec::Zero(basis.cols());
  for (Eigen::Index c = 0; c < basis.rows(); ++c) {
    w += w_dct[c] * basis.row(c).transpose();
  }
  return w;
}

ShiftedStack build_shifted_stack(const Mat& l4, const std::vector<int>& indices) {
  const int nf = static_cast<int>(l4.cols());
  const int nl4 = static_cast<int>(l4.rows());
  ShiftedStack stack;
  stack.slices.reserve(indices.size());
  for (int offset : indices) {
    Mat slice = Mat::Zero(kNumPitchBins, nf);
    for (int p = 0; p < kNumPitchBins; ++p) {
      const int src = p + kPitchToL4Offset + offset;
      if (src >= 0 && src < nl4) slice.row(p) = l4.row(src);
    }
    stack.slices.push_back(std::move(slice));
  }
  return stack;
}

Vec kernel_levels(const Mat& l4, int pitch_bin, int frame,
                  const std::vector<int>& indices) {
  const int nl4 = static_cast<int>(l4.rows());
  Vec out(static_cast<Eigen::Index>(indices.size()));
  for (size_t k = 0; k < indices.size(); ++k) {
    const int src = pitch_bin + kPitchToL4Offset + indices[k];
    out[static_cast<Eigen::Index>(k)] =
        (src >= 0 && src < nl4) ? l4(src, frame) : 0.0;
  }
  return out;
}

namespace {

Mat finish_tentogram(Mat raw, double bias, const Vec& whitening) {
  if (whitening.size() != kNumPitchBins)
    throw std::invalid_argument("tentogram: whitening vector has wrong size");
  const Vec c = whitening + bias + 3.5;
  for (Eigen::Index i = 0; i < raw.cols(); ++i) raw.col(i) += c;
  raw = raw.max(0.0);
  // 2-D Gaussian sigma = 3 truncated to 11x11, applied separably.
  const Vec g = gaussian_kernel(3.0, 5);
  return smooth_frames(smooth_bins(raw, g), g);
}

}  // namespace

Mat compute_tentogram(const ShiftedStack& stack, const std::vector<double>& weights,
                      double bias, const Vec& whitening) {
  if (stack.slices.size() != weights.size())
    throw std::invalid_argument("compute_tentogram: weight count mismatch");
  if (stack.slices.empty())
    throw std::invalid_argument("compute_tentogram: empty stack");
  Mat raw = Mat::Zero(kNumPitchBins, stack.frames());
  for (size_t k = 0; k < weights.size(); ++k) {
    raw += weights[k] * stack.slices[k];
  }
  return finish_tentogram(std::move(raw), bias, whitening);
}

Mat tentogram_from_l4(const Mat& l4, const PitchKernel& kernel, const Vec& whitening) {
  kernel.validate();
  const int nf = static_cast<int>(l4.cols());
  const int nl4 = static_cast<int>(l4.rows());
  Mat raw = Mat::Zero(kNumPitchBins, nf);
  for (int k = 0; k < kernel.size(); ++k) {
    const int offset = kPitchToL4Offset + kernel.indices[k];
    const double w = kernel.weights[k];
    const int lo = std::max(0, -offset);
    const int hi = std::min(kNumPitchBins, nl4 - offset);
    if (lo < hi) {
      raw.middleRows(lo, hi - lo) += w * l4.middleRows(lo + offset, hi - lo);
    }
  }
  return finish_tentogram(std::move(raw), kernel.bias, whitening);
}

}  // namespace pitchtrack
