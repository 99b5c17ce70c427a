#include "pitchtrack/dsp.hpp"

#include <stdexcept>

namespace pitchtrack {

Vec hann_window(int length) {
  if (length < 1) throw std::invalid_argument("hann_window: length must be >= 1");
  Vec w(length);
  if (length == 1) {
    w[0] = 1.0;
    return w;
  }
  for (int n = 0; n < length; ++n) {
    w[n] = 0.5 - 0.5 * std::cos(2.0 * M_PI * n / (length - 1));
  }
  return w;
}

Vec gaussian_kernel(double sigma, int radius) {
  if (sigma <= 0.0) throw std::invalid_argument("gaussian_kernel: sigma must be > 0");
  Vec k(2 * radius + 1);
  for (int i = -radius; i <= radius; ++i) {
    k[i + radius] = std::exp(-0.5 * (i * i) / (sigma * sigma));
  }
  return k / k.sum();
}

namespace {

// Normalized 1-D convolution along a strided sequence.
void smooth_strided(const double* x, double* out, int n, const Vec& kernel,
                    int stride) {
  const int klen = static_cast<int>(kernel.size());
  const int radius = klen / 2;
  for (int i = 0; i < n; ++i) {
    double acc = 0.0;
    double wsum = 0.0;
    const int lo = std::max(0, i - radius);
    const int hi = std::min(n - 1, i - radius + klen - 1);
    for (int j = lo; j <= hi; ++j) {
      const double w = kernel[j - i + radius];
      acc += w * x[j * stride];
      wsum += w;
    }
    out[i * stride] = wsum > 0.0 ? acc / wsum : 0.0;
  }
}

}  // namespace

Vec smooth(const Vec& x, const Vec& kernel) {
  Vec out(x.size());
  smooth_strided(x.data(), out.data(), static_cast<int>(x.size()), kernel, 1);
  return out;
}

Mat smooth_bins(const Mat& x, const Vec& kernel) {
  Mat out(x.rows(), x.cols());
  for (Eigen::Index c = 0; c < x.cols(); ++c) {
    smooth_strided(x.col(c).data(), out.col(c).data(),
                   static_cast<int>(x.rows()), kernel, 1);
  }
  return out;
}

Mat smooth_frames(const Mat& x, const Vec& kernel) {
  Mat out(x.rows(), x.cols());
  const int n = static_cast<int>(x.cols());
  const int stride = static_cast<int>(x.rows());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    smooth_strided(x.data() + r, out.data() + r, n, kernel, stride);
  }
  return out;
}

ParabolicVertex parabolic_vertex(double a, double b, double c) {
  ParabolicVertex v;
  const double denom = a - 2.0 * b + c;
  if (denom == 0.0) {
    v.offset = 0.0;
    v.value = b;
    return v;
  }
  v.offset = 0.5 * (a - c) / denom;
  v.value = b - 0.25 * (a - c) * v.offset;
  return v;
}

}  // namespace pitchtrack
