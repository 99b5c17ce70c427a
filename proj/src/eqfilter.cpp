#include "pitchtrack/eqfilter.hpp"

#include "pitchtrack/dsp.hpp"

namespace pitchtrack {

EqFilter random_eq_filter(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> odd_width(0, 120);   // odd 1..241
  std::uniform_int_distribution<int> center(1, kNumBins); // 1-based
  std::uniform_real_distribution<double> bump_amp(-7.0, 7.0);
  std::uniform_real_distribution<double> shelf_amp(-3.5, 3.5);

  EqFilter out;
  out.g_db = Vec::Zero(kNumBins);
  for (int i = 0; i < 10; ++i) {
    const int width = (2 * odd_width(rng) + 1) + 120;  // 121..361
    const int c = center(rng) - 1;
    const double a = bump_amp(rng);
    const Vec w = hann_window(width);
    const int half = width / 2;
    for (int k = 0; k < width; ++k) {
      const int bin = c - half + k;
      if (bin >= 0 && bin < kNumBins) out.g_db[bin] += a * w[k];
    }
  }
  // Shelf: full amplitude below the center, falling to zero linearly over
  // 60 bins centered at c.
  {
    const double a = shelf_amp(rng);
    const int c = center(rng) - 1;
    for (int bin = 0; bin < kNumBins; ++bin) {
      if (bin <= c - 30) {
        out.g_db[bin] += a;
      } else if (bin < c + 30) {
        out.g_db[bin] += a * (c + 30 - bin) / 60.0;
      }
    }
  }
  out.g_db -= out.g_db.mean();
  out.g = (out.g_db / 20.0).unaryExpr([](double v) { return std::pow(10.0, v); });
  return out;
}

MagnitudeSpectrogram apply_eq(const MagnitudeSpectrogram& m, const EqFilter& filter) {
  MagnitudeSpectrogram out = m;
  for (Eigen::Index i = 0; i < out.data.cols(); ++i) {
    out.data.col(i) *= filter.g;
  }
  return out;
}

}  // namespace pitchtrack
