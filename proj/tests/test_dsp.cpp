#include "doctest.h"
#include "pitchtrack/audio.hpp"
#include "pitchtrack/dsp.hpp"

#include <cmath>
#include <cstdio>
#include <random>

using namespace pitchtrack;

TEST_CASE("hann window is symmetric with zero endpoints") {
  const Vec w = hann_window(33);
  CHECK(w.size() == 33);
  CHECK(w[0] == doctest::Approx(0.0));
  CHECK(w[32] == doctest::Approx(0.0));
  CHECK(w[16] == doctest::Approx(1.0));
  for (int i = 0; i < 33; ++i) CHECK(w[i] == doctest::Approx(w[32 - i]));
}

TEST_CASE("normalized smoothing keeps constants constant at the edges") {
  Vec x = Vec::Constant(40, 3.25);
  const Vec y = smooth(x, hann_window(33));
  for (int i = 0; i < 40; ++i) CHECK(y[i] == doctest::Approx(3.25).epsilon(1e-12));
}

TEST_CASE("smooth matches a direct normalized convolution oracle") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Vec x(50);
  for (int i = 0; i < 50; ++i) x[i] = unit(rng);
  const Vec kernel = gaussian_kernel(2.8, 9);
  const Vec y = smooth(x, kernel);
  for (int i = 0; i < 50; ++i) {
    double acc = 0.0, wsum = 0.0;
    for (int j = -9; j <= 9; ++j) {
      const int idx = i + j;
      if (idx < 0 || idx >= 50) continue;
      acc += kernel[j + 9] * x[idx];
      wsum += kernel[j + 9];
    }
    CHECK(y[i] == doctest::Approx(acc / wsum).epsilon(1e-12));
  }
}

TEST_CASE("gaussian kernel is unit sum and symmetric") {
  const Vec g = gaussian_kernel(3.0, 5);
  CHECK(g.size() == 11);
  CHECK(g.sum() == doctest::Approx(1.0).epsilon(1e-12));
  for (int i = 0; i < 11; ++i) CHECK(g[i] == doctest::Approx(g[10 - i]));
}

TEST_CASE("parabolic vertex analytic values") {
  // Symmetric peak: no shift.
  CHECK(parabolic_vertex(1, 3, 1).offset == doctest::Approx(0.0));
  // Spec-pinned asymmetric case: +1/6 bin.
  CHECK(parabolic_vertex(1, 3, 2).offset == doctest::Approx(1.0 / 6.0).epsilon(1e-12));
  // Vertex never leaves the bin for a strict peak.
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const double b = 1.0 + unit(rng);
    const double a = b - 1e-6 - unit(rng);
    const double c = b - 1e-6 - unit(rng);
    const double offset = parabolic_vertex(a, b, c).offset;
    CHECK(std::abs(offset) <= 0.5 + 1e-9);
  }
}

TEST_CASE("wav round trip and downmix") {
  AudioBuffer audio;
  audio.sample_rate = 44100.0;
  audio.samples.resize(4410);
  for (size_t i = 0; i < audio.samples.size(); ++i) {
    audio.samples[i] = 0.5 * std::sin(2.0 * M_PI * 440.0 * i / 44100.0);
  }
  const std::string path = "test_roundtrip.wav";
  write_wav(path, audio);
  const AudioBuffer back = read_wav(path);
  REQUIRE(back.samples.size() == audio.samples.size());
  CHECK(back.sample_rate == doctest::Approx(44100.0));
  for (size_t i = 0; i < back.samples.size(); i += 97) {
    CHECK(back.samples[i] == doctest::Approx(audio.samples[i]).epsilon(1e-3));
  }
  std::remove(path.c_str());
}

TEST_CASE("resampler preserves a sine within the passband") {
  AudioBuffer audio;
  audio.sample_rate = 48000.0;
  audio.samples.resize(9600);
  for (size_t i = 0; i < audio.samples.size(); ++i) {
    audio.samples[i] = std::sin(2.0 * M_PI * 1000.0 * i / 48000.0);
  }
  const AudioBuffer out = resample(audio, 44100.0);
  CHECK(out.sample_rate == doctest::Approx(44100.0));
  // Compare against the analytic sine away from the edges.
  double err = 0.0;
  int n = 0;
  for (size_t i = 200; i + 200 < out.samples.size(); ++i) {
    const double expected = std::sin(2.0 * M_PI * 1000.0 * i / 44100.0);
    err += std::abs(out.samples[i] - expected);
    ++n;
  }
  CHECK(err / n < 0.01);
}
