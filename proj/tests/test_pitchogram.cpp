#include "doctest.h"
#include "pitchtrack/dsp.hpp"
#include "pitchtrack/pitchogram.hpp"

#include <random>
#include <set>

using namespace pitchtrack;

TEST_CASE("tentative f0 picking equals a brute-force local-maximum scan") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> dist(0.0, 1.0);
  Mat t(kNumPitchBins, 6);
  for (int r = 0; r < kNumPitchBins; ++r)
    for (int c = 0; c < 6; ++c) t(r, c) = dist(rng);
  const auto t0s = pick_tentative_f0s(t);

  std::set<std::pair<int, int>> got;
  for (const TentativeF0& t0 : t0s) got.insert({t0.frame, t0.bin});
  std::set<std::pair<int, int>> expected;
  for (int c = 0; c < 6; ++c) {
    for (int r = 1; r + 1 < kNumPitchBins; ++r) {
      if (t(r, c) > t(r - 1, c) && t(r, c) > t(r + 1, c)) expected.insert({c, r});
    }
  }
  CHECK(got == expected);
}

TEST_CASE("parabolic refinement of picked peaks") {
  Mat t = Mat::Zero(kNumPitchBins, 1);
  t(99, 0) = 1.0;
  t(100, 0) = 3.0;
  t(101, 0) = 1.0;
  auto t0s = pick_tentative_f0s(t);
  REQUIRE(t0s.size() == 1);
  CHECK(t0s[0].bin == 100);
  // Symmetric peak: pitch at the bin center.
  CHECK(t0s[0].pitch_cents == doctest::Approx(kMinCent + 5.0 * 100));

  t(101, 0) = 2.0;  // (1, 3, 2): vertex at +1/6 bin = +0.833 cents, rounds to +1
  t0s = pick_tentative_f0s(t);
  REQUIRE(t0s.size() == 1);
  CHECK(t0s[0].pitch_cents == doctest::Approx(kMinCent + 5.0 * 100 + 1.0));
  // Interpolated pitch stays within half a bin of the center.
  CHECK(std::abs(t0s[0].pitch_cents - (kMinCent + 500.0)) <= 2.5);
}

namespace {

TentativeF0 make_t0(int frame, double pitch_cents, double value) {
  TentativeF0 t0;
  t0.frame = frame;
  t0.bin = static_cast<int>((pitch_cents - kMinCent) / 5.0);
  t0.pitch_cents = pitch_cents;
  t0.value = value;
  return t0;
}

}  // namespace

TEST_CASE("n2 input layout: lone t0 and slot filling") {
  const Mat l4 = Mat::Constant(kNumL4Bins, 4, 1.5);
  std::vector<int> indices(50);
  // A stand-in kernel: offsets -49..0 keep everything in range.
  for (int i = 0; i < 50; ++i) indices[i] = i - 49;
  TentativeF0 self = make_t0(2, 6000.0, 2.0);
  std::vector<const TentativeF0*> alone = {&self};
  const Vec f = assemble_n2_input(6000.0, 2, l4, indices, alone);
  REQUIRE(f.size() == kN2InputSize);
  // Flat plane: pooled equals the kernel levels.
  for (int i = 0; i < 50; ++i) {
    CHECK(f[i] == doctest::Approx(1.5));
    CHECK(f[50 + i] == doctest::Approx(1.5));
  }
  // 73 slots: only the center slot holds the t0's own value.
  for (int s = -36; s <= 36; ++s) {
    const double expected = s == 0 ? 2.0 : 0.0;
    CHECK(f[100 + (s + 36)] == doctest::Approx(expected));
  }
  CHECK(f[173] == doctest::Approx(0.0));  // sums above +36 st
  CHECK(f[174] == doctest::Approx(0.0));  // sums below -36 st
  CHECK(f[175] == doctest::Approx(60.0));  // pitch in MIDI
}

TEST_CASE("n2 input slots match a scan oracle on a two-tone frame") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> dist(0.0, 2.0);
  Mat l4(kNumL4Bins, 3);
  for (int r = 0; r < kNumL4Bins; ++r)
    for (int c = 0; c < 3; ++c) l4(r, c) = dist(rng);
  std::vector<int> indices(50);
  for (int i = 0; i < 50; ++i) indices[i] = 2 * i - 30;

  TentativeF0 self = make_t0(1, 5200.0, 1.0);
  TentativeF0 octave = make_t0(1, 6400.0, 3.5);   // +12 semitones
  TentativeF0 near = make_t0(1, 5245.0, 0.7);     // +45 cents: lands in slot 0
  TentativeF0 far = make_t0(1, 9000.0, 2.2);      // +38 st: beyond the slots
  std::vector<const TentativeF0*> frame = {&self, &octave, &near, &far};
  const Vec f = assemble_n2_input(5200.0, 1, l4, indices, frame);

  CHECK(f[100 + 36] == doctest::Approx(1.0));       // slot 0: max(self, near)
  CHECK(f[100 + 36 + 12] == doctest::Approx(3.5));  // octave partner
  CHECK(f[173] == doctest::Approx(2.2));            // high sum
  CHECK(f[174] == doctest::Approx(0.0));
  // Pooled dominates the plain levels elementwise.
  for (int i = 0; i < 50; ++i) CHECK(f[50 + i] >= f[i]);

  // Oracle: every slot equals the max over t0s within 50 cents.
  for (int s = -36; s <= 36; ++s) {
    double expected = 0.0;
    for (const TentativeF0* t0 : frame) {
      if (std::abs(t0->pitch_cents - (5200.0 + 100.0 * s)) <= 50.0)
        expected = std::max(expected, t0->value);
    }
    CHECK(f[100 + (s + 36)] == doctest::Approx(expected));
  }
}

TEST_CASE("pitchogram rendering deposits, discards, and smooths") {
  std::vector<TentativeF0> t0s;
  TentativeF0 keep = make_t0(0, 6000.0, 1.0);
  keep.classified = true;
  keep.prelogit = 1.4;  // activation 5.0
  TentativeF0 drop = make_t0(0, 7000.0, 1.0);
  drop.classified = true;
  drop.prelogit = -3.6;  // activation exactly 0: discarded
  t0s.push_back(keep);
  t0s.push_back(drop);
  const Mat grid = render_pitchogram(t0s, 2);
  REQUIRE(grid.rows() == kNumCentBins);
  const int bin = static_cast<int>(6000.0 - kMinCent);
  CHECK(grid(bin, 0) == doctest::Approx(5.0));  // unit-peak smoothing
  CHECK(grid(static_cast<int>(7000.0 - kMinCent), 0) == 0.0);
  CHECK(grid.col(1).abs().maxCoeff() == 0.0);
  // Hann-41 bump: support extends 20 bins, zero at 21.
  CHECK(grid(bin + 20, 0) > 0.0);
  CHECK(grid(bin + 21, 0) == 0.0);

  // Superposition of two nearby deposits equals the additive oracle.
  TentativeF0 partner = make_t0(0, 6010.0, 1.0);
  partner.classified = true;
  partner.prelogit = 0.4;  // activation 4.0
  t0s.push_back(partner);
  const Mat grid2 = render_pitchogram(t0s, 2);
  Vec w = hann_window(41);
  w /= w.maxCoeff();
  for (int b = bin - 25; b <= bin + 40; ++b) {
    double expected = 0.0;
    if (std::abs(b - bin) <= 20) expected += 5.0 * w[b - bin + 20];
    const int bin2 = bin + 10;
    if (std::abs(b - bin2) <= 20) expected += 4.0 * w[b - bin2 + 20];
    CHECK(grid2(b, 0) == doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("framewise thresholding reports peaks above the threshold") {
  Mat grid = Mat::Zero(kNumCentBins, 2);
  grid(1000, 0) = 2.0;
  grid(999, 0) = 1.0;
  grid(1001, 0) = 1.0;
  grid(3000, 0) = 0.5;
  grid(2999, 0) = 0.2;
  grid(3001, 0) = 0.2;
  const auto all = threshold_framewise(grid, 0.0);
  CHECK(all.size() == 2);
  const auto some = threshold_framewise(grid, 1.0);
  REQUIRE(some.size() == 1);
  CHECK(some[0].frame == 0);
  CHECK(some[0].cents == doctest::Approx(cent_bin_to_cents(1000)));
  const auto none = threshold_framewise(grid, 10.0);
  CHECK(none.empty());
}
