#include "doctest.h"
#include "pitchtrack/dsp.hpp"
#include "pitchtrack/events.hpp"

#include <random>

using namespace pitchtrack;

namespace {

Contour make_contour(int start, int length, double pitch_cents,
                     std::uint64_t seed = 0, double jitter = 0.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  Contour c;
  c.start_frame = start;
  c.region_start = start + kContourBackExtension;
  c.end_frame = start + length - 1;
  c.mean_pitch_cents = pitch_cents;
  for (int i = 0; i < length; ++i) {
    ContourFrame f;
    f.frame = start + i;
    f.pitch_cents = pitch_cents + jitter * unit(rng);
    f.bin = f.pitch_cents - kMinCent;
    f.activation = 1.0;
    f.n2_output = 0.5 + 0.4 * (jitter > 0 ? unit(rng) : 0.0);
    f.n2_hidden = Vec::Zero(14);
    if (seed) {
      for (int k = 0; k < 14; ++k) f.n2_hidden[k] = unit(rng);
    }
    c.frames.push_back(std::move(f));
  }
  return c;
}

}  // namespace

TEST_CASE("tap sets have the published members") {
  CHECK(taps::t1() == std::vector<int>{-13, -8, -4, -2, 0, 2, 4, 8, 13});
  CHECK(taps::t2().size() == 41);
  CHECK(taps::t2().front() == -40);
  CHECK(taps::t2().back() == 40);
  CHECK(taps::t4() == std::vector<int>{-12, -8, -4, 0, 4, 8});
  CHECK(taps::t4_star() == std::vector<int>{-10, -6, -2, 2, 6, 10});
  CHECK(taps::f1().size() == 247);
  CHECK(taps::f1().front() == -186);
  CHECK(taps::f1().back() == 306);
}

TEST_CASE("neural flux: constant activations give zero differences") {
  Contour c = make_contour(0, 60, 6000.0);
  for (auto& f : c.frames) f.n2_hidden = Vec::Constant(14, 0.3);
  const Vec flux = neural_flux(c, 30);
  REQUIRE(flux.size() == 126);
  for (int i = 0; i < 112; ++i) CHECK(flux[i] == doctest::Approx(0.0));
  for (int i = 112; i < 126; ++i) CHECK(flux[i] == doctest::Approx(0.3));
}

TEST_CASE("neural flux: a step between taps -2 and 0 hits one difference") {
  Contour c = make_contour(0, 60, 6000.0);
  for (auto& f : c.frames) {
    f.n2_hidden = Vec::Zero(14);
    if (f.frame >= 30) f.n2_hidden[5] = 1.0;  // step at the evaluated frame
  }
  const Vec flux = neural_flux(c, 30);
  // Neuron 5's differences live at [5*8, 5*8+8); T1 pair (-2 -> 0) is m=3.
  for (int m = 0; m < 8; ++m) {
    CHECK(flux[5 * 8 + m] == doctest::Approx(m == 3 ? 1.0 : 0.0));
  }
}

TEST_CASE("neural flux matches an index-and-subtract oracle") {
  Contour c = make_contour(10, 80, 6000.0, 77, 5.0);
  const Vec flux = neural_flux(c, 45);
  const auto& t1 = taps::t1();
  int at = 0;
  for (int n = 0; n < 14; ++n) {
    for (size_t m = 0; m + 1 < t1.size(); ++m) {
      const double expected =
          c.at(45 + t1[m + 1]).n2_hidden[n] - c.at(45 + t1[m]).n2_hidden[n];
      CHECK(flux[at++] == doctest::Approx(expected));
    }
  }
}

TEST_CASE("spectral flux: constant plane gives zero flux, constant levels") {
  const Mat l15 = Mat::Constant(kNumBins, 100, 2.0);
  const Mat smooth = smooth_spectrum_3tap(l15);
  Contour c = make_contour(20, 60, 6000.0);
  const Vec flux = spectral_flux(smooth, c, 50);
  REQUIRE(flux.size() == 5 * 247);
  // Center taps: all diffs 0 (edge bins of F_1 may leave the spectrogram).
  const int base = midi_to_spec_bin(60.0);
  for (int k = 0; k < 247; ++k) {
    const int bin = base + taps::f1()[k];
    if (bin < 1 || bin >= kNumBins - 1) continue;
    for (int g = 0; g < 4; ++g) {
      CHECK(flux[g * 247 + k] == doctest::Approx(0.0));
    }
    CHECK(flux[4 * 247 + k] == doctest::Approx(2.0));
  }
}

TEST_CASE("spectral flux matches a direct-index oracle on random input") {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> unit(0.0, 3.0);
  Mat l15(kNumBins, 120);
  for (int b = 0; b < kNumBins; ++b)
    for (int f = 0; f < 120; ++f) l15(b, f) = unit(rng);
  const Mat sm = smooth_spectrum_3tap(l15);
  Contour c = make_contour(30, 70, 6000.0, 5, 20.0);
  const int t = 60;
  const Vec flux = spectral_flux(sm, c, t);
  const auto& f1 = taps::f1();
  const auto& t4 = taps::t4();
  auto level = [&](int frame, int k) {
    const int fr = std::clamp(frame, 0, 119);
    const int bin = midi_to_spec_bin(cents_to_midi(c.at(frame).pitch_cents)) + f1[k];
    return (bin >= 0 && bin < kNumBins) ? sm(bin, fr) : 0.0;
  };
  for (int g = 0; g < 4; ++g) {
    for (int k = 0; k < 247; ++k) {
      const double expected = level(t + t4[g + 2], k) - level(t + t4[g], k);
      CHECK(flux[g * 247 + k] == doctest::Approx(expected).epsilon(1e-12));
    }
  }
  for (int k = 0; k < 247; ++k) {
    CHECK(flux[4 * 247 + k] == doctest::Approx(level(t, k)).epsilon(1e-12));
  }
}

TEST_CASE("3-tap spectrum smoothing uses weights {0.25 0.5 0.25}") {
  Mat plane = Mat::Zero(kNumBins, 1);
  plane(100, 0) = 4.0;
  const Mat sm = smooth_spectrum_3tap(plane);
  CHECK(sm(99, 0) == doctest::Approx(1.0));
  CHECK(sm(100, 0) == doctest::Approx(2.0));
  CHECK(sm(101, 0) == doctest::Approx(1.0));
  CHECK(sm(102, 0) == doctest::Approx(0.0));
}

TEST_CASE("pitch flux: flat contour zero, triangle vibrato constant |slope|") {
  Contour flat = make_contour(0, 100, 6000.0);
  const Vec zero = pitch_flux(flat, 50);
  REQUIRE(zero.size() == 41);
  CHECK(zero.abs().maxCoeff() == doctest::Approx(0.0));

  Contour vib = make_contour(0, 200, 6000.0);
  for (int i = 0; i < vib.length(); ++i) {
    const int phase = i % 20;
    vib.frames[i].pitch_cents = 6000.0 + (phase < 10 ? 2.0 * phase : 40.0 - 2.0 * phase);
  }
  const Vec flux = pitch_flux(vib, 100);
  for (int i = 0; i < 41; ++i) CHECK(flux[i] == doctest::Approx(2.0));
}

TEST_CASE("pitch and level flux match the |difference| oracle") {
  Contour c = make_contour(0, 150, 6000.0, 9, 30.0);
  std::mt19937_64 rng(41);
  std::uniform_real_distribution<double> unit(-20.0, 0.0);
  Vec vl(150);
  for (int i = 0; i < 150; ++i) vl[i] = unit(rng);
  const int t = 75;
  const Vec pf = pitch_flux(c, t);
  const Vec lf = level_flux(vl, t);
  const auto& t2 = taps::t2();
  for (size_t m = 0; m < t2.size(); ++m) {
    const double dp =
        c.at(t + t2[m] + 1).pitch_cents - c.at(t + t2[m]).pitch_cents;
    CHECK(pf[m] == doctest::Approx(std::abs(dp)));
    const double dl = vl[std::clamp(t + t2[m] + 1, 0, 149)] -
                      vl[std::clamp(t + t2[m], 0, 149)];
    CHECK(lf[m] == doctest::Approx(dl));
  }
}

TEST_CASE("onset input is the concatenation of its sub-features") {
  std::mt19937_64 rng(51);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Mat l15(kNumBins, 160);
  for (int b = 0; b < kNumBins; ++b)
    for (int f = 0; f < 160; ++f) l15(b, f) = unit(rng);
  const Mat sm = smooth_spectrum_3tap(l15);
  Vec vl(160);
  for (int i = 0; i < 160; ++i) vl[i] = -unit(rng) * 30.0;
  Contour c = make_contour(40, 80, 5800.0, 13, 15.0);
  const int t = 80;
  const Vec x = assemble_onset_input(c, sm, vl, t);
  REQUIRE(x.size() == kOnsetInputSize);

  int at = 0;
  for (int tau : taps::t2()) {
    CHECK(x[at++] == doctest::Approx(c.at(t + tau).n2_output));
  }
  const Vec nf = neural_flux(c, t);
  for (int i = 0; i < nf.size(); ++i) CHECK(x[at++] == doctest::Approx(nf[i]));
  const Vec sf = spectral_flux(sm, c, t);
  for (int i = 0; i < sf.size(); ++i) CHECK(x[at++] == doctest::Approx(sf[i]));
  const Vec pf = pitch_flux(c, t);
  for (int i = 0; i < pf.size(); ++i) CHECK(x[at++] == doctest::Approx(pf[i]));
  const Vec lf = level_flux(vl, t);
  for (int i = 0; i < lf.size(); ++i) CHECK(x[at++] == doctest::Approx(lf[i]));
  CHECK(x[at++] == doctest::Approx(t - c.start_frame));
  CHECK(x[at++] == doctest::Approx(c.end_frame - t));
  CHECK(x[at++] == doctest::Approx(58.0));
  CHECK(at == kOnsetInputSize);
}

TEST_CASE("smooth threshold analytic anchor points") {
  CHECK(smooth_threshold(-3.8) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(smooth_threshold(1.2) == doctest::Approx(6.0).epsilon(1e-12));
  CHECK(smooth_threshold(-60.0) > 0.0);
  CHECK(smooth_threshold(-60.0) < 1e-9);
  // Continuity and monotonicity across the branch point.
  double prev = smooth_threshold(-12.0);
  for (double x = -11.9; x < 4.0; x += 0.1) {
    const double v = smooth_threshold(x);
    CHECK(v > prev);
    prev = v;
  }
  // C1 at the branch point: both one-sided slopes equal 1.
  const double eps = 1e-7;
  const double left = (smooth_threshold(-3.8) - smooth_threshold(-3.8 - eps)) / eps;
  const double right = (smooth_threshold(-3.8 + eps) - smooth_threshold(-3.8)) / eps;
  CHECK(left == doctest::Approx(1.0).epsilon(1e-5));
  CHECK(right == doctest::Approx(1.0).epsilon(1e-5));
}

TEST_CASE("peak picking: constant curve silent, impulse detected once") {
  Contour c = make_contour(0, 100, 6000.0);
  PeakPickParams params;
  Vec flat = Vec::Constant(100, -4.8);
  CHECK(pick_onsets(flat, c, 0, params).empty());

  Vec impulse = Vec::Constant(100, -8.0);
  impulse[40] = 30.0;
  const auto events = pick_onsets(impulse, c, 0, params);
  REQUIRE(events.size() == 1);
  CHECK(events[0].frame == doctest::Approx(40.0).epsilon(0.02));
  CHECK(events[0].contour_id == 0);
}

TEST_CASE("OCS equals the scripted threshold-then-Gaussian oracle") {
  std::mt19937_64 rng(61);
  std::uniform_real_distribution<double> unit(-8.0, 4.0);
  Vec oc(120);
  for (int i = 0; i < 120; ++i) oc[i] = unit(rng);
  PeakPickParams params;
  const Vec ocs = onset_curve_smooth(oc, params);

  Vec thresholded(120);
  for (int i = 0; i < 120; ++i) {
    double x = oc[i] - params.z - params.r;
    if (x < 0) x = params.r * (std::exp(x / params.r) - 1.0);
    thresholded[i] = x + params.r;
  }
  const Vec expected =
      smooth(thresholded, gaussian_kernel(params.sigma, gaussian_radius(params.sigma)));
  for (int i = 0; i < 120; ++i) {
    CHECK(ocs[i] == doctest::Approx(expected[i]).epsilon(1e-9));
    CHECK(ocs[i] >= 0.0);
  }
}

TEST_CASE("onset parameter score follows Eq. semantics") {
  CHECK(onset_param_score(0.5, 0.5) == doctest::Approx(50.0));
  CHECK(onset_param_score(1.0, 0.5) == doctest::Approx(100.0));
  CHECK(onset_param_score(0.9, 0.9) > onset_param_score(0.9, 0.3));
}

TEST_CASE("offset feature accumulator: first frame means equal instants") {
  Contour c = make_contour(0, 60, 6000.0, 21, 10.0);
  Vec ofc(60);
  for (int i = 0; i < 60; ++i) ofc[i] = 0.02 * i;
  Mat l4 = Mat::Constant(kNumL4Bins, 60, 1.0);
  std::vector<int> indices(50);
  for (int i = 0; i < 50; ++i) indices[i] = i - 25;

  OffsetFeatureAccumulator acc(c, ofc, l4, indices, 30);
  const Vec x = acc.step(30);
  REQUIRE(x.size() == kOffsetInputSize);
  // Hidden (0..13) equals its cumulative mean (14..27) at the first frame.
  for (int i = 0; i < 14; ++i) CHECK(x[i] == doctest::Approx(x[14 + i]));
  // N2 output cumulative mean equals the instantaneous output.
  CHECK(x[28 + 4] == doctest::Approx(c.at(30).n2_output));  // tap 0 of T1
  CHECK(x[37] == doctest::Approx(c.at(30).n2_output));
  // In-note and in-region indices start at 1.
  CHECK(x[kOffsetInputSize - 2] == doctest::Approx(1.0));
  CHECK(x[kOffsetInputSize - 1] == doctest::Approx(1.0));
}

TEST_CASE("offset accumulator thresholds the OFC sums at 0.1 and 0.2") {
  Contour c = make_contour(0, 40, 6000.0);
  Vec ofc = Vec::Constant(40, 0.05);
  Mat l4 = Mat::Constant(kNumL4Bins, 40, 0.0);
  std::vector<int> indices(50);
  for (int i = 0; i < 50; ++i) indices[i] = i;
  OffsetFeatureAccumulator acc(c, ofc, l4, indices, 5);
  Vec x;
  for (int t = 5; t <= 15; ++t) x = acc.step(t);
  // Layout: [h 14][hmean 14][n2@T1 9][n2mean 1][ofc@T1 9][ofcsum][thr01][thr02]...
  const int base = 14 + 14 + 9 + 1 + 9;
  CHECK(x[base] == doctest::Approx(0.05 * 11));
  CHECK(x[base + 1] == doctest::Approx(0.0));
  CHECK(x[base + 2] == doctest::Approx(0.0));
}

TEST_CASE("offset decision: smoothed step crosses near the step") {
  Vec act = Vec::Zero(200);
  for (int i = 90; i < 200; ++i) act[i] = 1.0;
  OffsetDecisionParams params;
  const int idx = decide_offset(act, params);
  CHECK(std::abs(idx - 90) <= 5);  // within ceil(sigma)

  CHECK(decide_offset(Vec::Zero(50), params) == 49);  // fallback: last frame

  std::mt19937_64 rng(71);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Vec mono(120);
  double v = 0.0;
  for (int i = 0; i < 120; ++i) {
    v += 0.012 * unit(rng);
    mono[i] = v;
  }
  const Vec smoothed =
      smooth(mono, gaussian_kernel(params.sigma, gaussian_radius(params.sigma)));
  int expected = 119;
  for (int i = 0; i < 120; ++i) {
    if (smoothed[i] > params.threshold) {
      expected = i;
      break;
    }
  }
  CHECK(decide_offset(mono, params) == expected);
}

TEST_CASE("onset targets: pitch gate at 55 cents and exclusion zone") {
  Contour c = make_contour(0, 200, 6000.0);
  NoteAnnotation close{frame_to_seconds(100), frame_to_seconds(150), 60.3, 0};
  NoteAnnotation far{frame_to_seconds(40), frame_to_seconds(80), 60.6, 0};
  const FrameTargets targets =
      annotate_onset_targets(c, {close, far}, 7, 1.0);  // keep all negatives
  CHECK(targets.target[100] == 1.0);  // 30 cents away
  CHECK(targets.target[40] == 0.0);   // 60 cents away
  for (int d = -7; d <= 7; ++d) {
    if (d == 0) continue;
    CHECK(targets.use[100 + d] == 0);
  }
  CHECK(targets.use[100] == 1);
  CHECK(targets.use[130] == 1);

  // Subsampling keeps roughly the requested negative share.
  const FrameTargets thin = annotate_onset_targets(c, {close}, 7, 0.1);
  int kept = 0, total = 0;
  for (int i = 0; i < 200; ++i) {
    if (thin.target[i] == 1.0) continue;
    if (i >= 93 && i <= 107) continue;
    ++total;
    kept += thin.use[i];
  }
  CHECK(kept < total / 2);
  CHECK(kept > 0);
}

TEST_CASE("offset targets form a width-13 Hann bump at the annotation") {
  Contour c = make_contour(0, 200, 6000.0);
  NoteAnnotation note{frame_to_seconds(50), frame_to_seconds(120), 60.0, 0};
  const FrameTargets targets = annotate_offset_targets(c, {note});
  const Vec bump = hann_window(13);
  for (int d = -6; d <= 6; ++d) {
    CHECK(targets.target[120 + d] == doctest::Approx(bump[d + 6]));
  }
  CHECK(targets.target[120] == doctest::Approx(1.0));
  CHECK(targets.target[100] == 0.0);
}

TEST_CASE("stage-2 targets: ramp, discard rule, and 4-frame trim") {
  Contour c = make_contour(0, 300, 6000.0);
  NoteAnnotation matched{frame_to_seconds(50), frame_to_seconds(100), 60.0, 0};

  SUBCASE("plain ramp") {
    const auto targets =
        annotate_offset_stage2_targets(c, 50, 200, matched, {matched});
    REQUIRE(targets.has_value());
    CHECK(targets->target[0] == 0.0);
    CHECK(targets->target[100 - 50 - 2] == doctest::Approx(0.0));
    CHECK(targets->target[100 - 50] == doctest::Approx(0.5));
    CHECK(targets->target[100 - 50 + 2] == doctest::Approx(1.0));
    CHECK(targets->target[140] == 1.0);
  }
  SUBCASE("intervening same-pitch offset discards the note") {
    NoteAnnotation intruder{frame_to_seconds(20), frame_to_seconds(80), 60.1, 0};
    const auto targets =
        annotate_offset_stage2_targets(c, 50, 200, matched, {matched, intruder});
    CHECK(!targets.has_value());
  }
  SUBCASE("next same-pitch onset within 4 frames trims the tail") {
    NoteAnnotation next{frame_to_seconds(103), frame_to_seconds(180), 60.0, 0};
    const auto targets =
        annotate_offset_stage2_targets(c, 50, 200, matched, {matched, next});
    REQUIRE(targets.has_value());
    CHECK(targets->target.size() == 200 - 4 - 50 + 1);
  }
}
