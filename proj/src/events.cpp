#include "pitchtrack/events.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include "pitchtrack/dsp.hpp"
#include "pitchtrack/kernel.hpp"

namespace pitchtrack {

const char* kOnsetLayoutTag = "onset-input/v1";
const char* kOffsetLayoutTag = "offset-input/v1";

namespace taps {

namespace {
std::vector<int> make_range(int lo, int hi, int step) {
  std::vector<int> v;
  for (int i = lo; i <= hi; i += step) v.push_back(i);
  return v;
}
}  // namespace

const std::vector<int>& t1() {
  static const std::vector<int> v = {-13, -8, -4, -2, 0, 2, 4, 8, 13};
  return v;
}
const std::vector<int>& t2() {
  static const std::vector<int> v = make_range(-40, 40, 2);
  return v;
}
const std::vector<int>& t4() {
  static const std::vector<int> v = {-12, -8, -4, 0, 4, 8};
  return v;
}
const std::vector<int>& t4_star() {
  static const std::vector<int> v = {-10, -6, -2, 2, 6, 10};
  return v;
}
const std::vector<int>& f1() {
  static const std::vector<int> v = make_range(-186, 306, 2);
  return v;
}

}  // namespace taps

Mat smooth_spectrum_3tap(const Mat& plane) {
  Vec k(3);
  k << 0.25, 0.5, 0.25;
  // Plain convolution (zero beyond the edges), matching the fixed weights.
  Mat out = Mat::Zero(plane.rows(), plane.cols());
  const int nb = static_cast<int>(plane.rows());
  for (int b = 0; b < nb; ++b) {
    out.row(b) = 0.5 * plane.row(b);
    if (b > 0) out.row(b) += 0.25 * plane.row(b - 1);
    if (b + 1 < nb) out.row(b) += 0.25 * plane.row(b + 1);
  }
  return out;
}

Vec neural_flux(const Contour& contour, int t) {
  const auto& t1 = taps::t1();
  const int neurons = static_cast<int>(contour.at(t).n2_hidden.size());
  Vec out(neurons * 8 + neurons);
  int at = 0;
  for (int n = 0; n < neurons; ++n) {
    for (size_t m = 0; m + 1 < t1.size(); ++m) {
      const double a = contour.at(t + t1[m]).n2_hidden[n];
      const double b = contour.at(t + t1[m + 1]).n2_hidden[n];
      out[at++] = b - a;
    }
  }
  for (int n = 0; n < neurons; ++n) out[at++] = contour.at(t).n2_hidden[n];
  return out;
}

namespace {

// Contour-relative spectrum sample: the smoothed plane at the contour bin
// plus the F_1 offset, zero outside the spectrogram.
double contour_level(const Mat& plane, const Contour& contour, int frame,
                     int bin_offset) {
  const int nf = static_cast<int>(plane.cols());
  const int f = std::clamp(frame, 0, nf - 1);
  const int base =
      midi_to_spec_bin(cents_to_midi(contour.at(frame).pitch_cents));
  const int bin = base + bin_offset;
  if (bin < 0 || bin >= static_cast<int>(plane.rows())) return 0.0;
  return plane(bin, f);
}

}  // namespace

Vec spectral_flux(const Mat& l15_smooth, const Contour& contour, int t) {
  const auto& f1 = taps::f1();
  const auto& t4 = taps::t4();
  const int nbins = static_cast<int>(f1.size());
  Vec out(5 * nbins);
  int at = 0;
  for (size_t m = 0; m + 2 < t4.size(); ++m) {
    for (int k = 0; k < nbins; ++k) {
      const double a = contour_level(l15_smooth, contour, t + t4[m], f1[k]);
      const double b = contour_level(l15_smooth, contour, t + t4[m + 2], f1[k]);
      out[at++] = b - a;
    }
  }
  for (int k = 0; k < nbins; ++k) {
    out[at++] = contour_level(l15_smooth, contour, t, f1[k]);
  }
  return out;
}

Vec pitch_flux(const Contour& contour, int t) {
  const auto& t2 = taps::t2();
  Vec out(static_cast<Eigen::Index>(t2.size()));
  for (size_t m = 0; m < t2.size(); ++m) {
    const double a = contour.at(t + t2[m]).pitch_cents;
    const double b = contour.at(t + t2[m] + 1).pitch_cents;
    out[static_cast<Eigen::Index>(m)] = std::abs(b - a);
  }
  return out;
}

Vec level_flux(const Vec& vl, int t) {
  const auto& t2 = taps::t2();
  const int nf = static_cast<int>(vl.size());
  auto at = [&](int f) { return vl[std::clamp(f, 0, nf - 1)]; };
  Vec out(static_cast<Eigen::Index>(t2.size()));
  for (size_t m = 0; m < t2.size(); ++m) {
    out[static_cast<Eigen::Index>(m)] = at(t + t2[m] + 1) - at(t + t2[m]);
  }
  return out;
}

Vec assemble_onset_input(const Contour& contour, const Mat& l15_smooth,
                         const Vec& vl, int t) {
  const auto& t2 = taps::t2();
  Vec out(kOnsetInputSize);
  int at = 0;
  for (int tau : t2) out[at++] = contour.at(t + tau).n2_output;
  Vec nf = neural_flux(contour, t);
  out.segment(at, nf.size()) = nf;
  at += static_cast<int>(nf.size());
  Vec sf = spectral_flux(l15_smooth, contour, t);
  out.segment(at, sf.size()) = sf;
  at += static_cast<int>(sf.size());
  Vec pf = pitch_flux(contour, t);
  out.segment(at, pf.size()) = pf;
  at += static_cast<int>(pf.size());
  Vec lf = level_flux(vl, t);
  out.segment(at, lf.size()) = lf;
  at += static_cast<int>(lf.size());
  out[at++] = t - contour.start_frame;
  out[at++] = contour.end_frame - t;
  out[at++] = cents_to_midi(contour.mean_pitch_cents);
  if (at != kOnsetInputSize)
    throw std::logic_error("assemble_onset_input: layout size mismatch");
  return out;
}

double smooth_threshold(double x, double z, double r) {
  x = x - z - r;
  if (x < 0.0) x = r * (std::exp(x / r) - 1.0);
  return x + r;
}

Vec onset_curve_smooth(const Vec& oc, const PeakPickParams& params) {
  Vec thresholded(oc.size());
  for (Eigen::Index i = 0; i < oc.size(); ++i) {
    thresholded[i] = smooth_threshold(oc[i], params.z, params.r);
  }
  return smooth(thresholded,
                gaussian_kernel(params.sigma, gaussian_radius(params.sigma)));
}

std::vector<OnsetEvent> pick_onsets(const Vec& oc, const Contour& contour,
                                    int contour_id,
                                    const PeakPickParams& params) {
  const Vec ocs = onset_curve_smooth(oc, params);
  std::vector<OnsetEvent> out;
  for (Eigen::Index i = 1; i + 1 < ocs.size(); ++i) {
    if (!(ocs[i] > params.threshold)) continue;
    if (!(ocs[i] > ocs[i - 1] && ocs[i] > ocs[i + 1])) continue;
    const ParabolicVertex v = parabolic_vertex(ocs[i - 1], ocs[i], ocs[i + 1]);
    OnsetEvent ev;
    ev.contour_id = contour_id;
    ev.frame = contour.start_frame + static_cast<double>(i) + v.offset;
    ev.pitch_cents = contour.at(static_cast<int>(i) + contour.start_frame).pitch_cents;
    ev.strength = v.value;
    out.push_back(ev);
  }
  return out;
}

double onset_param_score(double recall, double precision) {
  return 100.0 * recall + 3.5 * std::tan(2.0 * precision - 1.0);
}

OffsetFeatureAccumulator::OffsetFeatureAccumulator(
    const Contour& contour, const Vec& ofc, const Mat& l4,
    const std::vector<int>& kernel_indices, int onset_frame)
    : contour_(contour),
      ofc_(ofc),
      l4_(l4),
      kernel_indices_(kernel_indices),
      onset_frame_(onset_frame),
      expected_t_(onset_frame) {
  if (ofc.size() != contour.length())
    throw std::invalid_argument("offset features: OFC length mismatch");
  hidden_sum_ = Vec::Zero(14);
  kl_sum_ = Vec::Zero(static_cast<Eigen::Index>(kernel_indices.size()));
}

Vec OffsetFeatureAccumulator::step(int t) {
  if (t < onset_frame_)
    throw std::invalid_argument("offset features: frame before onset");
  if (t != expected_t_)
    throw std::invalid_argument("offset features: frames must be consecutive");
  ++expected_t_;
  ++count_;

  const auto& t1 = taps::t1();
  auto ofc_at = [&](int frame) {
    const int idx = std::clamp(frame - contour_.start_frame, 0,
                               static_cast<int>(ofc_.size()) - 1);
    return ofc_[idx];
  };

  const ContourFrame& cf = contour_.at(t);
  hidden_sum_ += cf.n2_hidden;
  out_sum_ += cf.n2_output;
  const double ofc_now = ofc_at(t);
  ofc_sum_ += ofc_now;
  ofc_sum_01_ += std::max(ofc_now - 0.1, 0.0);
  ofc_sum_02_ += std::max(ofc_now - 0.2, 0.0);
  const int pitch_bin = static_cast<int>(
      std::lround(midi_to_pitch_bin(cents_to_midi(cf.pitch_cents))));
  const Vec kl = kernel_levels(l4_, pitch_bin, t, kernel_indices_);
  kl_sum_ += kl;

  Vec out(kOffsetInputSize);
  int at = 0;
  out.segment(at, 14) = cf.n2_hidden;
  at += 14;
  out.segment(at, 14) = hidden_sum_ / count_;
  at += 14;
  for (int tau : t1) out[at++] = contour_.at(t + tau).n2_output;
  out[at++] = out_sum_ / count_;
  for (int tau : t1) out[at++] = ofc_at(t + tau);
  out[at++] = ofc_sum_;
  out[at++] = ofc_sum_01_;
  out[at++] = ofc_sum_02_;
  out.segment(at, kl.size()) = kl;
  at += static_cast<int>(kl.size());
  out.segment(at, kl.size()) = kl_sum_ / count_;
  at += static_cast<int>(kl.size());
  out[at++] = cents_to_midi(cf.pitch_cents);
  out[at++] = t - onset_frame_ + 1;
  out[at++] = t - contour_.region_start + 1;
  if (at != kOffsetInputSize)
    throw std::logic_error("offset features: layout size mismatch");
  return out;
}

int decide_offset(const Vec& activations, const OffsetDecisionParams& params) {
  if (activations.size() == 0)
    throw std::invalid_argument("decide_offset: empty input");
  const Vec smoothed = smooth(
      activations, gaussian_kernel(params.sigma, gaussian_radius(params.sigma)));
  for (Eigen::Index i = 0; i < smoothed.size(); ++i) {
    if (smoothed[i] > params.threshold) return static_cast<int>(i);
  }
  return static_cast<int>(smoothed.size()) - 1;
}

FrameTargets annotate_onset_targets(const Contour& contour,
                                    const std::vector<NoteAnnotation>& notes,
                                    std::uint64_t seed,
                                    double negative_keep_rate) {
  const int n = contour.length();
  FrameTargets out;
  out.target = Vec::Zero(n);
  out.use.assign(n, 1);

  for (const NoteAnnotation& note : notes) {
    const int frame = seconds_to_frame(note.onset_s);
    if (frame < contour.start_frame || frame > contour.end_frame) continue;
    const int idx = frame - contour.start_frame;
    const double pitch_diff =
        std::abs(contour.frames[idx].pitch_cents - midi_to_cents(note.pitch_midi));
    if (pitch_diff <= 55.0) out.target[idx] = 1.0;
  }
  for (int i = 0; i < n; ++i) {
    if (out.target[i] != 1.0) continue;
    for (int d = -7; d <= 7; ++d) {
      const int j = i + d;
      if (d != 0 && j >= 0 && j < n && out.target[j] != 1.0) out.use[j] = 0;
    }
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int i = 0; i < n; ++i) {
    if (out.target[i] == 0.0 && out.use[i] && unit(rng) >= negative_keep_rate) {
      out.use[i] = 0;
    }
  }
  return out;
}

FrameTargets annotate_offset_targets(const Contour& contour,
                                     const std::vector<NoteAnnotation>& notes) {
  const int n = contour.length();
  FrameTargets out;
  out.target = Vec::Zero(n);
  out.use.assign(n, 1);
  const Vec bump = hann_window(13);
  for (const NoteAnnotation& note : notes) {
    const int frame = seconds_to_frame(note.offset_s);
    for (int d = -6; d <= 6; ++d) {
      const int idx = frame + d - contour.start_frame;
      if (idx < 0 || idx >= n) continue;
      const double pitch_diff = std::abs(contour.frames[idx].pitch_cents -
                                         midi_to_cents(note.pitch_midi));
      if (pitch_diff > 55.0) continue;
      out.target[idx] = std::max(out.target[idx], bump[d + 6]);
    }
  }
  return out;
}

std::optional<FrameTargets> annotate_offset_stage2_targets(
    const Contour& contour, int onset_frame, int end_frame,
    const NoteAnnotation& matched, const std::vector<NoteAnnotation>& notes) {
  const int ann_offset = seconds_to_frame(matched.offset_s);
  // An intervening same-pitch offset means the detected onset was paired
  // with the wrong annotation; drop the note from training.
  for (const NoteAnnotation& other : notes) {
    if (&other == &matched) continue;
    if (std::abs(other.pitch_midi - matched.pitch_midi) > 0.5) continue;
    const int frame = seconds_to_frame(other.offset_s);
    if (frame > onset_frame && frame < ann_offset) return std::nullopt;
  }
  int last = end_frame;
  for (const NoteAnnotation& other : notes) {
    if (&other == &matched) continue;
    if (std::abs(other.pitch_midi - matched.pitch_midi) > 0.5) continue;
    const int frame = seconds_to_frame(other.onset_s);
    if (frame >= ann_offset && frame - ann_offset <= 4) {
      last = std::min(last, end_frame - 4);
    }
  }
  if (last < onset_frame) return std::nullopt;

  FrameTargets out;
  const int n = last - onset_frame + 1;
  out.target = Vec::Zero(n);
  out.use.assign(n, 1);
  for (int t = onset_frame; t <= last; ++t) {
    double v;
    if (t < ann_offset - 2) {
      v = 0.0;
    } else if (t > ann_offset + 2) {
      v = 1.0;
    } else {
      v = (t - (ann_offset - 2)) * 0.25;
    }
    out.target[t - onset_frame] = v;
  }
  return out;
}

}  // namespace pitchtrack
