#include "pitchtrack/notes.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "pitchtrack/events.hpp"
#include "pitchtrack/kernel.hpp"

namespace pitchtrack {

const char* kNoteLayoutTag = "note-input/v1";

double percentile(std::vector<double> values, double q) {
  if (values.empty()) throw std::invalid_argument("percentile: empty input");
  std::sort(values.begin(), values.end());
  const double pos = q / 100.0 * (values.size() - 1);
  const size_t lo = static_cast<size_t>(std::floor(pos));
  const size_t hi = std::min(lo + 1, values.size() - 1);
  const double t = pos - lo;
  return (1.0 - t) * values[lo] + t * values[hi];
}

namespace {

constexpr double kMissingDuration = 2.0;
constexpr double kMissingIoi = 3.0;

// Surviving notes of the note's region in onset order, with the note
// itself included even when it is a working copy not present in `all`.
std::vector<TentativeNote> region_note_order(const TentativeNote& note,
                                             const std::vector<TentativeNote>& all,
                                             int* self_pos) {
  std::vector<TentativeNote> region;
  bool found = false;
  for (const TentativeNote& n : all) {
    if (n.removed || n.contour_id != note.contour_id) continue;
    region.push_back(n);
    if (&n == &note) found = true;
  }
  if (!found) region.push_back(note);
  std::sort(region.begin(), region.end(),
            [](const TentativeNote& a, const TentativeNote& b) {
              return a.onset_frame < b.onset_frame;
            });
  *self_pos = 0;
  for (size_t k = 0; k < region.size(); ++k) {
    if (region[k].onset_frame == note.onset_frame &&
        region[k].pitch_cents == note.pitch_cents) {
      *self_pos = static_cast<int>(k);
      break;
    }
  }
  return region;
}

}  // namespace

Vec assemble_note_input(const TentativeNote& note,
                        const std::vector<TentativeNote>& all_notes,
                        const NoteContext& ctx) {
  const Contour& contour = (*ctx.contours)[note.contour_id];
  const Vec& oc = (*ctx.oc)[note.contour_id];
  const Vec& ocs = (*ctx.ocs)[note.contour_id];
  const Mat& h3 = (*ctx.n3_hidden)[note.contour_id];
  const int len = contour.length();
  const int t0 = note.onset_frame_i;
  auto local = [&](int frame) {
    return std::clamp(frame - contour.start_frame, 0, len - 1);
  };

  Vec out(kNoteInputSize);
  int at = 0;

  // OC at T_2 around the onset.
  for (int tau : taps::t2()) out[at++] = oc[local(t0 + tau)];

  // Last hidden layer of N_3 at T_4*.
  for (int tau : taps::t4_star()) {
    out.segment(at, h3.rows()) = h3.col(local(t0 + tau));
    at += static_cast<int>(h3.rows());
  }

  // The N_2 input at T_4*.
  for (int tau : taps::t4_star()) {
    const int f = std::clamp(t0 + tau, contour.start_frame, contour.end_frame);
    const ContourFrame& cf = contour.at(f);
    const Vec n2in =
        assemble_n2_input(cf.pitch_cents, f, *ctx.l4, *ctx.kernel_indices,
                          (*ctx.frame_t0s)[f]);
    out.segment(at, n2in.size()) = n2in;
    at += static_cast<int>(n2in.size());
  }

  // L25 levels at F_1 x T_4 relative to the contour.
  {
    const auto& f1 = taps::f1();
    const int nf = static_cast<int>(ctx.l25_smooth->cols());
    for (int tau : taps::t4()) {
      const int f = std::clamp(t0 + tau, 0, nf - 1);
      const int base = midi_to_spec_bin(cents_to_midi(contour.at(f).pitch_cents));
      for (int k : f1) {
        const int bin = base + k;
        out[at++] = (bin >= 0 && bin < static_cast<int>(ctx.l25_smooth->rows()))
                        ? (*ctx.l25_smooth)(bin, f)
                        : 0.0;
      }
    }
  }

  // V^l flux at -15..15 step 3.
  {
    const int nf = static_cast<int>(ctx.vl->size());
    auto vl_at = [&](int f) { return (*ctx.vl)[std::clamp(f, 0, nf - 1)]; };
    for (int tau = -15; tau <= 15; tau += 3) {
      out[at++] = vl_at(t0 + tau + 1) - vl_at(t0 + tau);
    }
  }

  // Quintiles {25 50 75} across the note for the tracked series.
  {
    const int lo = local(t0);
    const int hi = std::max(lo, local(note.offset_frame));
    const int n = hi - lo + 1;
    std::vector<std::vector<double>> series(69, std::vector<double>());
    for (auto& s : series) s.reserve(n);
    for (int i = lo; i <= hi; ++i) {
      const ContourFrame& cf = contour.frames[i];
      const ContourFrame& next = contour.frames[std::min(i + 1, len - 1)];
      const double pf = next.pitch_cents - cf.pitch_cents;
      series[0].push_back(pf);
      series[1].push_back(std::abs(pf));
      series[2].push_back(oc[i]);
      series[3].push_back(ocs[i]);
      series[4].push_back(cf.n2_output);
      for (int k = 0; k < 14; ++k) series[5 + k].push_back(cf.n2_hidden[k]);
      const int pitch_bin = static_cast<int>(
          std::lround(midi_to_pitch_bin(cents_to_midi(cf.pitch_cents))));
      const Vec kl = kernel_levels(*ctx.l4, pitch_bin, cf.frame, *ctx.kernel_indices);
      for (int k = 0; k < 50; ++k) series[19 + k].push_back(kl[k]);
    }
    for (const auto& s : series) {
      for (double q : {25.0, 50.0, 75.0}) out[at++] = percentile(s, q);
    }
  }

  // Region context: duration / IOI / IPI for the two previous notes, the
  // note itself, and the two subsequent notes of the same region.
  {
    int self_pos = 0;
    const std::vector<TentativeNote> region =
        region_note_order(note, all_notes, &self_pos);
    const int count = static_cast<int>(region.size());
    for (int slot = -2; slot <= 2; ++slot) {
      const int pos = self_pos + slot;
      if (pos < 0 || pos >= count) {
        out[at++] = kMissingDuration;
        out[at++] = kMissingIoi;
        out[at++] = 0.0;
        continue;
      }
      const TentativeNote& n = region[pos];
      const double duration = (n.offset_frame - n.onset_frame) * kFrameSeconds;
      double ioi, ipi;
      if (pos + 1 < count) {
        ioi = (region[pos + 1].onset_frame - n.onset_frame) * kFrameSeconds;
        ipi = (region[pos + 1].pitch_cents - n.pitch_cents) / 100.0;
      } else {
        ioi = duration + 1.0;
        ipi = 0.0;
      }
      out[at++] = duration;
      out[at++] = ioi;
      out[at++] = ipi;
    }
    out[at++] = self_pos + 1;
    out[at++] = count;
  }

  // Onset activations of close notes: 51 semitone offsets x 5 time ranges.
  {
    static const int ranges[5][2] = {{-18, -11}, {-10, -4}, {-3, 3}, {4, 10}, {11, 18}};
    const int base = at;
    for (int i = 0; i < 51 * 5; ++i) out[base + i] = 0.0;
    for (const TentativeNote& other : all_notes) {
      if (other.removed || &other == &note) continue;
      const int semis = static_cast<int>(
          std::lround((other.pitch_cents - note.pitch_cents) / 100.0));
      if (semis < -25 || semis > 25) continue;
      const double df = other.onset_frame - note.onset_frame;
      for (int r = 0; r < 5; ++r) {
        if (df >= ranges[r][0] && df <= ranges[r][1]) {
          out[base + (semis + 25) * 5 + r] += other.onset_strength;
          break;
        }
      }
    }
    at += 51 * 5;
  }

  if (at != kNoteInputSize)
    throw std::logic_error("assemble_note_input: layout size mismatch");
  return out;
}

std::vector<TentativeNote> iterative_removal(std::vector<TentativeNote> notes,
                                             const std::vector<Contour>& contours,
                                             double stop,
                                             const RemovalHooks& hooks) {
  auto next_onset_cap = [&](const TentativeNote& n) {
    const Contour& contour = contours[n.contour_id];
    int cap = contour.end_frame;
    for (const TentativeNote& other : notes) {
      if (other.removed || &other == &n) continue;
      if (other.contour_id != n.contour_id) continue;
      if (other.onset_frame_i > n.onset_frame_i) {
        cap = std::min(cap, other.onset_frame_i);
      }
    }
    return cap;
  };

  for (size_t iter = 0; iter < notes.size(); ++iter) {
    int worst = -1;
    for (size_t i = 0; i < notes.size(); ++i) {
      if (notes[i].removed) continue;
      if (worst < 0 || notes[i].probability < notes[worst].probability ||
          (notes[i].probability == notes[worst].probability &&
           notes[i].onset_frame < notes[worst].onset_frame)) {
        worst = static_cast<int>(i);
      }
    }
    if (worst < 0 || notes[worst].probability >= stop) break;

    TentativeNote removed = notes[worst];
    notes[worst].removed = true;

    // The note directly preceding the removed one in the same contour gets
    // its offset recomputed over the now-longer span.
    int pred = -1;
    for (size_t i = 0; i < notes.size(); ++i) {
      if (notes[i].removed || notes[i].contour_id != removed.contour_id) continue;
      if (notes[i].onset_frame_i <= removed.onset_frame_i &&
          (pred < 0 || notes[i].onset_frame_i > notes[pred].onset_frame_i)) {
        pred = static_cast<int>(i);
      }
    }
    if (pred >= 0 && hooks.redecide_offset) {
      notes[pred].offset_frame =
          hooks.redecide_offset(notes[pred], next_onset_cap(notes[pred]));
    }

    if (hooks.score) {
      for (auto& n : notes) {
        if (n.removed) continue;
        const bool same_region = n.contour_id == removed.contour_id;
        const bool in_window =
            std::abs(n.pitch_cents - removed.pitch_cents) <= 2550.0 &&
            std::abs(n.onset_frame - removed.onset_frame) <= 18.5;
        if (same_region || in_window) {
          n.probability = hooks.score(n, notes);
        }
      }
    }
  }
  return notes;
}

std::vector<FramePitch> framewise_from_notes(
    const std::vector<TentativeNote>& notes,
    const std::vector<Contour>& contours) {
  std::vector<FramePitch> all;
  for (const TentativeNote& n : notes) {
    if (n.removed) continue;
    const Contour& contour = contours[n.contour_id];
    const int first = static_cast<int>(std::lround(n.onset_frame));
    for (int f = first; f <= n.offset_frame; ++f) {
      const ContourFrame& cf = contour.at(f);
      all.push_back({f, cf.pitch_cents, cf.activation});
    }
  }
  // Per frame, keep the strongest of any group of predictions within
  // 60 cents, processing in descending activation order.
  std::stable_sort(all.begin(), all.end(), [](const FramePitch& a,
                                              const FramePitch& b) {
    if (a.frame != b.frame) return a.frame < b.frame;
    return a.activation > b.activation;
  });
  std::vector<FramePitch> out;
  size_t i = 0;
  while (i < all.size()) {
    size_t j = i;
    while (j < all.size() && all[j].frame == all[i].frame) ++j;
    std::vector<const FramePitch*> kept;
    for (size_t k = i; k < j; ++k) {
      bool clashes = false;
      for (const FramePitch* other : kept) {
        if (std::abs(other->cents - all[k].cents) < 60.0) clashes = true;
      }
      if (!clashes) kept.push_back(&all[k]);
    }
    std::sort(kept.begin(), kept.end(),
              [](const FramePitch* a, const FramePitch* b) {
                return a->cents < b->cents;
              });
    for (const FramePitch* p : kept) out.push_back(*p);
    i = j;
  }
  return out;
}

std::vector<FinalNote> make_final_notes(const std::vector<TentativeNote>& notes) {
  std::vector<FinalNote> out;
  for (const TentativeNote& n : notes) {
    if (n.removed) continue;
    FinalNote fn;
    fn.onset_s = std::max(0.0, frame_to_seconds(n.onset_frame) - 0.01);
    fn.offset_s = frame_to_seconds(n.offset_frame);
    fn.pitch_midi = cents_to_midi(n.pitch_cents);
    fn.probability = n.probability;
    out.push_back(fn);
  }
  std::sort(out.begin(), out.end(), [](const FinalNote& a, const FinalNote& b) {
    if (a.onset_s != b.onset_s) return a.onset_s < b.onset_s;
    return a.pitch_midi < b.pitch_midi;
  });
  return out;
}

}  // namespace pitchtrack
