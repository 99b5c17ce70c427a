#pragma once

#include <functional>
#include <vector>

#include "pitchtrack/contours.hpp"
#include "pitchtrack/pitchogram.hpp"
#include "pitchtrack/types.hpp"

namespace pitchtrack {

struct TentativeNote {
  int contour_id = 0;
  double onset_frame = 0.0;   // fractional (parabolic onset time)
  int onset_frame_i = 0;      // rounded, used for feature indexing
  int offset_frame = 0;
  double pitch_cents = 0.0;   // mean contour pitch across the note
  double onset_strength = 0.0;  // OCS value at the onset peak
  double probability = 1.0;
  bool removed = false;
};

// Everything note featurization reads from the per-track pipeline state.
struct NoteContext {
  const std::vector<Contour>* contours = nullptr;
  const std::vector<Vec>* oc = nullptr;         // N_3 prelogit per contour frame
  const std::vector<Vec>* ocs = nullptr;        // smoothed onset curves
  const std::vector<Mat>* n3_hidden = nullptr;  // 30 x length per contour
  const Mat* l4 = nullptr;
  const Mat* l25_smooth = nullptr;              // 3-tap smoothed L25
  const Vec* vl = nullptr;
  const std::vector<int>* kernel_indices = nullptr;
  const std::vector<std::vector<const TentativeF0*>>* frame_t0s = nullptr;
};

constexpr int kNoteInputSize = 3249;
extern const char* kNoteLayoutTag;

// N_6 input: onset-relative curve and spectral taps, order statistics
// across the note, region context, and neighbor onset activations.
Vec assemble_note_input(const TentativeNote& note,
                        const std::vector<TentativeNote>& all_notes,
                        const NoteContext& ctx);

// Linear-interpolated percentile, q in [0, 100].
double percentile(std::vector<double> values, double q);

struct RemovalHooks {
  // Recomputes the offset of a note whose successor disappeared; cap_frame
  // is the next surviving onset on the contour (or the contour end).
  std::function<int(const TentativeNote&, int cap_frame)> redecide_offset;
  // Re-featurizes and scores a note against the current surviving set.
  std::function<double(const TentativeNote&, const std::vector<TentativeNote>&)>
      score;
};

// Removes the lowest-probability note while any probability is below the
// stop threshold, updating the offset of the note preceding each removal
// and re-scoring notes whose features referenced the removed note.
// Returns the full set with `removed` flags resolved.
std::vector<TentativeNote> iterative_removal(std::vector<TentativeNote> notes,
                                             const std::vector<Contour>& contours,
                                             double stop,
                                             const RemovalHooks& hooks);

// Framewise estimates from the kept notes: each note contributes its
// contour pitch per frame; within 60 cents only the strongest activation
// survives (processed in descending activation order).
std::vector<FramePitch> framewise_from_notes(
    const std::vector<TentativeNote>& notes,
    const std::vector<Contour>& contours);

struct FinalNote {
  double onset_s = 0.0;
  double offset_s = 0.0;
  double pitch_midi = 0.0;
  double probability = 1.0;
};

// Serialization-time conversion; the 0.01 s onset shift is applied here and
// nowhere else.
std::vector<FinalNote> make_final_notes(const std::vector<TentativeNote>& notes);

struct Transcription {
  std::vector<FinalNote> notes;
  std::vector<FramePitch> framewise;
};

}  // namespace pitchtrack
