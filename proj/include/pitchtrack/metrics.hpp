#pragma once

#include <vector>

#include "pitchtrack/events.hpp"
#include "pitchtrack/notes.hpp"
#include "pitchtrack/pitchogram.hpp"

namespace pitchtrack {

struct MatchSpec {
  double pitch_tolerance_cents = 50.0;
  double onset_tolerance_s = 0.05;
  double offset_tolerance_s = 0.1;
  // For the onset+offset task the offset window is
  // max(offset_min_tolerance_s, offset_length_fraction * note length).
  double offset_min_tolerance_s = 0.05;
  double offset_length_fraction = 0.2;
  double framewise_tolerance_cents = 50.0;
};

enum class NoteTask { kOnset, kOffset, kOnsetOffset };

struct MetricReport {
  int matched = 0;
  int est_count = 0;
  int ref_count = 0;
  double precision = 0.0;  // fractions in [0, 1]; callers scale x100
  double recall = 0.0;
  double f_measure = 0.0;
  double accuracy = 0.0;
};

bool note_pair_eligible(const FinalNote& est, const NoteAnnotation& ref,
                        NoteTask task, const MatchSpec& spec);

// Deterministic greedy pairing: eligible pairs in ascending time distance
// (onset distance except for the offset-only task), each side used once.
// Slightly fewer pairs than a maximum matching on adversarial inputs.
std::vector<std::pair<int, int>> match_notes_greedy(
    const std::vector<FinalNote>& est, const std::vector<NoteAnnotation>& ref,
    NoteTask task, const MatchSpec& spec);

// Maximum-cardinality pairing (augmenting paths).
std::vector<std::pair<int, int>> match_notes_optimal(
    const std::vector<FinalNote>& est, const std::vector<NoteAnnotation>& ref,
    NoteTask task, const MatchSpec& spec);

// F = 2PR/(P+R); 0 when both are 0. Scale-free, so percentage inputs give
// percentage outputs.
double f_measure(double precision, double recall);

// A = tp / (tp + fp + fn).
double accuracy(int tp, int fp, int fn);

// Harmonic mean of four per-set results; 0 when any input is 0.
double combined_metric(double f1, double f2, double f3, double f4);

MetricReport note_metrics(const std::vector<FinalNote>& est,
                          const std::vector<NoteAnnotation>& ref, NoteTask task,
                          const MatchSpec& spec, bool optimal = false);

// Per-frame one-to-one matching under the pitch gate, aggregated over the
// whole track.
MetricReport framewise_metrics(const std::vector<FramePitch>& est,
                               const std::vector<FramePitch>& ref,
                               const MatchSpec& spec);

// Expands note annotations onto the frame grid for framewise evaluation.
std::vector<FramePitch> annotations_to_frames(
    const std::vector<NoteAnnotation>& notes);

}  // namespace pitchtrack
