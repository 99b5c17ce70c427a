#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pitchtrack/events.hpp"
#include "pitchtrack/midi.hpp"
#include "pitchtrack/pitchogram.hpp"

namespace pitchtrack {

// Random polyphonic writing for the built-in synthesizer: independent
// diatonic voices in separate ranges, distinct instruments per voice.
struct ScoreGenConfig {
  int min_voices = 2;
  int max_voices = 4;
  double length_s = 6.0;
  double min_note_s = 0.35;
  double max_note_s = 1.1;
  double rest_probability = 0.12;
  double repeat_probability = 0.12;  // repeated pitch (same-pitch boundary)
  double lead_in_s = 0.25;
};

MidiScore generate_score(std::uint64_t seed, const ScoreGenConfig& cfg);

struct CorpusExcerpt {
  std::string id;
  std::string wav;
  std::string annotations;
  std::string midi;
  std::string split;  // "train" or "validation"
};

struct CorpusManifest {
  std::string root;
  std::vector<CorpusExcerpt> excerpts;

  std::vector<const CorpusExcerpt*> split_set(const std::string& split) const;
};

struct DatasetConfig {
  int num_excerpts = 48;
  double validation_fraction = 0.1;
  std::uint64_t seed = 1;
  ScoreGenConfig score;
};

// Generates scores, preprocesses them, renders audio, and writes WAV +
// annotation JSON + MIDI per excerpt along with a manifest.
CorpusManifest build_corpus(const std::string& dir, const DatasetConfig& cfg);

// Same pipeline but starting from existing Standard MIDI Files.
CorpusManifest build_corpus_from_midi(const std::string& dir,
                                      const std::vector<std::string>& midi_files,
                                      std::uint64_t seed,
                                      double validation_fraction);

void save_manifest(const std::string& path, const CorpusManifest& manifest);
CorpusManifest load_manifest(const std::string& path);

void save_annotations(const std::string& path,
                      const std::vector<NoteAnnotation>& notes);
std::vector<NoteAnnotation> load_annotations(const std::string& path);

// --- N_1 training-example selection ----------------------------------------

struct N1Example {
  int frame = 0;
  double pitch_midi = 0.0;
  double label = 0.0;  // 1 = true f0, 0 = false
};

// Semitone offsets that generate the false class around each true f0.
const std::vector<int>& n1_negative_offsets();  // +-{3 4 5 6 7 8 9 12 19 24}

// Iteration 1 (detected == nullptr): positives at annotated f0s of every
// stride-th frame, negatives at the offset set, dropping any negative
// within 50 cents of a positive in the same frame. Iteration 2: pitches
// snap to the closest detected Tentogram peak within 50 cents, and
// spurious detections become additional negatives.
std::vector<N1Example> select_n1_examples(
    const std::vector<NoteAnnotation>& annotations, int num_frames,
    int frame_stride,
    const std::vector<std::vector<const TentativeF0*>>* detected);

}  // namespace pitchtrack
