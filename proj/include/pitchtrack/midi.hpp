#pragma once

#include <map>
#include <string>
#include <vector>

#include "pitchtrack/events.hpp"

namespace pitchtrack {

struct MidiNote {
  double onset_s = 0.0;
  double offset_s = 0.0;
  int pitch = 60;       // MIDI note number
  int instrument = 0;   // program number of the channel at note-on
  int channel = 0;
  int velocity = 80;
};

struct PedalEvent {
  double time_s = 0.0;
  bool down = false;
  int channel = 0;
};

struct MidiScore {
  std::vector<MidiNote> notes;
  std::vector<PedalEvent> pedals;
  double duration_s = 0.0;
};

// Standard MIDI file, format 0 or 1 (PPQ division).
MidiScore read_midi(const std::string& path);
void write_midi(const std::string& path, const MidiScore& score);

struct InstrumentDelays {
  double onset_delay_s = 0.0;   // within [0, 0.093]
  double offset_delay_s = 0.0;  // within [0, 1]
  bool sustained = false;
};
using InstrumentDelayTable = std::map<int, InstrumentDelays>;

// Score cleanup before rendering and annotation:
//  - pedaled notes extend to the pedal release, pedal events are dropped;
//  - sustained instruments get a gap x = 0.7 d (clamped to 0.02..0.3 s)
//    carved out of the first of two same-pitch back-to-back notes;
//  - notes shorter than 30 ms are extended to 30 ms, and removed entirely
//    when the extension would cross the next same-pitch onset.
// Applying the function twice is a no-op.
MidiScore preprocess_midi(MidiScore score, const InstrumentDelayTable& delays);

// Annotation timing: onset/offset delays of the rendering instrument are
// added per note. Unknown instruments raise an error naming them.
std::vector<NoteAnnotation> adjust_annotations(const MidiScore& score,
                                               const InstrumentDelayTable& delays);

}  // namespace pitchtrack
