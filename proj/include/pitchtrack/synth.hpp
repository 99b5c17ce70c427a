#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "pitchtrack/audio.hpp"
#include "pitchtrack/midi.hpp"

namespace pitchtrack {

// One voice of the built-in additive synthesizer: 10 harmonics shaped by a
// fixed spectral envelope, a raised-cosine attack, exponential decay and
// release, and optional vibrato.
struct InstrumentPreset {
  std::string name;
  int program = 0;  // GM-style program number used in MIDI files
  bool sustained = true;
  double attack_s = 0.02;
  double decay_tau_s = 0.0;      // 0 = no decay during the held phase
  double sustain_level = 1.0;
  double release_tau_s = 0.05;
  std::array<double, 10> harmonic_db{};
  double vibrato_rate_hz = 0.0;
  double vibrato_cents = 0.0;
  double onset_delay_s = 0.0;    // perceptual onset lag of this envelope
  double offset_delay_s = 0.0;
};

const std::vector<InstrumentPreset>& builtin_instruments();
const InstrumentPreset& instrument_by_program(int program);
InstrumentDelayTable builtin_delay_table();

// Renders a preprocessed score. Deterministic for a given seed (the seed
// drives per-note phases and small amplitude variation).
AudioBuffer render_score(const MidiScore& score, std::uint64_t seed,
                         double tail_s = 0.5);

}  // namespace pitchtrack
