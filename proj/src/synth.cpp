#include "pitchtrack/synth.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

#include "pitchtrack/types.hpp"

namespace pitchtrack {

const std::vector<InstrumentPreset>& builtin_instruments() {
  static const std::vector<InstrumentPreset> presets = [] {
    std::vector<InstrumentPreset> v;
    InstrumentPreset organ;
    organ.name = "organ";
    organ.program = 19;
    organ.sustained = true;
    organ.attack_s = 0.025;
    organ.release_tau_s = 0.04;
    organ.harmonic_db = {0, -3, -6, -9, -13, -16, -19, -22, -25, -28};
    organ.onset_delay_s = 0.015;
    organ.offset_delay_s = 0.09;
    v.push_back(organ);

    InstrumentPreset strings;
    strings.name = "bowed";
    strings.program = 48;
    strings.sustained = true;
    strings.attack_s = 0.06;
    strings.release_tau_s = 0.07;
    strings.harmonic_db = {0, -4, -8, -12, -16, -20, -24, -28, -32, -36};
    strings.vibrato_rate_hz = 5.5;
    strings.vibrato_cents = 14.0;
    strings.onset_delay_s = 0.035;
    strings.offset_delay_s = 0.16;
    v.push_back(strings);

    InstrumentPreset flute;
    flute.name = "pipe";
    flute.program = 73;
    flute.sustained = true;
    flute.attack_s = 0.04;
    flute.release_tau_s = 0.05;
    flute.harmonic_db = {0, -8, -18, -26, -32, -38, -44, -50, -56, -62};
    flute.vibrato_rate_hz = 4.8;
    flute.vibrato_cents = 8.0;
    flute.onset_delay_s = 0.024;
    flute.offset_delay_s = 0.11;
    v.push_back(flute);

    InstrumentPreset reed;
    reed.name = "reed";
    reed.program = 71;
    reed.sustained = true;
    reed.attack_s = 0.03;
    reed.release_tau_s = 0.05;
    reed.harmonic_db = {0, -16, -4, -19, -8, -22, -12, -25, -16, -28};
    reed.onset_delay_s = 0.02;
    reed.offset_delay_s = 0.11;
    v.push_back(reed);

    InstrumentPreset pluck;
    pluck.name = "pluck";
    pluck.program = 24;
    pluck.sustained = false;
    pluck.attack_s = 0.006;
    pluck.decay_tau_s = 0.35;
    pluck.release_tau_s = 0.03;
    pluck.harmonic_db = {0, -5, -10, -15, -20, -25, -30, -35, -40, -45};
    pluck.onset_delay_s = 0.005;
    pluck.offset_delay_s = 0.07;
    v.push_back(pluck);

    InstrumentPreset hammered;
    hammered.name = "hammered";
    hammered.program = 0;
    hammered.sustained = false;
    hammered.attack_s = 0.009;
    hammered.decay_tau_s = 0.8;
    hammered.release_tau_s = 0.05;
    hammered.harmonic_db = {0, -3.5, -7, -10.5, -14, -17.5, -21, -24.5, -28, -31.5};
    hammered.onset_delay_s = 0.008;
    hammered.offset_delay_s = 0.12;
    v.push_back(hammered);
    return v;
  }();
  return presets;
}

const InstrumentPreset& instrument_by_program(int program) {
  for (const InstrumentPreset& p : builtin_instruments()) {
    if (p.program == program) return p;
  }
  throw std::runtime_error("no built-in instrument with program " +
                           std::to_string(program));
}

InstrumentDelayTable builtin_delay_table() {
  InstrumentDelayTable table;
  for (const InstrumentPreset& p : builtin_instruments()) {
    table[p.program] = {p.onset_delay_s, p.offset_delay_s, p.sustained};
  }
  return table;
}

AudioBuffer render_score(const MidiScore& score, std::uint64_t seed, double tail_s) {
  const double fs = kSampleRate;
  const double duration = score.duration_s + tail_s;
  AudioBuffer out;
  out.sample_rate = fs;
  out.samples.assign(static_cast<size_t>(std::ceil(duration * fs)), 0.0);
  if (score.notes.empty()) return out;

  for (const MidiNote& note : score.notes) {
    // Per-note randomness depends on the note identity alone, so a mixed
    // render is exactly the sum of the solo renders.
    std::uint64_t h = seed;
    for (std::uint64_t v :
         {static_cast<std::uint64_t>(std::llround(note.onset_s * 1e6)),
          static_cast<std::uint64_t>(note.pitch),
          static_cast<std::uint64_t>(note.channel),
          static_cast<std::uint64_t>(note.instrument)}) {
      h ^= v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    }
    std::mt19937_64 rng(h);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    const InstrumentPreset& inst = instrument_by_program(note.instrument);
    const double f0 = midi_to_hz(note.pitch);
    const double amp =
        0.12 * (note.velocity / 96.0) * (0.9 + 0.2 * unit(rng));
    std::array<double, 10> phase;
    for (double& p : phase) p = 2.0 * M_PI * unit(rng);
    const double vib_phase = 2.0 * M_PI * unit(rng);

    const double held = note.offset_s - note.onset_s;
    // Render until the release has decayed by ~60 dB.
    const double tail = inst.release_tau_s * 7.0;
    const long start = static_cast<long>(std::floor(note.onset_s * fs));
    const long stop = std::min<long>(
        static_cast<long>(out.samples.size()),
        static_cast<long>(std::ceil((note.offset_s + tail) * fs)));

    std::array<double, 10> hamp;
    int nharm = 0;
    for (int h = 0; h < 10; ++h) {
      const double f = f0 * (h + 1);
      if (f > 0.45 * fs) break;
      hamp[h] = std::pow(10.0, inst.harmonic_db[h] / 20.0);
      ++nharm;
    }

    for (long s = start; s < stop; ++s) {
      const double t = s / fs - note.onset_s;
      if (t < 0) continue;
      double env;
      if (t < inst.attack_s) {
        env = 0.5 - 0.5 * std::cos(M_PI * t / inst.attack_s);
      } else {
        env = inst.sustained ? inst.sustain_level : 1.0;
        if (inst.decay_tau_s > 0.0) {
          env *= std::exp(-(t - inst.attack_s) / inst.decay_tau_s);
        }
      }
      if (t > held) env *= std::exp(-(t - held) / inst.release_tau_s);

      double vib = 1.0;
      if (inst.vibrato_cents > 0.0) {
        const double cents = inst.vibrato_cents *
                             std::sin(2.0 * M_PI * inst.vibrato_rate_hz * t + vib_phase);
        vib = std::pow(2.0, cents / 1200.0);
      }
      double sample = 0.0;
      const double dphase = 2.0 * M_PI * f0 * vib / fs;
      for (int h = 0; h < nharm; ++h) {
        phase[h] += dphase * (h + 1);
        sample += hamp[h] * std::sin(phase[h]);
      }
      out.samples[static_cast<size_t>(s)] += amp * env * sample;
    }
  }
  return out;
}

}  // namespace pitchtrack
