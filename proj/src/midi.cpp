#include "pitchtrack/midi.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <stdexcept>

namespace pitchtrack {

namespace {

struct RawEvent {
  long tick = 0;
  int type = 0;  // 0x80 note off, 0x90 note on, 0xB0 control, 0xC0 program
  int channel = 0;
  int a = 0, b = 0;
};

struct TempoChange {
  long tick = 0;
  double us_per_quarter = 500000.0;
};

class ByteReader {
 public:
  explicit ByteReader(std::vector<unsigned char> data) : data_(std::move(data)) {}
  bool done() const { return pos_ >= data_.size(); }
  size_t pos() const { return pos_; }
  void seek(size_t p) { pos_ = p; }
  unsigned char u8() {
    if (done()) throw std::runtime_error("midi: unexpected end of file");
    return data_[pos_++];
  }
  unsigned char peek() const {
    if (done()) throw std::runtime_error("midi: unexpected end of file");
    return data_[pos_];
  }
  uint32_t u32() {
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v = (v << 8) | u8();
    return v;
  }
  uint16_t u16() {
    uint16_t v = 0;
    for (int i = 0; i < 2; ++i) v = (v << 8) | u8();
    return v;
  }
  long vlq() {
    long v = 0;
    for (int i = 0; i < 4; ++i) {
      const unsigned char c = u8();
      v = (v << 7) | (c & 0x7f);
      if (!(c & 0x80)) return v;
    }
    throw std::runtime_error("midi: bad variable-length quantity");
  }

 private:
  std::vector<unsigned char> data_;
  size_t pos_ = 0;
};

double ticks_to_seconds(long tick, const std::vector<TempoChange>& tempi,
                        int division) {
  double seconds = 0.0;
  long at = 0;
  double us = 500000.0;
  for (const TempoChange& t : tempi) {
    if (t.tick >= tick) break;
    seconds += (t.tick - at) * us / (1e6 * division);
    at = t.tick;
    us = t.us_per_quarter;
  }
  seconds += (tick - at) * us / (1e6 * division);
  return seconds;
}

}  // namespace

MidiScore read_midi(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open MIDI file: " + path);
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  ByteReader r(std::move(bytes));

  if (r.u32() != 0x4D546864) throw std::runtime_error("not a MIDI file: " + path);
  if (r.u32() != 6) throw std::runtime_error("midi: bad header length");
  const int format = r.u16();
  const int ntracks = r.u16();
  const int division = r.u16();
  if (format != 0 && format != 1)
    throw std::runtime_error("midi: only formats 0 and 1 are supported");
  if (division & 0x8000)
    throw std::runtime_error("midi: SMPTE time division is not supported");

  std::vector<RawEvent> events;
  std::vector<TempoChange> tempi;
  for (int t = 0; t < ntracks; ++t) {
    if (r.u32() != 0x4D54726B) throw std::runtime_error("midi: missing MTrk");
    const uint32_t length = r.u32();
    const size_t end = r.pos() + length;
    long tick = 0;
    int running = 0;
    while (r.pos() < end) {
      tick += r.vlq();
      int status = r.peek();
      if (status & 0x80) {
        status = r.u8();
      } else {
        status = running;
        if (!(status & 0x80)) throw std::runtime_error("midi: bad running status");
      }
      if (status == 0xFF) {
        const int meta = r.u8();
        const long len = r.vlq();
        if (meta == 0x51 && len == 3) {
          double us = 0;
          for (int i = 0; i < 3; ++i) us = us * 256 + r.u8();
          tempi.push_back({tick, us});
        } else {
          for (long i = 0; i < len; ++i) r.u8();
        }
        continue;
      }
      if (status == 0xF0 || status == 0xF7) {
        const long len = r.vlq();
        for (long i = 0; i < len; ++i) r.u8();
        continue;
      }
      running = status;
      const int type = status & 0xF0;
      const int channel = status & 0x0F;
      RawEvent ev;
      ev.tick = tick;
      ev.channel = channel;
      ev.type = type;
      ev.a = r.u8();
      if (type != 0xC0 && type != 0xD0) ev.b = r.u8();
      events.push_back(ev);
    }
    r.seek(end);
  }
  std::sort(tempi.begin(), tempi.end(),
            [](const TempoChange& a, const TempoChange& b) { return a.tick < b.tick; });
  std::stable_sort(events.begin(), events.end(),
                   [](const RawEvent& a, const RawEvent& b) { return a.tick < b.tick; });

  MidiScore score;
  int program[16] = {0};
  struct Open {
    long tick;
    int program;
    int velocity;
  };
  std::map<std::pair<int, int>, std::vector<Open>> open;  // (channel, pitch)
  for (const RawEvent& ev : events) {
    if (ev.type == 0xC0) {
      program[ev.channel] = ev.a;
    } else if (ev.type == 0x90 && ev.b > 0) {
      open[{ev.channel, ev.a}].push_back({ev.tick, program[ev.channel], ev.b});
    } else if (ev.type == 0x80 || (ev.type == 0x90 && ev.b == 0)) {
      auto& stack = open[{ev.channel, ev.a}];
      if (stack.empty()) continue;
      const Open o = stack.back();
      stack.pop_back();
      MidiNote note;
      note.onset_s = ticks_to_seconds(o.tick, tempi, division);
      note.offset_s = ticks_to_seconds(ev.tick, tempi, division);
      note.pitch = ev.a;
      note.channel = ev.channel;
      note.instrument = o.program;
      note.velocity = o.velocity;
      if (note.offset_s > note.onset_s) score.notes.push_back(note);
    } else if (ev.type == 0xB0 && ev.a == 64) {
      score.pedals.push_back(
          {ticks_to_seconds(ev.tick, tempi, division), ev.b >= 64, ev.channel});
    }
  }
  std::sort(score.notes.begin(), score.notes.end(),
            [](const MidiNote& a, const MidiNote& b) {
              if (a.onset_s != b.onset_s) return a.onset_s < b.onset_s;
              return a.pitch < b.pitch;
            });
  for (const MidiNote& n : score.notes)
    score.duration_s = std::max(score.duration_s, n.offset_s);
  return score;
}

void write_midi(const std::string& path, const MidiScore& score) {
  constexpr int kDivision = 480;
  constexpr double kUsPerQuarter = 500000.0;  // 120 bpm
  auto to_tick = [&](double s) {
    return static_cast<long>(std::lround(s * 1e6 / kUsPerQuarter * kDivision));
  };

  struct Out {
    long tick;
    int order;  // program changes first at a tick, then offs, then ons
    std::vector<unsigned char> bytes;
  };
  std::vector<Out> outs;
  std::map<int, int> channel_program;
  for (const MidiNote& n : score.notes) {
    if (!channel_program.count(n.channel)) {
      channel_program[n.channel] = n.instrument;
      outs.push_back({0, 0,
                      {static_cast<unsigned char>(0xC0 | (n.channel & 0x0F)),
                       static_cast<unsigned char>(n.instrument & 0x7F)}});
    }
    outs.push_back({to_tick(n.onset_s), 2,
                    {static_cast<unsigned char>(0x90 | (n.channel & 0x0F)),
                     static_cast<unsigned char>(n.pitch & 0x7F),
                     static_cast<unsigned char>(std::clamp(n.velocity, 1, 127))}});
    outs.push_back({to_tick(n.offset_s), 1,
                    {static_cast<unsigned char>(0x80 | (n.channel & 0x0F)),
                     static_cast<unsigned char>(n.pitch & 0x7F), 64}});
  }
  for (const PedalEvent& p : score.pedals) {
    outs.push_back({to_tick(p.time_s), 1,
                    {static_cast<unsigned char>(0xB0 | (p.channel & 0x0F)), 64,
                     static_cast<unsigned char>(p.down ? 127 : 0)}});
  }
  std::stable_sort(outs.begin(), outs.end(), [](const Out& a, const Out& b) {
    if (a.tick != b.tick) return a.tick < b.tick;
    return a.order < b.order;
  });

  std::vector<unsigned char> track;
  auto push_vlq = [&track](long v) {
    unsigned char buf[4];
    int n = 0;
    buf[n++] = v & 0x7F;
    while ((v >>= 7)) buf[n++] = 0x80 | (v & 0x7F);
    while (n--) track.push_back(buf[n]);
  };
  // Tempo meta event first.
  push_vlq(0);
  const long us = static_cast<long>(kUsPerQuarter);
  track.insert(track.end(), {0xFF, 0x51, 0x03,
                             static_cast<unsigned char>((us >> 16) & 0xFF),
                             static_cast<unsigned char>((us >> 8) & 0xFF),
                             static_cast<unsigned char>(us & 0xFF)});
  long at = 0;
  for (const Out& o : outs) {
    push_vlq(o.tick - at);
    at = o.tick;
    track.insert(track.end(), o.bytes.begin(), o.bytes.end());
  }
  push_vlq(0);
  track.insert(track.end(), {0xFF, 0x2F, 0x00});

  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write MIDI file: " + path);
  auto be16 = [&out](uint16_t v) {
    out.put(char(v >> 8));
    out.put(char(v & 0xFF));
  };
  auto be32 = [&out](uint32_t v) {
    for (int i = 3; i >= 0; --i) out.put(char((v >> (8 * i)) & 0xFF));
  };
  out.write("MThd", 4);
  be32(6);
  be16(0);
  be16(1);
  be16(kDivision);
  out.write("MTrk", 4);
  be32(static_cast<uint32_t>(track.size()));
  out.write(reinterpret_cast<const char*>(track.data()),
            static_cast<std::streamsize>(track.size()));
}

MidiScore preprocess_midi(MidiScore score, const InstrumentDelayTable& delays) {
  // Pedal: extend sounding notes to the pedal release on their channel.
  if (!score.pedals.empty()) {
    std::sort(score.pedals.begin(), score.pedals.end(),
              [](const PedalEvent& a, const PedalEvent& b) {
                return a.time_s < b.time_s;
              });
    for (MidiNote& n : score.notes) {
      bool down = false;
      for (const PedalEvent& p : score.pedals) {
        if (p.channel != n.channel) continue;
        if (p.time_s <= n.offset_s) {
          down = p.down;
          continue;
        }
        if (!down) break;
        if (!p.down) {
          n.offset_s = p.time_s;
          break;
        }
      }
    }
    score.pedals.clear();
  }

  std::sort(score.notes.begin(), score.notes.end(),
            [](const MidiNote& a, const MidiNote& b) {
              if (a.onset_s != b.onset_s) return a.onset_s < b.onset_s;
              return a.pitch < b.pitch;
            });

  auto delay_of = [&delays](int instrument) -> const InstrumentDelays& {
    auto it = delays.find(instrument);
    if (it == delays.end())
      throw std::runtime_error("no delay entry for instrument " +
                               std::to_string(instrument));
    return it->second;
  };

  // Same-pitch gaps for sustained instruments.
  for (size_t i = 0; i < score.notes.size(); ++i) {
    MidiNote& cur = score.notes[i];
    const InstrumentDelays& d = delay_of(cur.instrument);
    if (!d.sustained) continue;
    for (size_t j = i + 1; j < score.notes.size(); ++j) {
      const MidiNote& next = score.notes[j];
      if (next.pitch != cur.pitch || next.channel != cur.channel) continue;
      if (next.onset_s - cur.offset_s < 0.02) {
        const double gap = std::clamp(0.7 * d.offset_delay_s, 0.02, 0.3);
        cur.offset_s = next.onset_s - gap;
      }
      break;
    }
  }

  // Minimum length 30 ms; drop notes whose extension would cross the next
  // same-pitch onset.
  std::vector<MidiNote> kept;
  for (size_t i = 0; i < score.notes.size(); ++i) {
    MidiNote n = score.notes[i];
    if (n.offset_s - n.onset_s < 0.03) {
      const double extended = n.onset_s + 0.03;
      bool crosses = false;
      for (size_t j = 0; j < score.notes.size(); ++j) {
        if (j == i || score.notes[j].pitch != n.pitch) continue;
        if (score.notes[j].onset_s > n.onset_s &&
            score.notes[j].onset_s < extended) {
          crosses = true;
          break;
        }
      }
      if (crosses) continue;
      n.offset_s = extended;
    }
    kept.push_back(n);
  }
  score.notes = std::move(kept);
  score.duration_s = 0.0;
  for (const MidiNote& n : score.notes)
    score.duration_s = std::max(score.duration_s, n.offset_s);
  return score;
}

std::vector<NoteAnnotation> adjust_annotations(const MidiScore& score,
                                               const InstrumentDelayTable& delays) {
  std::vector<NoteAnnotation> out;
  for (const MidiNote& n : score.notes) {
    auto it = delays.find(n.instrument);
    if (it == delays.end())
      throw std::runtime_error("no delay entry for instrument " +
                               std::to_string(n.instrument));
    NoteAnnotation a;
    a.onset_s = n.onset_s + it->second.onset_delay_s;
    a.offset_s = n.offset_s + it->second.offset_delay_s;
    a.pitch_midi = n.pitch;
    a.instrument = n.instrument;
    out.push_back(a);
  }
  return out;
}

}  // namespace pitchtrack
