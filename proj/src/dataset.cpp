#include "pitchtrack/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <stdexcept>

#include "json.hpp"
#include "pitchtrack/synth.hpp"
#include "pitchtrack/types.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace pitchtrack {

MidiScore generate_score(std::uint64_t seed, const ScoreGenConfig& cfg) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> voice_count(cfg.min_voices, cfg.max_voices);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_real_distribution<double> dur(cfg.min_note_s, cfg.max_note_s);

  // C major scale degrees; each voice walks its own range.
  static const int kScale[] = {0, 2, 4, 5, 7, 9, 11};
  struct VoiceRange {
    int lo, hi;
  };
  static const VoiceRange kRanges[] = {{40, 55}, {50, 64}, {57, 72}, {64, 83}};

  const int nvoices = voice_count(rng);
  const auto& instruments = builtin_instruments();
  std::vector<int> programs;
  for (const InstrumentPreset& p : instruments) programs.push_back(p.program);
  std::shuffle(programs.begin(), programs.end(), rng);

  MidiScore score;
  for (int v = 0; v < nvoices; ++v) {
    const VoiceRange range = kRanges[v % 4];
    const int program = programs[v % programs.size()];
    std::vector<int> degrees;
    for (int p = range.lo; p <= range.hi; ++p) {
      for (int s : kScale) {
        if ((p % 12) == ((s + 0) % 12)) degrees.push_back(p);
      }
    }
    int at = static_cast<int>(rng() % degrees.size());
    double t = cfg.lead_in_s;
    while (t < cfg.lead_in_s + cfg.length_s) {
      const double d = dur(rng);
      if (unit(rng) < cfg.rest_probability) {
        t += d * 0.6;
        continue;
      }
      MidiNote note;
      note.onset_s = t;
      note.offset_s = t + d;
      note.pitch = degrees[at];
      note.channel = v;
      note.instrument = program;
      note.velocity = 72 + static_cast<int>(rng() % 32);
      score.notes.push_back(note);
      t += d;
      if (unit(rng) >= cfg.repeat_probability) {
        const int step = static_cast<int>(rng() % 5) - 2;  // -2..+2 degrees
        at = std::clamp(at + step, 0, static_cast<int>(degrees.size()) - 1);
      }
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

std::vector<const CorpusExcerpt*> CorpusManifest::split_set(
    const std::string& split) const {
  std::vector<const CorpusExcerpt*> out;
  for (const CorpusExcerpt& e : excerpts) {
    if (e.split == split) out.push_back(&e);
  }
  return out;
}

namespace {

CorpusManifest build_from_scores(const std::string& dir,
                                 std::vector<std::pair<std::string, MidiScore>> scores,
                                 std::uint64_t seed, double validation_fraction) {
  fs::create_directories(dir);
  const InstrumentDelayTable delays = builtin_delay_table();
  CorpusManifest manifest;
  manifest.root = dir;
  const int val_every =
      validation_fraction > 0.0
          ? std::max(2, static_cast<int>(std::lround(1.0 / validation_fraction)))
          : 0;
  for (size_t i = 0; i < scores.size(); ++i) {
    const std::string& id = scores[i].first;
    MidiScore score = preprocess_midi(std::move(scores[i].second), delays);
    const std::uint64_t excerpt_seed = seed + 0x9e3779b97f4a7c15ULL * (i + 1);
    const AudioBuffer audio = render_score(score, excerpt_seed);

    CorpusExcerpt e;
    e.id = id;
    e.wav = id + ".wav";
    e.annotations = id + ".json";
    e.midi = id + ".mid";
    e.split = (val_every > 0 && (i % val_every) == static_cast<size_t>(val_every - 1))
                  ? "validation"
                  : "train";
    write_wav((fs::path(dir) / e.wav).string(), audio);
    write_midi((fs::path(dir) / e.midi).string(), score);
    save_annotations((fs::path(dir) / e.annotations).string(),
                     adjust_annotations(score, delays));
    manifest.excerpts.push_back(e);
  }
  save_manifest((fs::path(dir) / "manifest.json").string(), manifest);
  return manifest;
}

}  // namespace

CorpusManifest build_corpus(const std::string& dir, const DatasetConfig& cfg) {
  std::vector<std::pair<std::string, MidiScore>> scores;
  for (int i = 0; i < cfg.num_excerpts; ++i) {
    char id[32];
    std::snprintf(id, sizeof(id), "excerpt_%03d", i);
    scores.push_back({id, generate_score(cfg.seed + 1000003ULL * i, cfg.score)});
  }
  return build_from_scores(dir, std::move(scores), cfg.seed,
                           cfg.validation_fraction);
}

CorpusManifest build_corpus_from_midi(const std::string& dir,
                                      const std::vector<std::string>& midi_files,
                                      std::uint64_t seed,
                                      double validation_fraction) {
  std::vector<std::pair<std::string, MidiScore>> scores;
  for (const std::string& path : midi_files) {
    scores.push_back({fs::path(path).stem().string(), read_midi(path)});
  }
  return build_from_scores(dir, std::move(scores), seed, validation_fraction);
}

void save_manifest(const std::string& path, const CorpusManifest& manifest) {
  json j;
  j["version"] = 1;
  j["excerpts"] = json::array();
  for (const CorpusExcerpt& e : manifest.excerpts) {
    j["excerpts"].push_back({{"id", e.id},
                             {"wav", e.wav},
                             {"annotations", e.annotations},
                             {"midi", e.midi},
                             {"split", e.split}});
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write manifest: " + path);
  out << j.dump(2) << "\n";
}

CorpusManifest load_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open manifest: " + path);
  json j = json::parse(in);
  CorpusManifest manifest;
  manifest.root = fs::path(path).parent_path().string();
  for (const json& e : j.at("excerpts")) {
    manifest.excerpts.push_back({e.at("id"), e.at("wav"), e.at("annotations"),
                                 e.at("midi"), e.at("split")});
  }
  return manifest;
}

void save_annotations(const std::string& path,
                      const std::vector<NoteAnnotation>& notes) {
  json j;
  j["notes"] = json::array();
  for (const NoteAnnotation& n : notes) {
    j["notes"].push_back({{"onset_s", n.onset_s},
                          {"offset_s", n.offset_s},
                          {"pitch_midi", n.pitch_midi},
                          {"instrument", n.instrument}});
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write annotations: " + path);
  out << j.dump(2) << "\n";
}

std::vector<NoteAnnotation> load_annotations(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open annotations: " + path);
  json j = json::parse(in);
  std::vector<NoteAnnotation> out;
  for (const json& n : j.at("notes")) {
    NoteAnnotation a;
    a.onset_s = n.at("onset_s");
    a.offset_s = n.at("offset_s");
    a.pitch_midi = n.at("pitch_midi");
    a.instrument = n.value("instrument", 0);
    out.push_back(a);
  }
  return out;
}

const std::vector<int>& n1_negative_offsets() {
  static const std::vector<int> v = {-24, -19, -12, -9, -8, -7, -6, -5, -4, -3,
                                     3,   4,   5,   6,  7,  8,  9,  12, 19, 24};
  return v;
}

namespace {

// Closest detected peak within 50 cents; ties go to the lower pitch.
std::optional<double> snap_to_detected(
    double pitch_midi, const std::vector<const TentativeF0*>& t0s) {
  std::optional<double> best;
  double best_dist = 50.0 + 1e-9;
  for (const TentativeF0* t0 : t0s) {
    const double cents = std::abs(t0->pitch_cents - midi_to_cents(pitch_midi));
    if (cents < best_dist ||
        (cents == best_dist && best && t0->pitch_cents < midi_to_cents(*best))) {
      best_dist = cents;
      best = cents_to_midi(t0->pitch_cents);
    }
  }
  return best;
}

}  // namespace

std::vector<N1Example> select_n1_examples(
    const std::vector<NoteAnnotation>& annotations, int num_frames,
    int frame_stride,
    const std::vector<std::vector<const TentativeF0*>>* detected) {
  if (frame_stride < 1)
    throw std::invalid_argument("select_n1_examples: stride must be >= 1");
  std::vector<N1Example> out;
  static const std::vector<const TentativeF0*> kNoT0s;
  for (int f = 0; f < num_frames; f += frame_stride) {
    const double t = frame_to_seconds(f);
    const std::vector<const TentativeF0*>& t0s =
        detected ? (*detected)[f] : kNoT0s;

    std::vector<double> positives;
    for (const NoteAnnotation& a : annotations) {
      if (t < a.onset_s || t > a.offset_s) continue;
      double pitch = a.pitch_midi;
      if (detected) {
        if (auto snapped = snap_to_detected(pitch, t0s)) pitch = *snapped;
      }
      if (pitch < kMinPitchMidi || pitch > kMaxPitchMidi) continue;
      positives.push_back(pitch);
    }
    for (double p : positives) out.push_back({f, p, 1.0});

    auto collides = [&positives](double pitch) {
      for (double p : positives) {
        if (std::abs(p - pitch) * 100.0 <= 50.0) return true;
      }
      return false;
    };

    std::vector<double> negatives;
    for (const NoteAnnotation& a : annotations) {
      if (t < a.onset_s || t > a.offset_s) continue;
      for (int offset : n1_negative_offsets()) {
        double pitch = a.pitch_midi + offset;
        if (detected) {
          if (auto snapped = snap_to_detected(pitch, t0s)) pitch = *snapped;
        }
        if (pitch < kMinPitchMidi || pitch > kMaxPitchMidi) continue;
        if (collides(pitch)) continue;
        negatives.push_back(pitch);
      }
    }
    if (detected) {
      // Spurious detections become additional negatives.
      for (const TentativeF0* t0 : t0s) {
        const double pitch = cents_to_midi(t0->pitch_cents);
        if (collides(pitch)) continue;
        bool dup = false;
        for (double n : negatives) {
          if (std::abs(n - pitch) < 0.005) dup = true;
        }
        if (!dup) negatives.push_back(pitch);
      }
    }
    for (double p : negatives) out.push_back({f, p, 0.0});
  }
  return out;
}

}  // namespace pitchtrack
