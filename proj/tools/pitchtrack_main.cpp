#include <cstdio>
#include <filesystem>
#include <iostream>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "pitchtrack/audio.hpp"
#include "pitchtrack/config.hpp"
#include "pitchtrack/dataset.hpp"
#include "pitchtrack/metrics.hpp"
#include "pitchtrack/pipeline.hpp"
#include "pitchtrack/plotting.hpp"

namespace fs = std::filesystem;
using namespace pitchtrack;
using nlohmann::json;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitBadInput = 2;
constexpr int kExitBadBundle = 3;

struct CommonOpts {
  std::string config_file;
  std::vector<std::string> overrides;  // key=value
};

RunConfig resolve_config(const CommonOpts& opts) {
  RunConfig cfg;
  if (!opts.config_file.empty()) cfg.load_file(opts.config_file);
  for (const std::string& kv : opts.overrides) {
    const size_t eq = kv.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("--set expects key=value, got: " + kv);
    cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  return cfg;
}

int cmd_transcribe(const std::string& audio_path, const std::string& model_dir,
                   const std::string& notes_path, const std::string& frames_path,
                   const std::string& midi_path, const std::string& dump_dir) {
  AudioBuffer audio;
  try {
    audio = read_wav(audio_path);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitBadInput;
  }
  PipelineModels models;
  try {
    models = PipelineModels::load(model_dir);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitBadBundle;
  }
  TranscribeOptions opts;
  opts.dump_dir = dump_dir;
  const Transcription result = transcribe(audio, models, opts);
  if (!notes_path.empty()) write_notes_json(notes_path, result.notes);
  if (!frames_path.empty()) write_framewise_csv(frames_path, result.framewise);
  if (!midi_path.empty()) write_notes_midi(midi_path, result.notes);
  std::cout << "notes: " << result.notes.size()
            << "  framewise: " << result.framewise.size() << "\n";
  return 0;
}

int cmd_train(const std::string& corpus_path, const std::string& out_dir,
              RunConfig cfg, const std::string& log_path) {
  const CorpusManifest corpus = load_manifest(corpus_path);
  cfg.train.log_path = log_path;
  const PipelineModels models = train_all(corpus, cfg.train);
  models.save(out_dir);
  std::cout << "model bundle written to " << out_dir << "\n";
  return 0;
}

std::vector<NoteAnnotation> reference_notes(const std::string& path) {
  // Reference files may be annotation JSON ({"notes": [...]}) or note
  // estimate JSON (a bare array).
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open reference: " + path);
  json j = json::parse(in);
  std::vector<NoteAnnotation> out;
  const json& arr = j.is_array() ? j : j.at("notes");
  for (const json& n : arr) {
    NoteAnnotation a;
    a.onset_s = n.at("onset_s");
    a.offset_s = n.at("offset_s");
    a.pitch_midi = n.at("pitch_midi");
    a.instrument = n.value("instrument", 0);
    out.push_back(a);
  }
  return out;
}

json report_to_json(const MetricReport& r) {
  return {{"matched", r.matched},     {"estimates", r.est_count},
          {"references", r.ref_count}, {"precision", 100.0 * r.precision},
          {"recall", 100.0 * r.recall}, {"f_measure", 100.0 * r.f_measure},
          {"accuracy", 100.0 * r.accuracy}};
}

void print_report_row(const char* task, const MetricReport& r) {
  std::printf("  %-12s  P %6.1f  R %6.1f  F %6.1f  A %6.1f  (%d/%d est, %d ref)\n",
              task, 100.0 * r.precision, 100.0 * r.recall, 100.0 * r.f_measure,
              100.0 * r.accuracy, r.matched, r.est_count, r.ref_count);
}

int cmd_evaluate(const std::vector<std::string>& est_paths,
                 const std::vector<std::string>& ref_paths,
                 const std::string& task, bool combined, bool optimal,
                 const RunConfig& cfg, const std::string& json_path) {
  if (est_paths.size() != ref_paths.size() || est_paths.empty()) {
    std::cerr << "error: --est and --ref must be given the same number of times\n";
    return kExitBadInput;
  }
  const MatchSpec& spec = cfg.match;
  json out;
  out["tracks"] = json::array();

  struct TrackScores {
    MetricReport framewise, onset, offset, onoff;
  };
  std::vector<TrackScores> all;
  for (size_t i = 0; i < est_paths.size(); ++i) {
    TrackScores scores;
    const bool framewise_only = est_paths[i].ends_with(".csv");
    json track;
    track["estimates"] = est_paths[i];
    track["references"] = ref_paths[i];
    if (framewise_only) {
      const auto est = read_framewise_csv(est_paths[i]);
      const auto ref = ref_paths[i].ends_with(".csv")
                           ? read_framewise_csv(ref_paths[i])
                           : annotations_to_frames(reference_notes(ref_paths[i]));
      scores.framewise = framewise_metrics(est, ref, spec);
      track["framewise"] = report_to_json(scores.framewise);
    } else {
      const auto est = read_notes_json(est_paths[i]);
      const auto ref = reference_notes(ref_paths[i]);
      scores.onset = note_metrics(est, ref, NoteTask::kOnset, spec, optimal);
      scores.offset = note_metrics(est, ref, NoteTask::kOffset, spec, optimal);
      scores.onoff = note_metrics(est, ref, NoteTask::kOnsetOffset, spec, optimal);
      std::vector<FramePitch> est_frames;
      for (const FinalNote& n : est) {
        NoteAnnotation a{n.onset_s, n.offset_s, n.pitch_midi, 0};
        const auto expanded = annotations_to_frames({a});
        est_frames.insert(est_frames.end(), expanded.begin(), expanded.end());
      }
      scores.framewise =
          framewise_metrics(est_frames, annotations_to_frames(ref), spec);
      track["framewise"] = report_to_json(scores.framewise);
      track["onset"] = report_to_json(scores.onset);
      track["offset"] = report_to_json(scores.offset);
      track["onset_offset"] = report_to_json(scores.onoff);
    }
    out["tracks"].push_back(track);
    all.push_back(scores);

    std::printf("%s\n", est_paths[i].c_str());
    if (task == "all" || task == "framewise")
      print_report_row("framewise", scores.framewise);
    if (!framewise_only) {
      if (task == "all" || task == "onset") print_report_row("onset", scores.onset);
      if (task == "all" || task == "offset")
        print_report_row("offset", scores.offset);
      if (task == "all" || task == "onset-offset")
        print_report_row("onset+offset", scores.onoff);
    }
  }

  if (combined) {
    auto harmonic = [&](auto pick) {
      double inv = 0.0;
      for (const TrackScores& s : all) {
        const double f = 100.0 * pick(s).f_measure;
        if (f <= 0.0) return 0.0;
        inv += 1.0 / f;
      }
      return all.empty() ? 0.0 : all.size() / inv;
    };
    json comb;
    comb["framewise"] =
        harmonic([](const TrackScores& s) -> const MetricReport& {
          return s.framewise;
        });
    comb["onset"] = harmonic(
        [](const TrackScores& s) -> const MetricReport& { return s.onset; });
    comb["offset"] = harmonic(
        [](const TrackScores& s) -> const MetricReport& { return s.offset; });
    comb["onset_offset"] = harmonic(
        [](const TrackScores& s) -> const MetricReport& { return s.onoff; });
    out["combined"] = comb;
    std::printf("combined (harmonic mean of %zu sets)\n", all.size());
    std::printf("  framewise %.1f  onset %.1f  offset %.1f  onset+offset %.1f\n",
                comb["framewise"].get<double>(), comb["onset"].get<double>(),
                comb["offset"].get<double>(), comb["onset_offset"].get<double>());
  }

  if (!json_path.empty()) {
    std::ofstream js(json_path);
    js << out.dump(2) << "\n";
  }
  return 0;
}

int cmd_synth_dataset(const std::string& out_dir, RunConfig cfg,
                      const std::string& midi_dir) {
  cfg.dataset.seed = cfg.train.seed;
  CorpusManifest manifest;
  if (midi_dir.empty()) {
    manifest = build_corpus(out_dir, cfg.dataset);
  } else {
    std::vector<std::string> files;
    for (const auto& entry : fs::directory_iterator(midi_dir)) {
      if (entry.path().extension() == ".mid" ||
          entry.path().extension() == ".midi") {
        files.push_back(entry.path().string());
      }
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) {
      std::cerr << "error: no MIDI files in " << midi_dir << "\n";
      return kExitBadInput;
    }
    manifest = build_corpus_from_midi(out_dir, files, cfg.dataset.seed,
                                      cfg.dataset.validation_fraction);
  }
  std::cout << "corpus with " << manifest.excerpts.size() << " excerpts in "
            << out_dir << "\n";
  return 0;
}

int cmd_plot(const std::string& dump_dir, const std::string& out_dir) {
  render_dump(dump_dir, out_dir);
  std::cout << "plots written to " << out_dir << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"polyphonic pitch tracker"};
  app.require_subcommand(1);
  CommonOpts common;
  app.add_option("--config", common.config_file, "key=value config file");
  app.add_option("--set", common.overrides, "override one config key (key=value)");

  // transcribe
  auto* transcribe_cmd = app.add_subcommand("transcribe", "audio -> notes + f0s");
  std::string audio_path, model_dir, notes_path = "notes.json";
  std::string frames_path = "framewise.csv", midi_path, dump_dir;
  transcribe_cmd->add_option("audio", audio_path, "input WAV")->required();
  transcribe_cmd->add_option("--models", model_dir, "model bundle directory")
      ->required();
  transcribe_cmd->add_option("--notes", notes_path, "notes JSON output");
  transcribe_cmd->add_option("--framewise", frames_path, "framewise CSV output");
  transcribe_cmd->add_option("--midi", midi_path, "optional MIDI output");
  transcribe_cmd->add_option("--dump", dump_dir,
                             "dump intermediate planes/curves for `plot`");

  // train
  auto* train_cmd = app.add_subcommand("train", "train the full model chain");
  std::string corpus_path, out_dir, log_path;
  std::uint64_t seed = 0;
  bool seed_given = false;
  train_cmd->add_option("--corpus", corpus_path, "corpus manifest JSON")
      ->required();
  train_cmd->add_option("--out", out_dir, "output model bundle directory")
      ->required();
  train_cmd->add_option("--log", log_path, "training log (line JSON)");
  auto* seed_opt = train_cmd->add_option("--seed", seed, "training RNG seed");

  // evaluate
  auto* eval_cmd = app.add_subcommand("evaluate", "score estimates against references");
  std::vector<std::string> est_paths, ref_paths;
  std::string task = "all", eval_json;
  bool combined = false, optimal = false;
  eval_cmd->add_option("--est", est_paths, "estimate file (repeatable)")
      ->required();
  eval_cmd->add_option("--ref", ref_paths, "reference file (repeatable)")
      ->required();
  eval_cmd->add_option("--task", task,
                       "all|framewise|onset|offset|onset-offset");
  eval_cmd->add_flag("--combined", combined, "harmonic mean across the sets");
  eval_cmd->add_flag("--optimal", optimal,
                     "use maximum-cardinality matching instead of greedy");
  eval_cmd->add_option("--json", eval_json, "write the report as JSON");

  // synth-dataset
  auto* synth_cmd = app.add_subcommand("synth-dataset", "build a synthetic corpus");
  std::string synth_out, midi_dir;
  std::uint64_t synth_seed = 0;
  synth_cmd->add_option("--out", synth_out, "output directory")->required();
  auto* synth_seed_opt =
      synth_cmd->add_option("--seed", synth_seed, "generation RNG seed");
  synth_cmd->add_option("--from-midi", midi_dir,
                        "render existing MIDI files instead of generating");
  int jobs = 1;
  synth_cmd->add_option("--jobs", jobs, "worker count (reserved)");

  // plot
  auto* plot_cmd = app.add_subcommand("plot", "render dumped intermediates");
  std::string plot_dump, plot_out = "plots";
  plot_cmd->add_option("--dump", plot_dump, "dump directory from transcribe")
      ->required();
  plot_cmd->add_option("--out", plot_out, "output directory");

  CLI11_PARSE(app, argc, argv);

  try {
    RunConfig cfg = resolve_config(common);
    if (*transcribe_cmd) {
      return cmd_transcribe(audio_path, model_dir, notes_path, frames_path,
                            midi_path, dump_dir);
    }
    if (*train_cmd) {
      if (seed_opt->count() == 0) {
        std::cerr << "error: train requires --seed\n";
        return kExitUsage;
      }
      seed_given = true;
      cfg.train.seed = seed;
      return cmd_train(corpus_path, out_dir, cfg, log_path);
    }
    if (*eval_cmd) {
      return cmd_evaluate(est_paths, ref_paths, task, combined, optimal, cfg,
                          eval_json);
    }
    if (*synth_cmd) {
      if (synth_seed_opt->count() == 0) {
        std::cerr << "error: synth-dataset requires --seed\n";
        return kExitUsage;
      }
      cfg.train.seed = synth_seed;
      (void)jobs;
      return cmd_synth_dataset(synth_out, cfg, midi_dir);
    }
    if (*plot_cmd) {
      return cmd_plot(plot_dump, plot_out);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  (void)seed_given;
  return 0;
}
