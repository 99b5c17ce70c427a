#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "pitchtrack/contours.hpp"
#include "pitchtrack/dataset.hpp"
#include "pitchtrack/events.hpp"
#include "pitchtrack/forward_select.hpp"
#include "pitchtrack/kernel.hpp"
#include "pitchtrack/metrics.hpp"
#include "pitchtrack/nn.hpp"
#include "pitchtrack/notes.hpp"
#include "pitchtrack/pitchogram.hpp"
#include "pitchtrack/spectral.hpp"

namespace pitchtrack {

struct PipelineModels {
  PitchKernel kernel;
  Vec whitening;  // W over the 1563-bin pitch grid
  nn::Network n2, n3, n4, n5, n6;
  PeakPickParams peak;
  OffsetDecisionParams offset;
  double removal_stop = 0.55;

  void save(const std::string& dir) const;
  static PipelineModels load(const std::string& dir);
  // Throws naming the missing stage when a model required by transcribe is
  // absent or carries the wrong feature layout.
  void validate_for_transcribe() const;
};

// One (stage, representation) read; train_all and transcribe record these
// so the stage dependency structure can be asserted in tests.
struct AccessLog {
  std::vector<std::pair<std::string, std::string>> reads;
  void note(const std::string& stage, const std::string& repr) {
    for (const auto& r : reads) {
      if (r.first == stage && r.second == repr) return;
    }
    reads.push_back({stage, repr});
  }
};

// Per-track state: each step consumes the representations of earlier steps
// only. Steps must be invoked in order; accessors throw when the step that
// produces them has not run.
class TrackProcessor {
 public:
  TrackProcessor(SpectrogramFamily family, const PipelineModels* models,
                 AccessLog* log = nullptr);

  void set_stage(std::string stage) { stage_ = std::move(stage); }

  void run_tentogram();
  void run_classification();     // N_2 over picked t0s
  void run_pitchogram();         // render, regions, merge, contours
  void run_event_curves(bool with_offsets);  // N_3 (and N_4) along contours
  void run_onsets();             // OCS + peak picking
  void run_offsets();            // N_5 + offset decision -> tentative notes
  void run_note_classification();  // N_6 + iterative removal

  Transcription transcription() const;

  // Accessors (logged).
  const SpectrogramFamily& family();
  const Mat& l15_smooth();
  const Mat& l25_smooth();
  const Mat& tentogram();
  std::vector<TentativeF0>& t0s();
  const std::vector<std::vector<const TentativeF0*>>& frame_t0s();
  const Mat& pitchogram();
  const std::vector<Contour>& contours();
  const std::vector<Vec>& onset_curves();      // N_3 prelogits
  const std::vector<Vec>& onset_curves_smooth();
  const std::vector<Mat>& n3_hidden();
  const std::vector<Vec>& offset_curves();     // N_4 outputs
  const std::vector<OnsetEvent>& onsets();
  std::vector<TentativeNote>& notes();
  NoteContext note_context();

  int frames() const { return family_.frames(); }

  // Stage-2 offset decision for a note span [onset, cap]; returns the
  // offset frame.
  int decide_note_offset(int contour_id, int onset_frame, int cap_frame) const;
  double score_note(const TentativeNote& note,
                    const std::vector<TentativeNote>& all);

 private:
  ContourEvaluator make_contour_evaluator();
  void log(const char* repr);

  SpectrogramFamily family_;
  const PipelineModels* models_;
  AccessLog* access_log_;
  std::string stage_ = "transcribe";

  std::optional<Mat> l15_smooth_, l25_smooth_;
  std::optional<Mat> tentogram_;
  std::vector<TentativeF0> t0s_;
  bool classified_ = false;
  std::vector<std::vector<const TentativeF0*>> frame_t0s_;
  std::optional<Mat> pitchogram_;
  std::vector<Contour> contours_;
  bool contours_ready_ = false;
  std::vector<Vec> oc_;
  std::vector<Mat> n3_hidden_;
  std::vector<Vec> ofc_;
  bool curves_ready_ = false, ofc_ready_ = false;
  std::vector<Vec> ocs_;
  std::vector<OnsetEvent> onsets_;
  bool onsets_ready_ = false;
  std::vector<TentativeNote> notes_;
  bool notes_ready_ = false;
  bool removal_done_ = false;
};

struct TranscribeOptions {
  AccessLog* access_log = nullptr;
  // When set, intermediate planes and curves are written here for `plot`.
  std::string dump_dir;
};

Transcription transcribe(const AudioBuffer& audio, const PipelineModels& models,
                         const TranscribeOptions& options = {});

// --- Training ---------------------------------------------------------------

struct TrainAllConfig {
  std::uint64_t seed = 1;
  bool regularize = true;  // fresh random EQ of M before every stage
  int n1_iterations = 2;
  int n1_frame_stride = 6;
  double n3_negative_keep = 0.05;
  double n4_keep_rate = 0.10;
  int max_examples = 80000;  // per-network cap, deterministic thinning

  int n1_epochs = 250, n2_epochs = 220, n3_epochs = 180, n4_epochs = 180,
      n5_epochs = 180, n6_epochs = 140;
  int early_patience = 6;   // N_1, N_2
  int late_patience = 20;   // N_3 .. N_6

  bool run_forward_selection = false;  // default: published kernel indices
  ForwardSelectConfig forward_select;

  bool tune_peak = true;
  bool tune_offset = true;
  double removal_stop = 0.55;

  std::string cache_dir;  // spectrogram cache (defaults under the corpus)
  std::string log_path;   // line-delimited JSON training log
};

PipelineModels train_all(const CorpusManifest& corpus, const TrainAllConfig& cfg,
                         AccessLog* dag_log = nullptr);

// --- Output files -----------------------------------------------------------

void write_notes_json(const std::string& path, const std::vector<FinalNote>& notes);
std::vector<FinalNote> read_notes_json(const std::string& path);
void write_framewise_csv(const std::string& path,
                         const std::vector<FramePitch>& frames);
std::vector<FramePitch> read_framewise_csv(const std::string& path);
void write_notes_midi(const std::string& path, const std::vector<FinalNote>& notes);

}  // namespace pitchtrack
