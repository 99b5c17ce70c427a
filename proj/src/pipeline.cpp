#include "pitchtrack/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "pitchtrack/audio.hpp"
#include "pitchtrack/dsp.hpp"
#include "pitchtrack/eqfilter.hpp"
#include "pitchtrack/plotting.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace pitchtrack {

namespace {

struct StageError : std::runtime_error {
  explicit StageError(const std::string& stage, const std::string& what)
      : std::runtime_error("stage " + stage + ": " + what) {}
};

}  // namespace

void PipelineModels::save(const std::string& dir) const {
  fs::create_directories(dir);
  save_kernel((fs::path(dir) / "kernel.txt").string(), kernel);
  nn::save_model((fs::path(dir) / "n2.model").string(), n2);
  nn::save_model((fs::path(dir) / "n3.model").string(), n3);
  nn::save_model((fs::path(dir) / "n4.model").string(), n4);
  nn::save_model((fs::path(dir) / "n5.model").string(), n5);
  nn::save_model((fs::path(dir) / "n6.model").string(), n6);
  json j;
  j["version"] = 1;
  j["peak"] = {{"z", peak.z},
               {"sigma", peak.sigma},
               {"threshold", peak.threshold},
               {"r", peak.r}};
  j["offset"] = {{"sigma", offset.sigma}, {"threshold", offset.threshold}};
  j["removal_stop"] = removal_stop;
  std::ofstream out(fs::path(dir) / "params.json");
  out << j.dump(2) << "\n";
}

PipelineModels PipelineModels::load(const std::string& dir) {
  PipelineModels m;
  const auto need = [&dir](const char* name) {
    const fs::path p = fs::path(dir) / name;
    if (!fs::exists(p))
      throw StageError(name, "missing model file in bundle " + dir);
    return p.string();
  };
  m.kernel = load_kernel(need("kernel.txt"));
  if (m.kernel.w_dct.empty())
    throw StageError("kernel", "bundle kernel has no whitening coefficients");
  Vec w_dct(15);
  for (int i = 0; i < 15; ++i) w_dct[i] = m.kernel.w_dct[i];
  m.whitening = whitening_vector(w_dct, dct_basis());
  m.n2 = nn::load_model(need("n2.model"));
  m.n3 = nn::load_model(need("n3.model"));
  m.n4 = nn::load_model(need("n4.model"));
  m.n5 = nn::load_model(need("n5.model"));
  m.n6 = nn::load_model(need("n6.model"));
  std::ifstream in(fs::path(dir) / "params.json");
  if (!in) throw StageError("params", "missing params.json in bundle " + dir);
  json j = json::parse(in);
  m.peak.z = j.at("peak").at("z");
  m.peak.sigma = j.at("peak").at("sigma");
  m.peak.threshold = j.at("peak").at("threshold");
  m.peak.r = j.at("peak").at("r");
  m.offset.sigma = j.at("offset").at("sigma");
  m.offset.threshold = j.at("offset").at("threshold");
  m.removal_stop = j.at("removal_stop");
  m.validate_for_transcribe();
  return m;
}

void PipelineModels::validate_for_transcribe() const {
  kernel.validate();
  if (kernel.size() != 50) throw StageError("kernel", "expected 50 entries");
  if (whitening.size() != kNumPitchBins)
    throw StageError("kernel", "whitening vector has the wrong size");
  const auto check = [](const nn::Network& net, const char* stage,
                        const char* tag, int input) {
    if (net.weights.empty()) throw StageError(stage, "model not loaded");
    if (net.layout_tag != tag)
      throw StageError(stage, "feature layout mismatch: model has '" +
                                  net.layout_tag + "', pipeline needs '" + tag +
                                  "'");
    if (net.input_size() != input)
      throw StageError(stage, "input size mismatch");
  };
  check(n2, "n2", kN2LayoutTag, kN2InputSize);
  check(n3, "n3", kOnsetLayoutTag, kOnsetInputSize);
  check(n4, "n4", kOnsetLayoutTag, kOnsetInputSize);
  check(n5, "n5", kOffsetLayoutTag, kOffsetInputSize);
  check(n6, "n6", kNoteLayoutTag, kNoteInputSize);
}

// --- TrackProcessor ---------------------------------------------------------

TrackProcessor::TrackProcessor(SpectrogramFamily family,
                               const PipelineModels* models, AccessLog* log)
    : family_(std::move(family)), models_(models), access_log_(log) {}

void TrackProcessor::log(const char* repr) {
  if (access_log_) access_log_->note(stage_, repr);
}

const SpectrogramFamily& TrackProcessor::family() {
  log("spectrogram");
  return family_;
}

const Mat& TrackProcessor::l15_smooth() {
  log("spectrogram");
  if (!l15_smooth_) l15_smooth_ = smooth_spectrum_3tap(family_.white.l15);
  return *l15_smooth_;
}

const Mat& TrackProcessor::l25_smooth() {
  log("spectrogram");
  if (!l25_smooth_) l25_smooth_ = smooth_spectrum_3tap(family_.white.l25);
  return *l25_smooth_;
}

void TrackProcessor::run_tentogram() {
  log("spectrogram");
  tentogram_ = tentogram_from_l4(family_.l4, models_->kernel, models_->whitening);
}

const Mat& TrackProcessor::tentogram() {
  if (!tentogram_) throw std::logic_error("tentogram not computed yet");
  log("tentogram");
  return *tentogram_;
}

void TrackProcessor::run_classification() {
  log("tentogram");
  log("spectrogram");
  t0s_ = pick_tentative_f0s(tentogram());
  frame_t0s_.assign(frames(), {});
  for (const TentativeF0& t0 : t0s_) frame_t0s_[t0.frame].push_back(&t0);

  const int n = static_cast<int>(t0s_.size());
#pragma omp parallel for schedule(static)
  for (int i = 0; i < n; ++i) {
    TentativeF0& t0 = t0s_[i];
    const Vec features = assemble_n2_input(
        t0.pitch_cents, t0.frame, family_.l4, models_->kernel.indices,
        frame_t0s_[t0.frame]);
    const nn::ForwardResult fwd = nn::forward(models_->n2, features);
    t0.prelogit = fwd.prelogit;
    t0.output = fwd.output;
    t0.hidden = fwd.hidden.back().array();
    t0.classified = true;
  }
  classified_ = true;
}

std::vector<TentativeF0>& TrackProcessor::t0s() {
  if (!classified_) throw std::logic_error("t0s not classified yet");
  log("t0s");
  return t0s_;
}

const std::vector<std::vector<const TentativeF0*>>& TrackProcessor::frame_t0s() {
  if (frame_t0s_.empty() && !t0s_.empty())
    throw std::logic_error("frame index not built");
  log("t0s");
  return frame_t0s_;
}

ContourEvaluator TrackProcessor::make_contour_evaluator() {
  return [this](int frame, double bin) {
    ContourEval eval;
    const TentativeF0* nearest = nullptr;
    double best = 20.0;  // within the Hann-41 bump of a deposit
    if (frame >= 0 && frame < frames()) {
      for (const TentativeF0* t0 : frame_t0s_[frame]) {
        if (!t0->classified || pitchogram_activation(t0->prelogit) <= 0.0)
          continue;
        const double d = std::abs((t0->pitch_cents - kMinCent) - bin);
        if (d < best) {
          best = d;
          nearest = t0;
        }
      }
    }
    if (nearest) {
      eval.pitch_cents = nearest->pitch_cents;
      eval.activation = pitchogram_activation(nearest->prelogit);
      eval.n2_output = nearest->output;
      eval.n2_hidden = nearest->hidden;
      return eval;
    }
    const double pitch_cents =
        std::round(cent_bin_to_cents(std::clamp(bin, 0.0, kNumCentBins - 1.0)));
    const int f = std::clamp(frame, 0, frames() - 1);
    const Vec features = assemble_n2_input(pitch_cents, f, family_.l4,
                                           models_->kernel.indices, frame_t0s_[f]);
    const nn::ForwardResult fwd = nn::forward(models_->n2, features);
    eval.pitch_cents = pitch_cents;
    eval.activation = std::max(0.0, pitchogram_activation(fwd.prelogit));
    eval.n2_output = fwd.output;
    eval.n2_hidden = fwd.hidden.back().array();
    return eval;
  };
}

void TrackProcessor::run_pitchogram() {
  log("t0s");
  pitchogram_ = render_pitchogram(t0s_, frames());
  std::vector<Region> regions =
      merge_regions(extract_regions(*pitchogram_), *pitchogram_);
  const ContourEvaluator evaluate = make_contour_evaluator();
  contours_.clear();
  contours_.reserve(regions.size());
  for (const Region& region : regions) {
    contours_.push_back(extract_ridge(region, *pitchogram_, evaluate));
  }
  contours_ready_ = true;
}

const Mat& TrackProcessor::pitchogram() {
  if (!pitchogram_) throw std::logic_error("pitchogram not computed yet");
  log("pitchogram");
  return *pitchogram_;
}

const std::vector<Contour>& TrackProcessor::contours() {
  if (!contours_ready_) throw std::logic_error("contours not computed yet");
  log("contours");
  return contours_;
}

void TrackProcessor::run_event_curves(bool with_offsets) {
  log("contours");
  log("spectrogram");
  const Mat& l15 = l15_smooth();
  const Vec& vl = family_.floor.level;
  const int nc = static_cast<int>(contours_.size());
  oc_.assign(nc, {});
  n3_hidden_.assign(nc, {});
  if (with_offsets) ofc_.assign(nc, {});

#pragma omp parallel for schedule(dynamic)
  for (int c = 0; c < nc; ++c) {
    const Contour& contour = contours_[c];
    const int len = contour.length();
    Vec oc(len);
    Mat hidden(models_->n3.layer_sizes[models_->n3.num_hidden()], len);
    Vec ofc = with_offsets ? Vec(len) : Vec();
    for (int i = 0; i < len; ++i) {
      const Vec features =
          assemble_onset_input(contour, l15, vl, contour.start_frame + i);
      const nn::ForwardResult f3 = nn::forward(models_->n3, features);
      oc[i] = f3.prelogit;
      hidden.col(i) = f3.hidden.back().array();
      if (with_offsets) ofc[i] = nn::forward(models_->n4, features).output;
    }
    oc_[c] = std::move(oc);
    n3_hidden_[c] = std::move(hidden);
    if (with_offsets) ofc_[c] = std::move(ofc);
  }
  curves_ready_ = true;
  ofc_ready_ = with_offsets;
}

const std::vector<Vec>& TrackProcessor::onset_curves() {
  if (!curves_ready_) throw std::logic_error("onset curves not computed yet");
  log("onset_curves");
  return oc_;
}

const std::vector<Mat>& TrackProcessor::n3_hidden() {
  if (!curves_ready_) throw std::logic_error("onset curves not computed yet");
  log("onset_curves");
  return n3_hidden_;
}

const std::vector<Vec>& TrackProcessor::offset_curves() {
  if (!ofc_ready_) throw std::logic_error("offset curves not computed yet");
  log("offset_curves");
  return ofc_;
}

void TrackProcessor::run_onsets() {
  log("onset_curves");
  const int nc = static_cast<int>(contours_.size());
  ocs_.assign(nc, {});
  onsets_.clear();
  for (int c = 0; c < nc; ++c) {
    ocs_[c] = onset_curve_smooth(oc_[c], models_->peak);
    const auto events = pick_onsets(oc_[c], contours_[c], c, models_->peak);
    onsets_.insert(onsets_.end(), events.begin(), events.end());
  }
  onsets_ready_ = true;
}

const std::vector<Vec>& TrackProcessor::onset_curves_smooth() {
  if (!onsets_ready_) throw std::logic_error("OCS not computed yet");
  log("onset_curves");
  return ocs_;
}

const std::vector<OnsetEvent>& TrackProcessor::onsets() {
  if (!onsets_ready_) throw std::logic_error("onsets not picked yet");
  log("onsets");
  return onsets_;
}

int TrackProcessor::decide_note_offset(int contour_id, int onset_frame,
                                       int cap_frame) const {
  const Contour& contour = contours_[contour_id];
  OffsetFeatureAccumulator acc(contour, ofc_[contour_id], family_.l4,
                               models_->kernel.indices, onset_frame);
  const int len = cap_frame - onset_frame + 1;
  Vec activations(len);
  for (int t = 0; t < len; ++t) {
    activations[t] =
        nn::infer(models_->n5, acc.step(onset_frame + t));
  }
  const int idx = decide_offset(activations, models_->offset);
  return onset_frame + std::max(1, idx);
}

void TrackProcessor::run_offsets() {
  log("onsets");
  log("offset_curves");
  notes_.clear();
  // Group onsets per contour, ordered by time.
  std::vector<std::vector<const OnsetEvent*>> per_contour(contours_.size());
  for (const OnsetEvent& ev : onsets_) per_contour[ev.contour_id].push_back(&ev);
  for (auto& events : per_contour) {
    std::sort(events.begin(), events.end(),
              [](const OnsetEvent* a, const OnsetEvent* b) {
                return a->frame < b->frame;
              });
  }
  for (int c = 0; c < static_cast<int>(per_contour.size()); ++c) {
    const Contour& contour = contours_[c];
    const auto& events = per_contour[c];
    for (size_t k = 0; k < events.size(); ++k) {
      TentativeNote note;
      note.contour_id = c;
      note.onset_frame = events[k]->frame;
      note.onset_frame_i = std::max(
          contour.start_frame, static_cast<int>(std::lround(events[k]->frame)));
      note.onset_strength = events[k]->strength;
      const int cap = (k + 1 < events.size())
                          ? std::max(note.onset_frame_i + 1,
                                     static_cast<int>(std::lround(
                                         events[k + 1]->frame)))
                          : contour.end_frame;
      note.offset_frame = decide_note_offset(c, note.onset_frame_i, cap);
      double pitch_acc = 0.0;
      int pitch_n = 0;
      for (int f = note.onset_frame_i; f <= note.offset_frame; ++f) {
        pitch_acc += contour.at(f).pitch_cents;
        ++pitch_n;
      }
      note.pitch_cents = pitch_acc / std::max(1, pitch_n);
      notes_.push_back(note);
    }
  }
  notes_ready_ = true;
}

std::vector<TentativeNote>& TrackProcessor::notes() {
  if (!notes_ready_) throw std::logic_error("notes not built yet");
  log("notes");
  return notes_;
}

NoteContext TrackProcessor::note_context() {
  NoteContext ctx;
  ctx.contours = &contours_;
  ctx.oc = &oc_;
  ctx.ocs = &ocs_;
  ctx.n3_hidden = &n3_hidden_;
  ctx.l4 = &family_.l4;
  ctx.l25_smooth = &l25_smooth();
  ctx.vl = &family_.floor.level;
  ctx.kernel_indices = &models_->kernel.indices;
  ctx.frame_t0s = &frame_t0s_;
  return ctx;
}

double TrackProcessor::score_note(const TentativeNote& note,
                                  const std::vector<TentativeNote>& all) {
  const Vec features = assemble_note_input(note, all, note_context());
  return nn::infer(models_->n6, features);
}

void TrackProcessor::run_note_classification() {
  log("notes");
  for (TentativeNote& note : notes_) {
    note.probability = score_note(note, notes_);
  }
  RemovalHooks hooks;
  hooks.redecide_offset = [this](const TentativeNote& n, int cap) {
    return decide_note_offset(n.contour_id, n.onset_frame_i, cap);
  };
  hooks.score = [this](const TentativeNote& n,
                       const std::vector<TentativeNote>& all) {
    return score_note(n, all);
  };
  notes_ = iterative_removal(std::move(notes_), contours_,
                             models_->removal_stop, hooks);
  removal_done_ = true;
}

Transcription TrackProcessor::transcription() const {
  if (!removal_done_)
    throw std::logic_error("note classification has not run yet");
  Transcription out;
  out.notes = make_final_notes(notes_);
  out.framewise = framewise_from_notes(notes_, contours_);
  return out;
}

Transcription transcribe(const AudioBuffer& audio, const PipelineModels& models,
                         const TranscribeOptions& options) {
  models.validate_for_transcribe();
  TrackProcessor proc(analyze_audio(audio), &models, options.access_log);
  proc.set_stage("transcribe");
  proc.run_tentogram();
  proc.run_classification();
  proc.run_pitchogram();
  proc.run_event_curves(true);
  proc.run_onsets();
  proc.run_offsets();
  proc.run_note_classification();
  if (!options.dump_dir.empty()) dump_intermediates(proc, options.dump_dir);
  return proc.transcription();
}

// --- Training ---------------------------------------------------------------

namespace {

struct ExcerptData {
  std::string id;
  std::string split;
  MagnitudeSpectrogram m;  // cached, EQ applied per stage
  std::vector<NoteAnnotation> annotations;
};

MagnitudeSpectrogram cached_spectrogram(const fs::path& cache_dir,
                                        const std::string& id,
                                        const fs::path& wav_path) {
  const fs::path cache = cache_dir / (id + ".mspec");
  if (fs::exists(cache)) {
    std::ifstream in(cache, std::ios::binary);
    int64_t rows = 0, cols = 0;
    in.read(reinterpret_cast<char*>(&rows), 8);
    in.read(reinterpret_cast<char*>(&cols), 8);
    if (rows == kNumBins && cols > 0) {
      MagnitudeSpectrogram m;
      m.bin_freqs = spectrogram_bin_freqs();
      m.data.resize(rows, cols);
      in.read(reinterpret_cast<char*>(m.data.data()),
              static_cast<std::streamsize>(rows * cols * 8));
      if (in) return m;
    }
  }
  MagnitudeSpectrogram m = compute_spectrogram(read_wav(wav_path.string()));
  fs::create_directories(cache_dir);
  std::ofstream out(cache, std::ios::binary);
  const int64_t rows = m.data.rows(), cols = m.data.cols();
  out.write(reinterpret_cast<const char*>(&rows), 8);
  out.write(reinterpret_cast<const char*>(&cols), 8);
  out.write(reinterpret_cast<const char*>(m.data.data()),
            static_cast<std::streamsize>(rows * cols * 8));
  return m;
}

// Deterministic cap: keep every k-th example when over the limit.
void thin_examples(nn::Matrix& x, nn::Vector& y, int cap) {
  const Eigen::Index n = x.rows();
  if (n <= cap) return;
  const Eigen::Index stride = (n + cap - 1) / cap;
  Eigen::Index kept = 0;
  for (Eigen::Index i = 0; i < n; i += stride) {
    x.row(kept) = x.row(i);
    y[kept] = y[i];
    ++kept;
  }
  x.conservativeResize(kept, Eigen::NoChange);
  y.conservativeResize(kept);
}

struct FeatureSet {
  std::vector<Vec> features;
  std::vector<double> targets;

  void add(const Vec& f, double t) {
    features.push_back(f);
    targets.push_back(t);
  }
  nn::Matrix matrix() const {
    if (features.empty()) return nn::Matrix(0, 0);
    nn::Matrix x(features.size(), features[0].size());
    for (size_t i = 0; i < features.size(); ++i) x.row(i) = features[i].matrix();
    return x;
  }
  nn::Vector labels() const {
    nn::Vector y(targets.size());
    for (size_t i = 0; i < targets.size(); ++i) y[i] = targets[i];
    return y;
  }
};

class TrainLogger {
 public:
  explicit TrainLogger(const std::string& path) {
    if (!path.empty()) out_.open(path);
  }
  void event(const std::string& stage, const json& payload) {
    json j = payload;
    j["stage"] = stage;
    if (out_.is_open()) out_ << j.dump() << "\n" << std::flush;
  }

 private:
  std::ofstream out_;
};

// Train a network on a feature set with min/max normalization, attach the
// normalization and layout tag, and keep the best-validation parameters.
nn::Network train_stage_network(const std::vector<int>& sizes,
                                const FeatureSet& train_set,
                                const FeatureSet& val_set, const char* tag,
                                int epochs, int patience, std::uint64_t seed,
                                TrainLogger& logger, const char* stage) {
  if (train_set.features.empty())
    throw StageError(stage, "no training examples were collected");
  if (val_set.features.empty())
    throw StageError(stage, "no validation examples were collected");
  nn::Matrix x = train_set.matrix();
  nn::Vector y = train_set.labels();
  nn::Matrix vx = val_set.matrix();
  nn::Vector vy = val_set.labels();

  const nn::NormalizationSpec norm = nn::fit_normalization(x);
  x = norm.apply(x);
  vx = norm.apply(vx);

  nn::Network net = nn::make_network(sizes, seed);
  nn::TrainConfig cfg;
  cfg.max_epochs = epochs;
  cfg.patience = patience;
  cfg.seed = seed;
  const nn::TrainLog log = nn::train(net, x, y, vx, vy, cfg);
  net.norm = norm;
  net.layout_tag = tag;
  logger.event(stage, {{"train_examples", x.rows()},
                       {"val_examples", vx.rows()},
                       {"epochs_run", log.train_loss.size()},
                       {"best_epoch", log.best_epoch},
                       {"best_val_loss", log.best_val_loss}});
  return net;
}

std::vector<FinalNote> onsets_as_notes(const std::vector<OnsetEvent>& events) {
  std::vector<FinalNote> out;
  for (const OnsetEvent& ev : events) {
    FinalNote n;
    n.onset_s = frame_to_seconds(ev.frame);
    n.offset_s = n.onset_s;
    n.pitch_midi = cents_to_midi(ev.pitch_cents);
    out.push_back(n);
  }
  return out;
}

}  // namespace

PipelineModels train_all(const CorpusManifest& corpus, const TrainAllConfig& cfg,
                         AccessLog* dag_log) {
  TrainLogger logger(cfg.log_path);
  const fs::path root = corpus.root;
  const fs::path cache_dir =
      cfg.cache_dir.empty() ? root / "cache" : fs::path(cfg.cache_dir);

  // Load the corpus once; M is cached on disk, EQ is applied per stage.
  std::vector<ExcerptData> excerpts;
  for (const CorpusExcerpt& e : corpus.excerpts) {
    ExcerptData data;
    data.id = e.id;
    data.split = e.split;
    data.m = cached_spectrogram(cache_dir, e.id, root / e.wav);
    data.annotations = load_annotations((root / e.annotations).string());
    excerpts.push_back(std::move(data));
  }
  if (excerpts.empty()) throw std::runtime_error("train_all: empty corpus");

  PipelineModels models;
  models.removal_stop = cfg.removal_stop;

  // Stage order is fixed; every stage refilters the spectrograms with fresh
  // EQ when regularization is on.
  auto family_for = [&](const ExcerptData& e, int stage_idx) {
    if (!cfg.regularize) return family_from_magnitude(e.m);
    std::mt19937_64 rng(cfg.seed ^ (0x9e3779b97f4a7c15ULL * (stage_idx + 1)) ^
                        std::hash<std::string>{}(e.id));
    return family_from_magnitude(apply_eq(e.m, random_eq_filter(rng)));
  };

  const MatchSpec match_spec;

  // ---- Stage N_1: kernel weights and Tentogram whitening -------------------
  {
    const int stage_idx = 0;
    std::vector<Mat> l4_planes(excerpts.size());
    std::vector<const Mat*> l4_ptrs(excerpts.size());
    for (size_t i = 0; i < excerpts.size(); ++i) {
      TrackProcessor proc(family_for(excerpts[i], stage_idx), &models, dag_log);
      proc.set_stage("n1");
      l4_planes[i] = proc.family().l4;
      l4_ptrs[i] = &l4_planes[i];
    }

    if (cfg.run_forward_selection) {
      N1Corpus fs_corpus;
      fs_corpus.l4 = l4_ptrs;
      for (size_t i = 0; i < excerpts.size(); ++i) {
        const auto examples = select_n1_examples(
            excerpts[i].annotations, static_cast<int>(l4_planes[i].cols()),
            cfg.n1_frame_stride, nullptr);
        auto& bucket =
            excerpts[i].split == "validation" ? fs_corpus.validation : fs_corpus.train;
        for (const N1Example& ex : examples) {
          bucket.push_back({static_cast<int>(i), ex.frame,
                            dct_index(ex.pitch_midi) - 1, ex.label});
        }
      }
      models.kernel = forward_select_kernel(fs_corpus, cfg.forward_select);
    } else {
      models.kernel = reference_kernel();
    }

    const Mat basis = dct_basis();
    for (int iteration = 1; iteration <= cfg.n1_iterations; ++iteration) {
      // Iteration 2 refines example pitches against the current Tentogram.
      std::vector<std::vector<std::vector<const TentativeF0*>>> detected;
      std::vector<std::vector<TentativeF0>> t0_store;
      if (iteration > 1) {
        detected.resize(excerpts.size());
        t0_store.resize(excerpts.size());
        for (size_t i = 0; i < excerpts.size(); ++i) {
          const Mat tent =
              tentogram_from_l4(l4_planes[i], models.kernel, models.whitening);
          t0_store[i] = pick_tentative_f0s(tent);
          detected[i].assign(static_cast<int>(tent.cols()), {});
          for (const TentativeF0& t0 : t0_store[i])
            detected[i][t0.frame].push_back(&t0);
        }
      }
      N1Corpus n1;
      n1.l4 = l4_ptrs;
      for (size_t i = 0; i < excerpts.size(); ++i) {
        const auto examples = select_n1_examples(
            excerpts[i].annotations, static_cast<int>(l4_planes[i].cols()),
            cfg.n1_frame_stride, iteration > 1 ? &detected[i] : nullptr);
        auto& bucket =
            excerpts[i].split == "validation" ? n1.validation : n1.train;
        for (const N1Example& ex : examples) {
          bucket.push_back({static_cast<int>(i), ex.frame,
                            dct_index(ex.pitch_midi) - 1, ex.label});
        }
      }
      if (n1.train.empty() || n1.validation.empty())
        throw StageError("n1", "empty training or validation example set");

      nn::Matrix x = n1_features(n1.train, n1.l4, models.kernel.indices, basis);
      nn::Matrix vx =
          n1_features(n1.validation, n1.l4, models.kernel.indices, basis);
      nn::Network net =
          nn::make_network({static_cast<int>(x.cols()), 1}, cfg.seed + iteration);
      nn::TrainConfig tc;
      tc.max_epochs = cfg.n1_epochs;
      tc.patience = cfg.early_patience;
      tc.seed = cfg.seed + iteration;
      const nn::TrainLog log =
          nn::train(net, x, n1_labels(n1.train), vx, n1_labels(n1.validation), tc);
      const int k = models.kernel.size();
      for (int j = 0; j < k; ++j) models.kernel.weights[j] = net.weights[0](j, 0);
      models.kernel.w_dct.resize(15);
      for (int c = 0; c < 15; ++c)
        models.kernel.w_dct[c] = net.weights[0](k + c, 0);
      models.kernel.bias = net.biases[0][0];
      Vec w_dct(15);
      for (int c = 0; c < 15; ++c) w_dct[c] = models.kernel.w_dct[c];
      models.whitening = whitening_vector(w_dct, basis);
      logger.event("n1", {{"iteration", iteration},
                          {"train_examples", x.rows()},
                          {"best_val_loss", log.best_val_loss}});
    }
  }

  // ---- Stage N_2: t0 classification ----------------------------------------
  {
    const int stage_idx = 1;
    FeatureSet train_set, val_set;
    for (const ExcerptData& e : excerpts) {
      TrackProcessor proc(family_for(e, stage_idx), &models, dag_log);
      proc.set_stage("n2");
      proc.run_tentogram();
      std::vector<TentativeF0> t0s = pick_tentative_f0s(proc.tentogram());
      std::vector<std::vector<const TentativeF0*>> per_frame(proc.frames());
      for (const TentativeF0& t0 : t0s) per_frame[t0.frame].push_back(&t0);

      // Frame-level truth: one-to-one match against sounding annotations.
      FeatureSet& sink = e.split == "validation" ? val_set : train_set;
      for (int f = 0; f < proc.frames(); ++f) {
        if (per_frame[f].empty()) continue;
        const double t = frame_to_seconds(f);
        std::vector<double> ref;
        for (const NoteAnnotation& a : e.annotations) {
          if (t >= a.onset_s && t <= a.offset_s)
            ref.push_back(midi_to_cents(a.pitch_midi));
        }
        std::vector<FramePitch> est_frames, ref_frames;
        for (size_t k = 0; k < per_frame[f].size(); ++k) {
          est_frames.push_back({0, per_frame[f][k]->pitch_cents, 0.0});
        }
        for (double cents : ref) ref_frames.push_back({0, cents, 1.0});
        // Mark matched estimates via the framewise matcher.
        std::vector<char> matched(per_frame[f].size(), 0);
        {
          std::vector<std::vector<int>> adj(est_frames.size());
          for (size_t i = 0; i < est_frames.size(); ++i) {
            for (size_t j = 0; j < ref_frames.size(); ++j) {
              if (std::abs(est_frames[i].cents - ref_frames[j].cents) <= 50.0)
                adj[i].push_back(static_cast<int>(j));
            }
          }
          // Kuhn matching, small per-frame instances.
          std::vector<int> match_ref(ref_frames.size(), -1);
          std::function<bool(size_t, std::vector<char>&)> try_match =
              [&](size_t u, std::vector<char>& seen) -> bool {
            for (int v : adj[u]) {
              if (seen[v]) continue;
              seen[v] = 1;
              if (match_ref[v] < 0 ||
                  try_match(static_cast<size_t>(match_ref[v]), seen)) {
                match_ref[v] = static_cast<int>(u);
                return true;
              }
            }
            return false;
          };
          for (size_t u = 0; u < est_frames.size(); ++u) {
            std::vector<char> seen(ref_frames.size(), 0);
            try_match(u, seen);
          }
          for (size_t v = 0; v < match_ref.size(); ++v) {
            if (match_ref[v] >= 0) matched[match_ref[v]] = 1;
          }
        }
        for (size_t k = 0; k < per_frame[f].size(); ++k) {
          const TentativeF0* t0 = per_frame[f][k];
          double label;
          if (matched[k]) {
            label = 1.0;
          } else {
            // Unmatched within 50 cents of an annotation: ambiguous, skip.
            double closest = 1e9;
            for (double cents : ref)
              closest = std::min(closest, std::abs(t0->pitch_cents - cents));
            if (closest <= 50.0) continue;
            label = 0.0;
          }
          sink.add(assemble_n2_input(t0->pitch_cents, t0->frame,
                                     proc.family().l4, models.kernel.indices,
                                     per_frame[f]),
                   label);
        }
      }
    }
    nn::Matrix x = train_set.matrix();
    nn::Vector y = train_set.labels();
    thin_examples(x, y, cfg.max_examples);
    FeatureSet thin_train;
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      thin_train.add(x.row(i).transpose().array(), y[i]);
    }
    models.n2 = train_stage_network({kN2InputSize, 100, 14, 1}, thin_train,
                                    val_set, kN2LayoutTag, cfg.n2_epochs,
                                    cfg.early_patience, cfg.seed + 20, logger,
                                    "n2");
  }

  // ---- Stages N_3 / N_4: onset and offset curves ----------------------------
  for (int which = 3; which <= 4; ++which) {
    const int stage_idx = which - 1;
    const char* stage = which == 3 ? "n3" : "n4";
    FeatureSet train_set, val_set;
    std::uint64_t excerpt_counter = 0;
    for (const ExcerptData& e : excerpts) {
      TrackProcessor proc(family_for(e, stage_idx), &models, dag_log);
      proc.set_stage(stage);
      proc.run_tentogram();
      proc.run_classification();
      proc.run_pitchogram();
      FeatureSet& sink = e.split == "validation" ? val_set : train_set;
      const Mat& l15 = proc.l15_smooth();
      const Vec& vl = proc.family().floor.level;
      int contour_id = 0;
      for (const Contour& contour : proc.contours()) {
        FrameTargets targets;
        if (which == 3) {
          targets = annotate_onset_targets(
              contour, e.annotations,
              cfg.seed + 31 * excerpt_counter + contour_id,
              cfg.n3_negative_keep);
        } else {
          targets = annotate_offset_targets(contour, e.annotations);
          // Keep the bump support plus a random slice of the flat frames.
          std::mt19937_64 rng(cfg.seed + 41 * excerpt_counter + contour_id);
          std::uniform_real_distribution<double> unit(0.0, 1.0);
          for (int i = 0; i < contour.length(); ++i) {
            if (targets.target[i] == 0.0 && unit(rng) >= cfg.n4_keep_rate)
              targets.use[i] = 0;
          }
        }
        for (int i = 0; i < contour.length(); ++i) {
          if (!targets.use[i]) continue;
          sink.add(assemble_onset_input(contour, l15, vl,
                                        contour.start_frame + i),
                   targets.target[i]);
        }
        ++contour_id;
      }
      ++excerpt_counter;
    }
    nn::Matrix x = train_set.matrix();
    nn::Vector y = train_set.labels();
    thin_examples(x, y, cfg.max_examples);
    FeatureSet thin_train;
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      thin_train.add(x.row(i).transpose().array(), y[i]);
    }
    nn::Network net = train_stage_network(
        {kOnsetInputSize, 50, 30, 1}, thin_train, val_set, kOnsetLayoutTag,
        which == 3 ? cfg.n3_epochs : cfg.n4_epochs, cfg.late_patience,
        cfg.seed + 10 * which, logger, stage);
    if (which == 3) {
      models.n3 = std::move(net);
    } else {
      models.n4 = std::move(net);
    }
  }

  // ---- Peak-picking grid search ---------------------------------------------
  {
    struct TuningTrack {
      std::vector<Vec> oc;
      std::vector<Contour> contours;
      std::vector<NoteAnnotation> annotations;
    };
    std::vector<TuningTrack> tracks;
    for (const ExcerptData& e : excerpts) {
      TrackProcessor proc(family_for(e, 2), &models, dag_log);
      proc.set_stage("peak");
      proc.run_tentogram();
      proc.run_classification();
      proc.run_pitchogram();
      proc.run_event_curves(false);
      TuningTrack t;
      t.oc = proc.onset_curves();
      t.contours = proc.contours();
      t.annotations = e.annotations;
      tracks.push_back(std::move(t));
    }
    if (cfg.tune_peak) {
      double best_score = -1e18;
      PeakPickParams best = models.peak;
      for (double z : {-5.8, -4.8, -3.8}) {
        for (double sigma : {2.0, 2.8, 3.6}) {
          for (double threshold : {0.8, 1.2, 1.6, 2.0}) {
            for (double r : {0.5, 1.0, 2.0}) {
              PeakPickParams params{z, sigma, threshold, r};
              int matched = 0, est = 0, ref = 0;
              for (const TuningTrack& t : tracks) {
                std::vector<OnsetEvent> events;
                for (size_t c = 0; c < t.contours.size(); ++c) {
                  const auto ev = pick_onsets(t.oc[c], t.contours[c],
                                              static_cast<int>(c), params);
                  events.insert(events.end(), ev.begin(), ev.end());
                }
                const auto pairs = match_notes_greedy(
                    onsets_as_notes(events), t.annotations, NoteTask::kOnset,
                    match_spec);
                matched += static_cast<int>(pairs.size());
                est += static_cast<int>(events.size());
                ref += static_cast<int>(t.annotations.size());
              }
              const double recall = ref > 0 ? double(matched) / ref : 0.0;
              const double precision = est > 0 ? double(matched) / est : 0.0;
              const double s = onset_param_score(recall, precision);
              if (s > best_score) {
                best_score = s;
                best = params;
              }
            }
          }
        }
      }
      models.peak = best;
      logger.event("peak", {{"z", best.z},
                            {"sigma", best.sigma},
                            {"threshold", best.threshold},
                            {"r", best.r},
                            {"score", best_score}});
    }
  }

  // ---- Stage N_5: offset position -------------------------------------------
  {
    const int stage_idx = 4;
    FeatureSet train_set, val_set;
    for (const ExcerptData& e : excerpts) {
      TrackProcessor proc(family_for(e, stage_idx), &models, dag_log);
      proc.set_stage("n5");
      proc.run_tentogram();
      proc.run_classification();
      proc.run_pitchogram();
      proc.run_event_curves(true);
      proc.run_onsets();
      FeatureSet& sink = e.split == "validation" ? val_set : train_set;

      // Correctly detected onsets define the training notes.
      const auto& events = proc.onsets();
      const auto pairs =
          match_notes_greedy(onsets_as_notes(events), e.annotations,
                             NoteTask::kOnset, match_spec);
      std::vector<std::vector<const OnsetEvent*>> per_contour(
          proc.contours().size());
      for (const OnsetEvent& ev : events)
        per_contour[ev.contour_id].push_back(&ev);
      for (auto& list : per_contour) {
        std::sort(list.begin(), list.end(),
                  [](const OnsetEvent* a, const OnsetEvent* b) {
                    return a->frame < b->frame;
                  });
      }
      for (const auto& [ei, ri] : pairs) {
        const OnsetEvent& ev = events[ei];
        const Contour& contour = proc.contours()[ev.contour_id];
        const int onset =
            std::max(contour.start_frame, static_cast<int>(std::lround(ev.frame)));
        int end = contour.end_frame;
        for (const OnsetEvent* other : per_contour[ev.contour_id]) {
          const int of = static_cast<int>(std::lround(other->frame));
          if (of > onset) {
            end = std::min(end, of - 1);
            break;
          }
        }
        if (end <= onset) continue;
        const auto targets = annotate_offset_stage2_targets(
            contour, onset, end, e.annotations[ri], e.annotations);
        if (!targets) continue;
        OffsetFeatureAccumulator acc(contour, proc.offset_curves()[ev.contour_id],
                                     proc.family().l4, models.kernel.indices,
                                     onset);
        for (int i = 0; i < static_cast<int>(targets->target.size()); ++i) {
          const Vec f = acc.step(onset + i);
          if (targets->use[i]) sink.add(f, targets->target[i]);
        }
      }
    }
    nn::Matrix x = train_set.matrix();
    nn::Vector y = train_set.labels();
    thin_examples(x, y, cfg.max_examples);
    FeatureSet thin_train;
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      thin_train.add(x.row(i).transpose().array(), y[i]);
    }
    models.n5 = train_stage_network({kOffsetInputSize, 100, 1}, thin_train,
                                    val_set, kOffsetLayoutTag, cfg.n5_epochs,
                                    cfg.late_patience, cfg.seed + 50, logger,
                                    "n5");
  }

  // ---- Offset decision grid search ------------------------------------------
  if (cfg.tune_offset) {
    struct NoteCase {
      Vec activations;
      int onset;
      int ann_offset;
    };
    std::vector<NoteCase> cases;
    for (const ExcerptData& e : excerpts) {
      TrackProcessor proc(family_for(e, 4), &models, dag_log);
      proc.set_stage("offset");
      proc.run_tentogram();
      proc.run_classification();
      proc.run_pitchogram();
      proc.run_event_curves(true);
      proc.run_onsets();
      const auto& events = proc.onsets();
      const auto pairs = match_notes_greedy(onsets_as_notes(events),
                                            e.annotations, NoteTask::kOnset,
                                            match_spec);
      for (const auto& [ei, ri] : pairs) {
        const OnsetEvent& ev = events[ei];
        const Contour& contour = proc.contours()[ev.contour_id];
        const int onset =
            std::max(contour.start_frame, static_cast<int>(std::lround(ev.frame)));
        const int end = contour.end_frame;
        if (end <= onset) continue;
        OffsetFeatureAccumulator acc(contour, proc.offset_curves()[ev.contour_id],
                                     proc.family().l4, models.kernel.indices,
                                     onset);
        NoteCase nc;
        nc.onset = onset;
        nc.ann_offset = seconds_to_frame(e.annotations[ri].offset_s);
        nc.activations.resize(end - onset + 1);
        for (int t = onset; t <= end; ++t) {
          nc.activations[t - onset] = nn::infer(models.n5, acc.step(t));
        }
        cases.push_back(std::move(nc));
      }
    }
    double best_err = 1e18;
    OffsetDecisionParams best = models.offset;
    for (double sigma : {3.0, 4.3, 5.6}) {
      for (double threshold : {0.35, 0.41, 0.47, 0.53, 0.6}) {
        OffsetDecisionParams params{sigma, threshold};
        double err = 0.0;
        for (const NoteCase& nc : cases) {
          const int idx = decide_offset(nc.activations, params);
          err += std::abs(frame_to_seconds(nc.onset + idx) -
                          frame_to_seconds(nc.ann_offset));
        }
        if (!cases.empty()) err /= cases.size();
        if (err < best_err) {
          best_err = err;
          best = params;
        }
      }
    }
    models.offset = best;
    logger.event("offset", {{"sigma", best.sigma},
                            {"threshold", best.threshold},
                            {"mean_abs_error_s", best_err}});
  }

  // ---- Stage N_6: note classification (two training steps) ------------------
  {
    const int stage_idx = 5;
    auto label_notes = [&](const std::vector<TentativeNote>& notes,
                           const std::vector<NoteAnnotation>& annotations,
                           const std::vector<char>& alive) {
      std::vector<FinalNote> est;
      std::vector<int> est_idx;
      for (size_t i = 0; i < notes.size(); ++i) {
        if (!alive[i]) continue;
        FinalNote fn;
        fn.onset_s = frame_to_seconds(notes[i].onset_frame);
        fn.offset_s = frame_to_seconds(notes[i].offset_frame);
        fn.pitch_midi = cents_to_midi(notes[i].pitch_cents);
        est.push_back(fn);
        est_idx.push_back(static_cast<int>(i));
      }
      const auto pairs = match_notes_greedy(est, annotations, NoteTask::kOnset,
                                            match_spec);
      std::vector<char> labels(notes.size(), 0);
      for (const auto& [ei, ri] : pairs) labels[est_idx[ei]] = 1;
      return labels;
    };

    // Step 1: label the pre-removal tentative notes.
    FeatureSet train_set, val_set;
    for (const ExcerptData& e : excerpts) {
      TrackProcessor proc(family_for(e, stage_idx), &models, dag_log);
      proc.set_stage("n6");
      proc.run_tentogram();
      proc.run_classification();
      proc.run_pitchogram();
      proc.run_event_curves(true);
      proc.run_onsets();
      proc.run_offsets();
      FeatureSet& sink = e.split == "validation" ? val_set : train_set;
      auto& notes = proc.notes();
      const std::vector<char> alive(notes.size(), 1);
      const std::vector<char> labels = label_notes(notes, e.annotations, alive);
      for (size_t i = 0; i < notes.size(); ++i) {
        sink.add(assemble_note_input(notes[i], notes, proc.note_context()),
                 labels[i]);
      }
    }
    models.n6 = train_stage_network({kNoteInputSize, 150, 1}, train_set, val_set,
                                    kNoteLayoutTag, cfg.n6_epochs,
                                    cfg.late_patience, cfg.seed + 60, logger,
                                    "n6-step1");

    // Step 2: replay the removal with the step-1 network, gathering removed
    // notes with the features they had at removal time.
    FeatureSet train2, val2;
    for (const ExcerptData& e : excerpts) {
      TrackProcessor proc(family_for(e, stage_idx), &models, dag_log);
      proc.set_stage("n6");
      proc.run_tentogram();
      proc.run_classification();
      proc.run_pitchogram();
      proc.run_event_curves(true);
      proc.run_onsets();
      proc.run_offsets();
      FeatureSet& sink = e.split == "validation" ? val2 : train2;

      auto& notes = proc.notes();
      for (TentativeNote& n : notes) n.probability = proc.score_note(n, notes);

      // Manual removal loop capturing features at removal time, in order.
      struct Removed {
        Vec features;
        int index;
      };
      std::vector<Removed> removed_in_order;
      while (true) {
        int worst = -1;
        for (size_t i = 0; i < notes.size(); ++i) {
          if (notes[i].removed) continue;
          if (worst < 0 || notes[i].probability < notes[worst].probability ||
              (notes[i].probability == notes[worst].probability &&
               notes[i].onset_frame < notes[worst].onset_frame)) {
            worst = static_cast<int>(i);
          }
        }
        if (worst < 0 || notes[worst].probability >= models.removal_stop) break;
        removed_in_order.push_back(
            {assemble_note_input(notes[worst], notes, proc.note_context()),
             worst});
        notes[worst].removed = true;
        // Update the predecessor's offset and affected probabilities the
        // same way the run-time loop does.
        const TentativeNote removed = notes[worst];
        int pred = -1;
        for (size_t i = 0; i < notes.size(); ++i) {
          if (notes[i].removed || notes[i].contour_id != removed.contour_id)
            continue;
          if (notes[i].onset_frame_i <= removed.onset_frame_i &&
              (pred < 0 || notes[i].onset_frame_i > notes[pred].onset_frame_i)) {
            pred = static_cast<int>(i);
          }
        }
        if (pred >= 0) {
          int cap = proc.contours()[removed.contour_id].end_frame;
          for (const TentativeNote& other : notes) {
            if (other.removed || other.contour_id != removed.contour_id) continue;
            if (other.onset_frame_i > notes[pred].onset_frame_i)
              cap = std::min(cap, other.onset_frame_i);
          }
          notes[pred].offset_frame = proc.decide_note_offset(
              removed.contour_id, notes[pred].onset_frame_i, cap);
        }
        for (auto& n : notes) {
          if (n.removed) continue;
          if (n.contour_id == removed.contour_id ||
              (std::abs(n.pitch_cents - removed.pitch_cents) <= 2550.0 &&
               std::abs(n.onset_frame - removed.onset_frame) <= 18.5)) {
            n.probability = proc.score_note(n, notes);
          }
        }
      }

      // Evaluate the final state, then replay removals: each removed note is
      // labeled by the evaluation at the time it enters Tr; a removed note
      // that evaluates true re-triggers evaluation of its neighborhood.
      std::vector<char> alive(notes.size(), 1);
      for (size_t i = 0; i < notes.size(); ++i) alive[i] = !notes[i].removed;
      // Start from the full tentative set (Tr_T).
      std::vector<char> present(notes.size(), 1);
      std::vector<char> labels = label_notes(notes, e.annotations, present);
      for (const Removed& rem : removed_in_order) {
        sink.add(rem.features, labels[rem.index]);
        present[rem.index] = 0;
        if (labels[rem.index]) {
          // Removing a true note can free its annotation for a neighbor.
          labels = label_notes(notes, e.annotations, present);
        }
      }
      const std::vector<char> final_labels =
          label_notes(notes, e.annotations, alive);
      for (size_t i = 0; i < notes.size(); ++i) {
        if (!notes[i].removed) {
          sink.add(assemble_note_input(notes[i], notes, proc.note_context()),
                   final_labels[i]);
        }
      }
    }
    models.n6 = train_stage_network({kNoteInputSize, 150, 1}, train2, val2,
                                    kNoteLayoutTag, cfg.n6_epochs,
                                    cfg.late_patience, cfg.seed + 61, logger,
                                    "n6");
  }

  return models;
}

// --- Output files -----------------------------------------------------------

void write_notes_json(const std::string& path,
                      const std::vector<FinalNote>& notes) {
  json j = json::array();
  for (const FinalNote& n : notes) {
    j.push_back({{"onset_s", n.onset_s},
                 {"offset_s", n.offset_s},
                 {"pitch_midi", n.pitch_midi},
                 {"probability", n.probability}});
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write notes file: " + path);
  out << j.dump(2) << "\n";
}

std::vector<FinalNote> read_notes_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open notes file: " + path);
  json j = json::parse(in);
  std::vector<FinalNote> out;
  for (const json& n : j) {
    out.push_back({n.at("onset_s"), n.at("offset_s"), n.at("pitch_midi"),
                   n.value("probability", 1.0)});
  }
  return out;
}

void write_framewise_csv(const std::string& path,
                         const std::vector<FramePitch>& frames) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write framewise file: " + path);
  out << "time_s,pitch_cents,activation\n";
  char line[128];
  for (const FramePitch& f : frames) {
    std::snprintf(line, sizeof(line), "%.6f,%.1f,%.6f\n",
                  frame_to_seconds(f.frame), f.cents, f.activation);
    out << line;
  }
}

std::vector<FramePitch> read_framewise_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open framewise file: " + path);
  std::vector<FramePitch> out;
  std::string line;
  std::getline(in, line);  // header
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    FramePitch f;
    double t = 0;
    if (std::sscanf(line.c_str(), "%lf,%lf,%lf", &t, &f.cents, &f.activation) != 3)
      throw std::runtime_error("malformed framewise row: " + line);
    f.frame = seconds_to_frame(t);
    out.push_back(f);
  }
  return out;
}

void write_notes_midi(const std::string& path,
                      const std::vector<FinalNote>& notes) {
  MidiScore score;
  for (const FinalNote& n : notes) {
    MidiNote m;
    m.onset_s = n.onset_s;
    m.offset_s = n.offset_s;
    m.pitch = static_cast<int>(std::lround(n.pitch_midi));
    m.channel = 0;
    m.instrument = 0;
    m.velocity = 80;
    score.notes.push_back(m);
  }
  write_midi(path, score);
}

}  // namespace pitchtrack
