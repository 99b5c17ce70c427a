#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "pitchtrack/audio.hpp"
#include "pitchtrack/config.hpp"
#include "pitchtrack/dataset.hpp"
#include "pitchtrack/dsp.hpp"
#include "pitchtrack/events.hpp"
#include "pitchtrack/kernel.hpp"
#include "pitchtrack/metrics.hpp"
#include "pitchtrack/pipeline.hpp"
#include "pitchtrack/spectral.hpp"
#include "pitchtrack/synth.hpp"

namespace py = pybind11;
using namespace pitchtrack;

namespace {

py::array_t<double> mat_to_numpy(const Mat& m) {
  py::array_t<double> out({static_cast<py::ssize_t>(m.rows()),
                           static_cast<py::ssize_t>(m.cols())});
  auto buf = out.mutable_unchecked<2>();
  for (py::ssize_t r = 0; r < buf.shape(0); ++r) {
    for (py::ssize_t c = 0; c < buf.shape(1); ++c) {
      buf(r, c) = m(r, c);
    }
  }
  return out;
}

py::array_t<double> vec_to_numpy(const Vec& v) {
  py::array_t<double> out(static_cast<py::ssize_t>(v.size()));
  auto buf = out.mutable_unchecked<1>();
  for (py::ssize_t i = 0; i < buf.shape(0); ++i) buf(i) = v[i];
  return out;
}

AudioBuffer buffer_from_numpy(py::array_t<double, py::array::c_style> samples,
                              double sample_rate) {
  AudioBuffer audio;
  audio.sample_rate = sample_rate;
  auto buf = samples.unchecked<1>();
  audio.samples.resize(buf.shape(0));
  for (py::ssize_t i = 0; i < buf.shape(0); ++i) audio.samples[i] = buf(i);
  return audio;
}

Mat mat_from_numpy(py::array_t<double, py::array::c_style> a) {
  auto buf = a.unchecked<2>();
  Mat m(buf.shape(0), buf.shape(1));
  for (py::ssize_t r = 0; r < buf.shape(0); ++r) {
    for (py::ssize_t c = 0; c < buf.shape(1); ++c) m(r, c) = buf(r, c);
  }
  return m;
}

py::dict transcription_to_dict(const Transcription& t) {
  py::list notes;
  for (const FinalNote& n : t.notes) {
    py::dict d;
    d["onset_s"] = n.onset_s;
    d["offset_s"] = n.offset_s;
    d["pitch_midi"] = n.pitch_midi;
    d["probability"] = n.probability;
    notes.append(d);
  }
  py::array_t<double> frames({static_cast<py::ssize_t>(t.framewise.size()),
                              static_cast<py::ssize_t>(3)});
  auto buf = frames.mutable_unchecked<2>();
  for (py::ssize_t i = 0; i < buf.shape(0); ++i) {
    buf(i, 0) = frame_to_seconds(t.framewise[i].frame);
    buf(i, 1) = t.framewise[i].cents;
    buf(i, 2) = t.framewise[i].activation;
  }
  py::dict out;
  out["notes"] = notes;
  out["framewise"] = frames;
  return out;
}

std::vector<NoteAnnotation> notes_from_list(const py::object& seq) {
  std::vector<NoteAnnotation> out;
  for (const auto& item : seq) {
    py::dict d = py::cast<py::dict>(item);
    NoteAnnotation n;
    n.onset_s = py::cast<double>(d["onset_s"]);
    n.offset_s = py::cast<double>(d["offset_s"]);
    n.pitch_midi = py::cast<double>(d["pitch_midi"]);
    out.push_back(n);
  }
  return out;
}

py::dict report_to_dict(const MetricReport& r) {
  py::dict d;
  d["matched"] = r.matched;
  d["estimates"] = r.est_count;
  d["references"] = r.ref_count;
  d["precision"] = 100.0 * r.precision;
  d["recall"] = 100.0 * r.recall;
  d["f_measure"] = 100.0 * r.f_measure;
  d["accuracy"] = 100.0 * r.accuracy;
  return d;
}

}  // namespace

PYBIND11_MODULE(_pitchtrack, m) {
  m.doc() = "polyphonic pitch tracking: spectrogram, tentogram, pitchogram, "
            "notes, and evaluation";

  m.def("analyze",
        [](py::array_t<double, py::array::c_style> samples, double sample_rate) {
          const SpectrogramFamily fam =
              analyze_audio(buffer_from_numpy(samples, sample_rate));
          py::dict out;
          out["m"] = mat_to_numpy(fam.m.data);
          out["l"] = mat_to_numpy(fam.white.l);
          out["l15"] = mat_to_numpy(fam.white.l15);
          out["l25"] = mat_to_numpy(fam.white.l25);
          out["l4"] = mat_to_numpy(fam.l4);
          out["vl"] = vec_to_numpy(fam.floor.level);
          out["bin_freqs"] = vec_to_numpy(fam.m.bin_freqs);
          return out;
        },
        py::arg("samples"), py::arg("sample_rate") = kSampleRate,
        "Whitened log-frequency spectrogram family of a mono signal.");

  m.def("reference_kernel", []() {
    const PitchKernel k = reference_kernel();
    py::dict out;
    out["indices"] = k.indices;
    out["weights"] = k.weights;
    out["bias"] = k.bias;
    return out;
  });

  m.def("partial_bin_index", &partial_bin_index, py::arg("n"),
        py::arg("bins_per_octave") = kBinsPerOctave,
        py::arg("upsample_factor") = kUpsampleFactor);
  m.def("dct_index", &dct_index, py::arg("midi_pitch"));
  m.def("smooth_threshold", &smooth_threshold, py::arg("x"),
        py::arg("z") = -4.8, py::arg("r") = 1.0);

  m.def("tentogram",
        [](py::array_t<double, py::array::c_style> l4, const std::string& kernel_path,
           py::object whitening) {
          const PitchKernel k =
              kernel_path.empty() ? reference_kernel() : load_kernel(kernel_path);
          Vec w = Vec::Zero(kNumPitchBins);
          if (!whitening.is_none()) {
            auto buf =
                py::cast<py::array_t<double, py::array::c_style>>(whitening)
                    .unchecked<1>();
            for (py::ssize_t i = 0;
                 i < std::min<py::ssize_t>(buf.shape(0), kNumPitchBins); ++i) {
              w[i] = buf(i);
            }
          }
          return mat_to_numpy(tentogram_from_l4(mat_from_numpy(l4), k, w));
        },
        py::arg("l4"), py::arg("kernel_path") = std::string(),
        py::arg("whitening") = py::none(),
        "Sparse-kernel spectral summation over an L4 plane.");

  m.def("transcribe_file",
        [](const std::string& wav_path, const std::string& model_dir) {
          return transcription_to_dict(
              transcribe(read_wav(wav_path), PipelineModels::load(model_dir)));
        },
        py::arg("wav_path"), py::arg("model_dir"));

  m.def("transcribe_samples",
        [](py::array_t<double, py::array::c_style> samples, double sample_rate,
           const std::string& model_dir) {
          return transcription_to_dict(
              transcribe(buffer_from_numpy(samples, sample_rate),
                         PipelineModels::load(model_dir)));
        },
        py::arg("samples"), py::arg("sample_rate"), py::arg("model_dir"));

  m.def("evaluate_notes",
        [](const py::object& est, const py::object& ref, const std::string& task) {
          std::vector<FinalNote> est_notes;
          for (const auto& item : est) {
            py::dict d = py::cast<py::dict>(item);
            est_notes.push_back({py::cast<double>(d["onset_s"]),
                                 py::cast<double>(d["offset_s"]),
                                 py::cast<double>(d["pitch_midi"]), 1.0});
          }
          const std::vector<NoteAnnotation> ref_notes = notes_from_list(ref);
          NoteTask t = NoteTask::kOnset;
          if (task == "offset") t = NoteTask::kOffset;
          if (task == "onset-offset") t = NoteTask::kOnsetOffset;
          return report_to_dict(note_metrics(est_notes, ref_notes, t, MatchSpec{}));
        },
        py::arg("estimates"), py::arg("references"), py::arg("task") = "onset");

  m.def("f_measure", &f_measure, py::arg("precision"), py::arg("recall"));
  m.def("combined_metric", &combined_metric, py::arg("f1"), py::arg("f2"),
        py::arg("f3"), py::arg("f4"));

  m.def("build_corpus",
        [](const std::string& dir, int num_excerpts, std::uint64_t seed,
           double length_s) {
          DatasetConfig cfg;
          cfg.num_excerpts = num_excerpts;
          cfg.seed = seed;
          cfg.score.length_s = length_s;
          const CorpusManifest manifest = build_corpus(dir, cfg);
          py::list ids;
          for (const CorpusExcerpt& e : manifest.excerpts) ids.append(e.id);
          return ids;
        },
        py::arg("dir"), py::arg("num_excerpts") = 8, py::arg("seed") = 1,
        py::arg("length_s") = 4.0,
        "Render a synthetic training corpus with the built-in synthesizer.");

  m.def("train_models",
        [](const std::string& manifest_path, const std::string& out_dir,
           std::uint64_t seed, const std::map<std::string, std::string>& overrides) {
          RunConfig cfg;
          for (const auto& [k, v] : overrides) cfg.set(k, v);
          cfg.train.seed = seed;
          const PipelineModels models =
              train_all(load_manifest(manifest_path), cfg.train);
          models.save(out_dir);
        },
        py::arg("manifest_path"), py::arg("out_dir"), py::arg("seed"),
        py::arg("overrides") = std::map<std::string, std::string>{},
        "Run the full training chain on a corpus and save the bundle.");

  m.attr("NUM_BINS") = kNumBins;
  m.attr("NUM_PITCH_BINS") = kNumPitchBins;
  m.attr("NUM_CENT_BINS") = kNumCentBins;
  m.attr("HOP_SAMPLES") = kHopSamples;
  m.attr("SAMPLE_RATE") = kSampleRate;
}
