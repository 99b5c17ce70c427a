#include "doctest.h"
#include "pitchtrack/forward_select.hpp"

#include <random>

using namespace pitchtrack;

namespace {

// Planted corpus: every candidate bin carries class-independent noise
// except one inter-partial offset, which separates the classes cleanly.
struct Planted {
  Mat l4;
  N1Corpus corpus;
  int pitch_bin = 700;
  int planted_offset = 103;  // not a partial, not adjacent to one
};

Planted build_planted(int n_train, int n_val, std::uint64_t seed) {
  Planted p;
  const int frames = n_train + n_val;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> noise(0.0, 1.0);
  p.l4 = Mat(kNumL4Bins, frames);
  for (int b = 0; b < kNumL4Bins; ++b) {
    for (int f = 0; f < frames; ++f) p.l4(b, f) = noise(rng);
  }
  for (int f = 0; f < frames; ++f) {
    const double label = (f % 2 == 0) ? 1.0 : 0.0;
    // Partials hold the same level for both classes.
    for (int offset : partial_offsets()) {
      p.l4(p.pitch_bin + kPitchToL4Offset + offset, f) = 1.0;
    }
    // The planted inter-partial is pure negative evidence.
    p.l4(p.pitch_bin + kPitchToL4Offset + p.planted_offset, f) =
        label > 0.5 ? 0.0 : 2.0;
    N1Example2 e{0, f, p.pitch_bin, label};
    if (f < n_train) {
      p.corpus.train.push_back(e);
    } else {
      p.corpus.validation.push_back(e);
    }
  }
  return p;
}

}  // namespace

TEST_CASE("planted discriminative inter-partial is selected first") {
  Planted p = build_planted(140, 60, 5);
  p.corpus.l4 = {&p.l4};

  ForwardSelectConfig cfg;
  cfg.target_size = 12;  // a single selection iteration
  cfg.screen_train_stride = 1;
  cfg.screen_val_stride = 1;
  cfg.refine_stride = 1;
  cfg.final_stride = 1;
  cfg.train.max_epochs = 40;
  cfg.train.patience = 8;
  cfg.train.seed = 3;

  ForwardSelectDiagnostics diag;
  const PitchKernel kernel = forward_select_kernel(p.corpus, cfg, &diag);

  REQUIRE(diag.selected.size() == 1);
  CHECK(diag.selected[0] == p.planted_offset);
  CHECK(kernel.size() == 12);
  CHECK(std::binary_search(kernel.indices.begin(), kernel.indices.end(),
                           p.planted_offset));
  CHECK(kernel.w_dct.size() == 15);

  // Oracle: the planted offset has the (by far) largest class separation of
  // all candidates, so it must be the argmin of the screening scores.
  const Vec& scores = diag.scores[0];
  double best_sep = -1.0;
  int best_offset = 0;
  for (int c = 0; c < static_cast<int>(scores.size()); ++c) {
    const int offset = cfg.candidate_lo + c;
    if (std::binary_search(partial_offsets().begin(), partial_offsets().end(),
                           offset))
      continue;
    double pos = 0.0, neg = 0.0;
    int npos = 0, nneg = 0;
    for (const N1Example2& e : p.corpus.train) {
      const double v = p.l4(p.pitch_bin + kPitchToL4Offset + offset, e.frame);
      if (e.label > 0.5) {
        pos += v;
        ++npos;
      } else {
        neg += v;
        ++nneg;
      }
    }
    const double sep = std::abs(pos / npos - neg / nneg);
    if (sep > best_sep) {
      best_sep = sep;
      best_offset = offset;
    }
  }
  CHECK(best_offset == p.planted_offset);

  // The learned weight at the planted offset is negative evidence.
  for (int i = 0; i < kernel.size(); ++i) {
    if (kernel.indices[i] == p.planted_offset) CHECK(kernel.weights[i] < 0.0);
  }
}

TEST_CASE("candidate entries already in the kernel are interpolated") {
  Planted p = build_planted(60, 30, 7);
  p.corpus.l4 = {&p.l4};
  ForwardSelectConfig cfg;
  cfg.target_size = 12;
  cfg.screen_train_stride = 1;
  cfg.screen_val_stride = 1;
  cfg.refine_stride = 1;
  cfg.final_stride = 1;
  cfg.train.max_epochs = 15;
  cfg.train.patience = 5;
  ForwardSelectDiagnostics diag;
  forward_select_kernel(p.corpus, cfg, &diag);
  const Vec& scores = diag.scores[0];
  // Offset 0 is a partial: its score must be the interpolation of its
  // evaluated neighbors at -1 and +1.
  const int c0 = -cfg.candidate_lo;
  CHECK(scores[c0] ==
        doctest::Approx(0.5 * (scores[c0 - 1] + scores[c0 + 1])).epsilon(1e-12));
}

TEST_CASE("a full kernel is returned unchanged") {
  Planted p = build_planted(40, 20, 9);
  p.corpus.l4 = {&p.l4};
  ForwardSelectConfig cfg;
  const PitchKernel full = reference_kernel();
  const PitchKernel out = forward_select_kernel(p.corpus, cfg, nullptr, &full);
  CHECK(out.indices == full.indices);
  CHECK(out.weights == full.weights);
  CHECK(out.bias == full.bias);
}

TEST_CASE("undersized corpora are rejected with the required minimum") {
  Planted p = build_planted(40, 20, 11);
  p.corpus.l4 = {&p.l4};
  ForwardSelectConfig cfg;  // paper-scale strides on a toy corpus
  CHECK_THROWS_WITH_AS(forward_select_kernel(p.corpus, cfg),
                       doctest::Contains("need at least"), std::runtime_error);
}
