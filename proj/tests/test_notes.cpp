#include "doctest.h"
#include "pitchtrack/notes.hpp"

#include <random>

using namespace pitchtrack;

namespace {

Contour flat_contour(int start, int length, double pitch_cents) {
  Contour c;
  c.start_frame = start;
  c.region_start = start;
  c.end_frame = start + length - 1;
  c.mean_pitch_cents = pitch_cents;
  for (int i = 0; i < length; ++i) {
    ContourFrame f;
    f.frame = start + i;
    f.pitch_cents = pitch_cents;
    f.bin = pitch_cents - kMinCent;
    f.activation = 1.0;
    f.n2_output = 0.8;
    f.n2_hidden = Vec::Zero(14);
    c.frames.push_back(f);
  }
  return c;
}

TentativeNote make_note(int contour, double onset, int offset, double cents,
                        double prob) {
  TentativeNote n;
  n.contour_id = contour;
  n.onset_frame = onset;
  n.onset_frame_i = static_cast<int>(std::lround(onset));
  n.offset_frame = offset;
  n.pitch_cents = cents;
  n.onset_strength = 2.0;
  n.probability = prob;
  return n;
}

}  // namespace

TEST_CASE("percentile is the linear-interpolation order statistic") {
  CHECK(percentile({1, 2, 3, 4, 5}, 50) == doctest::Approx(3.0));
  CHECK(percentile({1, 2, 3, 4}, 25) == doctest::Approx(1.75));
  CHECK(percentile({5, 1, 3}, 0) == doctest::Approx(1.0));
  CHECK(percentile({5, 1, 3}, 100) == doctest::Approx(5.0));
}

TEST_CASE("removal keeps everything when all probabilities clear the stop") {
  std::vector<Contour> contours = {flat_contour(0, 100, 6000.0)};
  std::vector<TentativeNote> notes = {make_note(0, 10, 30, 6000, 0.9),
                                      make_note(0, 40, 70, 6000, 0.6)};
  RemovalHooks hooks;  // no re-scoring needed
  const auto out = iterative_removal(notes, contours, 0.55, hooks);
  CHECK(!out[0].removed);
  CHECK(!out[1].removed);
}

TEST_CASE("single low-probability note is removed; predecessor re-extends") {
  std::vector<Contour> contours = {flat_contour(0, 100, 6000.0)};
  std::vector<TentativeNote> notes = {make_note(0, 10, 39, 6000, 0.9),
                                      make_note(0, 40, 70, 6000, 0.1),
                                      make_note(0, 75, 99, 6000, 0.8)};
  RemovalHooks hooks;
  int redecide_calls = 0;
  hooks.redecide_offset = [&](const TentativeNote& n, int cap) {
    ++redecide_calls;
    CHECK(n.onset_frame_i == 10);
    CHECK(cap == 75);  // next surviving onset on the contour
    return cap - 1;
  };
  hooks.score = [](const TentativeNote& n,
                   const std::vector<TentativeNote>&) { return n.probability; };
  const auto out = iterative_removal(notes, contours, 0.55, hooks);
  CHECK(redecide_calls == 1);
  CHECK(!out[0].removed);
  CHECK(out[1].removed);
  CHECK(!out[2].removed);
  CHECK(out[0].offset_frame == 74);
}

TEST_CASE("removal loop equals a step-by-step simulation on a 4-note toy") {
  // Scores depend on how many notes survive: each removal changes the
  // remaining probabilities, exercising the update semantics.
  std::vector<Contour> contours = {flat_contour(0, 200, 6000.0)};
  std::vector<TentativeNote> notes = {
      make_note(0, 10, 28, 6000, 0.0), make_note(0, 30, 48, 6000, 0.0),
      make_note(0, 50, 68, 6000, 0.0), make_note(0, 70, 90, 6000, 0.0)};
  // prob(note k) = base[k] + 0.12 * removed_count
  const double base[4] = {0.30, 0.45, 0.50, 0.70};
  auto score_fn = [&](const TentativeNote& n,
                      const std::vector<TentativeNote>& all) {
    int removed = 0;
    for (const auto& other : all) removed += other.removed ? 1 : 0;
    int idx = 0;
    for (size_t i = 0; i < all.size(); ++i) {
      if (all[i].onset_frame == n.onset_frame) idx = static_cast<int>(i);
    }
    return base[idx] + 0.12 * removed;
  };
  for (size_t i = 0; i < notes.size(); ++i) {
    notes[i].probability = base[i];
  }
  RemovalHooks hooks;
  hooks.score = score_fn;

  // Oracle: explicit simulation.
  // Start: probs {.30 .45 .50 .70} -> remove note0.
  // After: probs {.57 .62 .82} -> all above 0.55 -> stop.
  const auto out = iterative_removal(notes, contours, 0.55, hooks);
  CHECK(out[0].removed);
  CHECK(!out[1].removed);
  CHECK(!out[2].removed);
  CHECK(!out[3].removed);
  CHECK(out[1].probability == doctest::Approx(0.57));
}

TEST_CASE("framewise output dedupes within 60 cents by activation") {
  std::vector<Contour> contours = {flat_contour(0, 50, 6000.0),
                                   flat_contour(0, 50, 6000.0),
                                   flat_contour(0, 50, 6100.0),
                                   flat_contour(0, 50, 6050.0)};
  contours[0].frames[10].activation = 2.0;
  for (auto& f : contours[1].frames) f.activation = 0.5;
  for (auto& f : contours[2].frames) f.activation = 1.5;
  for (auto& f : contours[3].frames) f.activation = 0.7;

  SUBCASE("unison keeps only the stronger prediction") {
    std::vector<TentativeNote> notes = {make_note(0, 5, 20, 6000, 0.9),
                                        make_note(1, 5, 20, 6000, 0.9)};
    const auto frames = framewise_from_notes(notes, contours);
    for (const FramePitch& f : frames) {
      CHECK(f.cents == doctest::Approx(6000.0));
    }
    int count_frame10 = 0;
    for (const FramePitch& f : frames) {
      if (f.frame == 10) {
        ++count_frame10;
        CHECK(f.activation == doctest::Approx(2.0));
      }
    }
    CHECK(count_frame10 == 1);
  }
  SUBCASE("100 cents apart keeps both") {
    std::vector<TentativeNote> notes = {make_note(0, 5, 20, 6000, 0.9),
                                        make_note(2, 5, 20, 6100, 0.9)};
    const auto frames = framewise_from_notes(notes, contours);
    int per_frame = 0;
    for (const FramePitch& f : frames) {
      if (f.frame == 7) ++per_frame;
    }
    CHECK(per_frame == 2);
  }
  SUBCASE("0/50/100 resolves by the greedy-by-activation rule") {
    std::vector<TentativeNote> notes = {make_note(0, 5, 20, 6000, 0.9),
                                        make_note(2, 5, 20, 6100, 0.9),
                                        make_note(3, 5, 20, 6050, 0.9)};
    const auto frames = framewise_from_notes(notes, contours);
    // Oracle: sort {6000:1.0-ish, 6100:1.5, 6050:0.7} by activation; keep
    // 6100 then 6000 (100 apart), reject 6050 (50 from both).
    std::vector<double> cents_frame7;
    for (const FramePitch& f : frames) {
      if (f.frame == 7) cents_frame7.push_back(f.cents);
    }
    REQUIRE(cents_frame7.size() == 2);
    CHECK(cents_frame7[0] == doctest::Approx(6000.0));
    CHECK(cents_frame7[1] == doctest::Approx(6100.0));
    // Pairwise separation is at least 60 cents.
    CHECK(std::abs(cents_frame7[0] - cents_frame7[1]) >= 60.0);
  }
}

TEST_CASE("final notes carry the 0.01 s onset shift exactly once") {
  std::vector<TentativeNote> notes = {make_note(0, 100, 150, 6000, 0.8)};
  const auto final_notes = make_final_notes(notes);
  REQUIRE(final_notes.size() == 1);
  CHECK(final_notes[0].onset_s ==
        doctest::Approx(100 * kFrameSeconds - 0.01).epsilon(1e-12));
  CHECK(final_notes[0].offset_s == doctest::Approx(150 * kFrameSeconds));
  CHECK(final_notes[0].pitch_midi == doctest::Approx(60.0));

  // Early onsets clamp at zero rather than going negative.
  std::vector<TentativeNote> early = {make_note(0, 0, 20, 6000, 0.8)};
  CHECK(make_final_notes(early)[0].onset_s == 0.0);
}
