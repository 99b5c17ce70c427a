#include "pitchtrack/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>

namespace pitchtrack {

namespace {

double task_distance(const FinalNote& est, const NoteAnnotation& ref,
                     NoteTask task) {
  if (task == NoteTask::kOffset) return std::abs(est.offset_s - ref.offset_s);
  return std::abs(est.onset_s - ref.onset_s);
}

// Kuhn's augmenting-path matching over an eligibility adjacency list.
int max_matching(const std::vector<std::vector<int>>& adj, int n_right,
                 std::vector<int>& match_left, std::vector<int>& match_right) {
  const int n_left = static_cast<int>(adj.size());
  match_left.assign(n_left, -1);
  match_right.assign(n_right, -1);
  std::vector<char> seen;
  std::function<bool(int)> try_match = [&](int u) -> bool {
    for (int v : adj[u]) {
      if (seen[v]) continue;
      seen[v] = 1;
      if (match_right[v] < 0 || try_match(match_right[v])) {
        match_left[u] = v;
        match_right[v] = u;
        return true;
      }
    }
    return false;
  };
  int total = 0;
  for (int u = 0; u < n_left; ++u) {
    seen.assign(n_right, 0);
    if (try_match(u)) ++total;
  }
  return total;
}

MetricReport report_from_counts(int matched, int est_count, int ref_count) {
  MetricReport r;
  r.matched = matched;
  r.est_count = est_count;
  r.ref_count = ref_count;
  r.precision = est_count > 0 ? double(matched) / est_count : 0.0;
  r.recall = ref_count > 0 ? double(matched) / ref_count : 0.0;
  r.f_measure = f_measure(r.precision, r.recall);
  r.accuracy = accuracy(matched, est_count - matched, ref_count - matched);
  return r;
}

}  // namespace

bool note_pair_eligible(const FinalNote& est, const NoteAnnotation& ref,
                        NoteTask task, const MatchSpec& spec) {
  const double cents = std::abs(est.pitch_midi - ref.pitch_midi) * 100.0;
  if (cents > spec.pitch_tolerance_cents) return false;
  switch (task) {
    case NoteTask::kOnset:
      return std::abs(est.onset_s - ref.onset_s) <= spec.onset_tolerance_s;
    case NoteTask::kOffset:
      return std::abs(est.offset_s - ref.offset_s) <= spec.offset_tolerance_s;
    case NoteTask::kOnsetOffset: {
      if (std::abs(est.onset_s - ref.onset_s) > spec.onset_tolerance_s)
        return false;
      const double len = ref.offset_s - ref.onset_s;
      const double window = std::max(spec.offset_min_tolerance_s,
                                     spec.offset_length_fraction * len);
      return std::abs(est.offset_s - ref.offset_s) <= window;
    }
  }
  return false;
}

std::vector<std::pair<int, int>> match_notes_greedy(
    const std::vector<FinalNote>& est, const std::vector<NoteAnnotation>& ref,
    NoteTask task, const MatchSpec& spec) {
  struct Candidate {
    double distance;
    int e, r;
  };
  std::vector<Candidate> candidates;
  for (int e = 0; e < static_cast<int>(est.size()); ++e) {
    for (int r = 0; r < static_cast<int>(ref.size()); ++r) {
      if (note_pair_eligible(est[e], ref[r], task, spec)) {
        candidates.push_back({task_distance(est[e], ref[r], task), e, r});
      }
    }
  }
  std::sort(candidates.begin(), candidates.end(),
            [](const Candidate& a, const Candidate& b) {
              if (a.distance != b.distance) return a.distance < b.distance;
              if (a.e != b.e) return a.e < b.e;
              return a.r < b.r;
            });
  std::vector<char> est_used(est.size(), 0), ref_used(ref.size(), 0);
  std::vector<std::pair<int, int>> pairs;
  for (const Candidate& c : candidates) {
    if (est_used[c.e] || ref_used[c.r]) continue;
    est_used[c.e] = 1;
    ref_used[c.r] = 1;
    pairs.push_back({c.e, c.r});
  }
  return pairs;
}

std::vector<std::pair<int, int>> match_notes_optimal(
    const std::vector<FinalNote>& est, const std::vector<NoteAnnotation>& ref,
    NoteTask task, const MatchSpec& spec) {
  std::vector<std::vector<int>> adj(est.size());
  for (int e = 0; e < static_cast<int>(est.size()); ++e) {
    for (int r = 0; r < static_cast<int>(ref.size()); ++r) {
      if (note_pair_eligible(est[e], ref[r], task, spec)) adj[e].push_back(r);
    }
  }
  std::vector<int> ml, mr;
  max_matching(adj, static_cast<int>(ref.size()), ml, mr);
  std::vector<std::pair<int, int>> pairs;
  for (int e = 0; e < static_cast<int>(ml.size()); ++e) {
    if (ml[e] >= 0) pairs.push_back({e, ml[e]});
  }
  return pairs;
}

double f_measure(double precision, double recall) {
  if (precision <= 0.0 && recall <= 0.0) return 0.0;
  return 2.0 * precision * recall / (precision + recall);
}

double accuracy(int tp, int fp, int fn) {
  const int denom = tp + fp + fn;
  return denom > 0 ? double(tp) / denom : 0.0;
}

double combined_metric(double f1, double f2, double f3, double f4) {
  if (f1 <= 0.0 || f2 <= 0.0 || f3 <= 0.0 || f4 <= 0.0) return 0.0;
  return 4.0 / (1.0 / f1 + 1.0 / f2 + 1.0 / f3 + 1.0 / f4);
}

MetricReport note_metrics(const std::vector<FinalNote>& est,
                          const std::vector<NoteAnnotation>& ref, NoteTask task,
                          const MatchSpec& spec, bool optimal) {
  const auto pairs = optimal ? match_notes_optimal(est, ref, task, spec)
                             : match_notes_greedy(est, ref, task, spec);
  return report_from_counts(static_cast<int>(pairs.size()),
                            static_cast<int>(est.size()),
                            static_cast<int>(ref.size()));
}

MetricReport framewise_metrics(const std::vector<FramePitch>& est,
                               const std::vector<FramePitch>& ref,
                               const MatchSpec& spec) {
  std::map<int, std::pair<std::vector<double>, std::vector<double>>> frames;
  for (const FramePitch& p : est) frames[p.frame].first.push_back(p.cents);
  for (const FramePitch& p : ref) frames[p.frame].second.push_back(p.cents);

  int matched = 0;
  for (const auto& [frame, lists] : frames) {
    const auto& e = lists.first;
    const auto& r = lists.second;
    if (e.empty() || r.empty()) continue;
    std::vector<std::vector<int>> adj(e.size());
    for (size_t i = 0; i < e.size(); ++i) {
      for (size_t j = 0; j < r.size(); ++j) {
        if (std::abs(e[i] - r[j]) <= spec.framewise_tolerance_cents) {
          adj[i].push_back(static_cast<int>(j));
        }
      }
    }
    std::vector<int> ml, mr;
    matched += max_matching(adj, static_cast<int>(r.size()), ml, mr);
  }
  return report_from_counts(matched, static_cast<int>(est.size()),
                            static_cast<int>(ref.size()));
}

std::vector<FramePitch> annotations_to_frames(
    const std::vector<NoteAnnotation>& notes) {
  std::vector<FramePitch> out;
  for (const NoteAnnotation& n : notes) {
    const int first = seconds_to_frame(n.onset_s);
    const int last = seconds_to_frame(n.offset_s);
    for (int f = first; f <= last; ++f) {
      out.push_back({f, midi_to_cents(n.pitch_midi), 1.0});
    }
  }
  std::sort(out.begin(), out.end(), [](const FramePitch& a, const FramePitch& b) {
    if (a.frame != b.frame) return a.frame < b.frame;
    return a.cents < b.cents;
  });
  return out;
}

}  // namespace pitchtrack
