#include "pitchtrack/contours.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace pitchtrack {

namespace {

void recompute_stats(Region& r, const Mat& p) {
  double mass = 0.0, weighted = 0.0;
  r.start_frame = r.cells.front().second;
  r.end_frame = r.cells.front().second;
  for (const auto& [bin, frame] : r.cells) {
    const double a = p(bin, frame);
    mass += a;
    weighted += a * cent_bin_to_cents(bin);
    r.start_frame = std::min(r.start_frame, frame);
    r.end_frame = std::max(r.end_frame, frame);
  }
  r.centroid_cents = mass > 0.0 ? weighted / mass : 0.0;
}

}  // namespace

std::vector<Region> extract_regions(const Mat& pitchogram) {
  const int nb = static_cast<int>(pitchogram.rows());
  const int nf = static_cast<int>(pitchogram.cols());
  std::vector<char> visited(static_cast<size_t>(nb) * nf, 0);
  auto idx = [nb](int bin, int frame) {
    return static_cast<size_t>(frame) * nb + bin;
  };

  std::vector<Region> regions;
  std::vector<std::pair<int, int>> queue;
  for (int f = 0; f < nf; ++f) {
    for (int b = 0; b < nb; ++b) {
      if (pitchogram(b, f) <= 0.0 || visited[idx(b, f)]) continue;
      Region region;
      queue.clear();
      queue.push_back({b, f});
      visited[idx(b, f)] = 1;
      while (!queue.empty()) {
        auto [cb, cf] = queue.back();
        queue.pop_back();
        region.cells.push_back({cb, cf});
        for (int db = -1; db <= 1; ++db) {
          for (int df = -1; df <= 1; ++df) {
            if (db == 0 && df == 0) continue;
            const int nb2 = cb + db, nf2 = cf + df;
            if (nb2 < 0 || nb2 >= nb || nf2 < 0 || nf2 >= nf) continue;
            if (pitchogram(nb2, nf2) <= 0.0 || visited[idx(nb2, nf2)]) continue;
            visited[idx(nb2, nf2)] = 1;
            queue.push_back({nb2, nf2});
          }
        }
      }
      recompute_stats(region, pitchogram);
      regions.push_back(std::move(region));
    }
  }
  std::sort(regions.begin(), regions.end(),
            [](const Region& a, const Region& b) {
              return a.start_frame < b.start_frame;
            });
  return regions;
}

std::vector<Region> merge_regions(std::vector<Region> regions,
                                  const Mat& pitchogram) {
  bool changed = true;
  while (changed) {
    changed = false;
    std::sort(regions.begin(), regions.end(),
              [](const Region& a, const Region& b) {
                return a.start_frame < b.start_frame;
              });
    for (size_t i = 0; i < regions.size() && !changed; ++i) {
      for (size_t j = 0; j < regions.size(); ++j) {
        if (i == j) continue;
        const int gap = regions[j].start_frame - regions[i].end_frame;
        if (gap < 0 || gap > kMergeGapFrames) continue;
        if (std::abs(regions[j].centroid_cents - regions[i].centroid_cents) >
            50.0)
          continue;
        auto& cells = regions[i].cells;
        cells.insert(cells.end(), regions[j].cells.begin(),
                     regions[j].cells.end());
        recompute_stats(regions[i], pitchogram);
        regions.erase(regions.begin() + j);
        changed = true;
        break;
      }
    }
  }
  return regions;
}

Contour extract_ridge(const Region& region, const Mat& pitchogram,
                      const ContourEvaluator& evaluate) {
  if (region.cells.empty())
    throw std::invalid_argument("extract_ridge: empty region");

  // Ridge bin per region frame: argmax activation among the region's cells.
  std::map<int, std::pair<int, double>> ridge;  // frame -> (bin, activation)
  for (const auto& [bin, frame] : region.cells) {
    const double a = pitchogram(bin, frame);
    auto it = ridge.find(frame);
    if (it == ridge.end()) {
      ridge[frame] = {bin, a};
    } else if (a > it->second.second ||
               (a == it->second.second &&
                std::abs(cent_bin_to_cents(bin) - region.centroid_cents) <
                    std::abs(cent_bin_to_cents(it->second.first) -
                             region.centroid_cents))) {
      it->second = {bin, a};
    }
  }

  Contour contour;
  contour.region_start = region.start_frame;
  contour.start_frame = std::max(0, region.start_frame - kContourBackExtension);
  contour.end_frame = region.end_frame;
  contour.mean_pitch_cents = region.centroid_cents;

  const int first_bin = ridge.begin()->second.first;
  for (int f = contour.start_frame; f <= contour.end_frame; ++f) {
    ContourFrame cf;
    cf.frame = f;
    if (f < region.start_frame) {
      cf.source = ContourSource::kExtrapolated;
      cf.bin = first_bin;
    } else if (auto it = ridge.find(f); it != ridge.end()) {
      cf.source = ContourSource::kRidge;
      cf.bin = it->second.first;
    } else {
      // Gap left by merging: interpolate the bin index linearly between the
      // flanking ridge frames.
      cf.source = ContourSource::kInterpolated;
      auto after = ridge.upper_bound(f);
      auto before = std::prev(after);
      const double t = double(f - before->first) / (after->first - before->first);
      cf.bin = (1.0 - t) * before->second.first + t * after->second.first;
    }
    const ContourEval eval = evaluate(f, cf.bin);
    cf.pitch_cents = eval.pitch_cents;
    cf.activation = cf.source == ContourSource::kRidge
                        ? pitchogram(static_cast<int>(cf.bin), f)
                        : eval.activation;
    cf.n2_output = eval.n2_output;
    cf.n2_hidden = eval.n2_hidden;
    contour.frames.push_back(std::move(cf));
  }
  return contour;
}

}  // namespace pitchtrack
