#include "pitchtrack/forward_select.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <stdexcept>

#include "pitchtrack/dsp.hpp"

namespace pitchtrack {

namespace {

double l4_at(const Mat& l4, int pitch_bin, int offset, int frame) {
  const int src = pitch_bin + kPitchToL4Offset + offset;
  if (src < 0 || src >= static_cast<int>(l4.rows())) return 0.0;
  return l4(src, frame);
}

std::vector<N1Example2> subsample(const std::vector<N1Example2>& in, int stride,
                                  const char* what) {
  if (stride < 1) throw std::invalid_argument("forward selection: bad stride");
  std::vector<N1Example2> out;
  for (size_t i = 0; i < in.size(); i += stride) out.push_back(in[i]);
  if (out.size() < 8) {
    throw std::runtime_error(
        std::string("forward selection: too few ") + what +
        " examples after subsampling; need at least " + std::to_string(8L * stride) +
        " raw examples");
  }
  return out;
}

double candidate_loss(const nn::Matrix& base_x, const nn::Vector& cand_col,
                      const nn::Vector& y, const nn::Matrix& base_val,
                      const nn::Vector& cand_val, const nn::Vector& val_y,
                      const nn::TrainConfig& cfg) {
  const Eigen::Index n = base_x.rows();
  const Eigen::Index d = base_x.cols() + 1;
  nn::Matrix x(n, d);
  x.leftCols(base_x.cols()) = base_x;
  x.col(d - 1) = cand_col;
  nn::Matrix vx(base_val.rows(), d);
  vx.leftCols(base_val.cols()) = base_val;
  vx.col(d - 1) = cand_val;

  nn::Network net = nn::make_network({static_cast<int>(d), 1}, cfg.seed);
  nn::train(net, x, y, vx, val_y, cfg);
  return nn::evaluate_loss(net, vx, val_y);
}

}  // namespace

nn::Matrix n1_features(const std::vector<N1Example2>& examples,
                       const std::vector<const Mat*>& l4,
                       const std::vector<int>& indices, const Mat& basis) {
  const int k = static_cast<int>(indices.size());
  nn::Matrix x(examples.size(), k + 15);
  for (size_t e = 0; e < examples.size(); ++e) {
    const N1Example2& ex = examples[e];
    const Mat& plane = *l4[ex.track];
    for (int i = 0; i < k; ++i) {
      x(e, i) = l4_at(plane, ex.pitch_bin, indices[i], ex.frame);
    }
    for (int c = 0; c < 15; ++c) {
      x(e, k + c) = basis(c, ex.pitch_bin);
    }
  }
  return x;
}

nn::Vector n1_labels(const std::vector<N1Example2>& examples) {
  nn::Vector y(examples.size());
  for (size_t e = 0; e < examples.size(); ++e) y[e] = examples[e].label;
  return y;
}

PitchKernel forward_select_kernel(const N1Corpus& corpus,
                                  const ForwardSelectConfig& cfg,
                                  ForwardSelectDiagnostics* diagnostics,
                                  const PitchKernel* initial) {
  if (initial && initial->size() >= cfg.target_size) return *initial;
  const Mat basis = dct_basis();
  std::vector<int> indices = initial ? initial->indices : partial_offsets();
  const int n_candidates = cfg.candidate_hi - cfg.candidate_lo + 1;

  const std::vector<N1Example2> screen_train =
      subsample(corpus.train, cfg.screen_train_stride, "screening training");
  const std::vector<N1Example2> screen_val =
      subsample(corpus.validation, cfg.screen_val_stride, "screening validation");
  const std::vector<N1Example2> refine_train =
      subsample(corpus.train, cfg.refine_stride, "refinement training");
  const std::vector<N1Example2> refine_val =
      subsample(corpus.validation, cfg.refine_stride, "refinement validation");
  const std::vector<N1Example2> final_train =
      subsample(corpus.train, cfg.final_stride, "final training");
  const std::vector<N1Example2> final_val =
      subsample(corpus.validation, cfg.final_stride, "final validation");

  auto candidate_column = [&](const std::vector<N1Example2>& examples,
                              int offset) {
    nn::Vector col(examples.size());
    for (size_t e = 0; e < examples.size(); ++e) {
      col[e] = l4_at(*corpus.l4[examples[e].track], examples[e].pitch_bin,
                     offset, examples[e].frame);
    }
    return col;
  };

  while (static_cast<int>(indices.size()) < cfg.target_size) {
    std::set<int> in_kernel(indices.begin(), indices.end());
    const nn::Matrix base_x = n1_features(screen_train, corpus.l4, indices, basis);
    const nn::Vector y = n1_labels(screen_train);
    const nn::Matrix base_val = n1_features(screen_val, corpus.l4, indices, basis);
    const nn::Vector val_y = n1_labels(screen_val);

    // Step 1: screen every candidate on the small sample.
    Vec scores(n_candidates);
    std::vector<char> evaluated(n_candidates, 0);
#pragma omp parallel for schedule(dynamic, 16)
    for (int c = 0; c < n_candidates; ++c) {
      const int offset = cfg.candidate_lo + c;
      if (in_kernel.count(offset)) continue;
      nn::TrainConfig inner = cfg.train;
      inner.seed = cfg.train.seed + 7919ULL * (indices.size() * 10000ULL + c);
      scores[c] = candidate_loss(base_x, candidate_column(screen_train, offset),
                                 y, base_val, candidate_column(screen_val, offset),
                                 val_y, inner);
      evaluated[c] = 1;
    }
    // Fill the gaps left by kernel members from their neighbors.
    for (int c = 0; c < n_candidates; ++c) {
      if (evaluated[c]) continue;
      int lo = c - 1, hi = c + 1;
      while (lo >= 0 && !evaluated[lo]) --lo;
      while (hi < n_candidates && !evaluated[hi]) ++hi;
      if (lo >= 0 && hi < n_candidates) {
        const double t = double(c - lo) / (hi - lo);
        scores[c] = (1.0 - t) * scores[lo] + t * scores[hi];
      } else if (lo >= 0) {
        scores[c] = scores[lo];
      } else if (hi < n_candidates) {
        scores[c] = scores[hi];
      }
    }
    const Vec smoothed = smooth(scores, hann_window(13));

    // Step 2: refine the best screening survivors on more data.
    std::vector<int> order(n_candidates);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
      if (smoothed[a] != smoothed[b]) return smoothed[a] < smoothed[b];
      return a < b;
    });
    std::vector<int> shortlist;
    for (int c : order) {
      if (!evaluated[c]) continue;  // kernel members are not candidates
      shortlist.push_back(c);
      if (static_cast<int>(shortlist.size()) >= cfg.refine_count) break;
    }

    const nn::Matrix refine_x = n1_features(refine_train, corpus.l4, indices, basis);
    const nn::Vector refine_y = n1_labels(refine_train);
    const nn::Matrix refine_vx = n1_features(refine_val, corpus.l4, indices, basis);
    const nn::Vector refine_vy = n1_labels(refine_val);
    Vec refine_scores(shortlist.size());
#pragma omp parallel for schedule(dynamic, 4)
    for (int s = 0; s < static_cast<int>(shortlist.size()); ++s) {
      const int offset = cfg.candidate_lo + shortlist[s];
      nn::TrainConfig inner = cfg.train;
      inner.seed = cfg.train.seed + 104729ULL * (indices.size() * 100ULL + s);
      refine_scores[s] = candidate_loss(
          refine_x, candidate_column(refine_train, offset), refine_y, refine_vx,
          candidate_column(refine_val, offset), refine_vy, inner);
    }
    int best = 0;
    for (int s = 1; s < static_cast<int>(shortlist.size()); ++s) {
      if (refine_scores[s] < refine_scores[best]) best = s;
    }
    const int chosen = cfg.candidate_lo + shortlist[best];

    if (diagnostics) {
      diagnostics->scores.push_back(scores);
      diagnostics->smoothed_scores.push_back(smoothed);
      diagnostics->selected.push_back(chosen);
    }
    indices.push_back(chosen);
    std::sort(indices.begin(), indices.end());
  }

  // Final fit on the dense sample.
  PitchKernel kernel;
  kernel.indices = indices;
  const nn::Matrix x = n1_features(final_train, corpus.l4, indices, basis);
  const nn::Matrix vx = n1_features(final_val, corpus.l4, indices, basis);
  nn::Network net = nn::make_network({static_cast<int>(x.cols()), 1},
                                     cfg.train.seed);
  nn::TrainConfig final_cfg = cfg.train;
  final_cfg.max_epochs = std::max(cfg.train.max_epochs, 200);
  nn::train(net, x, n1_labels(final_train), vx, n1_labels(final_val), final_cfg);
  const int k = static_cast<int>(indices.size());
  kernel.weights.resize(k);
  for (int i = 0; i < k; ++i) kernel.weights[i] = net.weights[0](i, 0);
  kernel.w_dct.resize(15);
  for (int c = 0; c < 15; ++c) kernel.w_dct[c] = net.weights[0](k + c, 0);
  kernel.bias = net.biases[0][0];
  kernel.validate();
  return kernel;
}

}  // namespace pitchtrack
