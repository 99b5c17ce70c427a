#pragma once

#include <random>

#include "pitchtrack/spectral.hpp"
#include "pitchtrack/types.hpp"

namespace pitchtrack {

// Random frequency-response filter used to refilter training spectrograms
// between learning stages: ten Hann bumps plus a shelf, mean-subtracted in
// dB and applied multiplicatively in the linear domain.
struct EqFilter {
  Vec g_db;  // 518 bins, zero mean
  Vec g;     // linear gains, 10^(g_db/20)
};

EqFilter random_eq_filter(std::mt19937_64& rng);

// Multiplies every frame of M by the filter gains.
MagnitudeSpectrogram apply_eq(const MagnitudeSpectrogram& m, const EqFilter& filter);

}  // namespace pitchtrack
