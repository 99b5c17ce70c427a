#pragma once

#include <string>
#include <vector>

namespace pitchtrack {

struct AudioBuffer {
  std::vector<double> samples;  // mono, nominal range [-1, 1]
  double sample_rate = 44100.0;

  double duration_seconds() const {
    return sample_rate > 0 ? samples.size() / sample_rate : 0.0;
  }
};

// Reads a PCM WAV file (16/24-bit int or 32-bit float). Multichannel input
// is downmixed to mono by averaging. Throws std::runtime_error on malformed
// or unsupported files.
AudioBuffer read_wav(const std::string& path);

// Writes a mono 16-bit PCM WAV file. Samples are clipped to [-1, 1].
void write_wav(const std::string& path, const AudioBuffer& audio);

// Windowed-sinc resampler.
AudioBuffer resample(const AudioBuffer& audio, double target_rate);

}  // namespace pitchtrack
