#include "pitchtrack/audio.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace pitchtrack {

namespace {

uint32_t read_u32(std::istream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  return b[0] | (b[1] << 8) | (b[2] << 16) | (uint32_t(b[3]) << 24);
}

uint16_t read_u16(std::istream& in) {
  unsigned char b[2];
  in.read(reinterpret_cast<char*>(b), 2);
  return b[0] | (b[1] << 8);
}

void write_u32(std::ostream& out, uint32_t v) {
  char b[4] = {char(v & 0xff), char((v >> 8) & 0xff), char((v >> 16) & 0xff),
               char((v >> 24) & 0xff)};
  out.write(b, 4);
}

void write_u16(std::ostream& out, uint16_t v) {
  char b[2] = {char(v & 0xff), char((v >> 8) & 0xff)};
  out.write(b, 2);
}

}  // namespace

AudioBuffer read_wav(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open audio file: " + path);

  char tag[4];
  in.read(tag, 4);
  if (std::strncmp(tag, "RIFF", 4) != 0)
    throw std::runtime_error("not a RIFF file: " + path);
  read_u32(in);  // riff size
  in.read(tag, 4);
  if (std::strncmp(tag, "WAVE", 4) != 0)
    throw std::runtime_error("not a WAVE file: " + path);

  uint16_t format = 0, channels = 0, bits = 0;
  uint32_t rate = 0;
  std::vector<char> data;
  bool have_fmt = false, have_data = false;

  while (in.read(tag, 4)) {
    uint32_t size = read_u32(in);
    if (std::strncmp(tag, "fmt ", 4) == 0) {
      format = read_u16(in);
      channels = read_u16(in);
      rate = read_u32(in);
      read_u32(in);  // byte rate
      read_u16(in);  // block align
      bits = read_u16(in);
      if (size > 16) in.seekg(size - 16, std::ios::cur);
      if (format == 0xFFFE) {
        // WAVE_FORMAT_EXTENSIBLE: actual format is in the extension, but the
        // bit width already tells us how to decode the common cases.
        format = (bits == 32) ? 3 : 1;
      }
      have_fmt = true;
    } else if (std::strncmp(tag, "data", 4) == 0) {
      data.resize(size);
      in.read(data.data(), size);
      have_data = true;
    } else {
      in.seekg(size + (size & 1), std::ios::cur);
    }
    if (have_fmt && have_data) break;
  }
  if (!have_fmt || !have_data)
    throw std::runtime_error("missing fmt/data chunk: " + path);
  if (channels < 1) throw std::runtime_error("no channels: " + path);

  const size_t bytes_per_sample = bits / 8;
  if (bytes_per_sample == 0) throw std::runtime_error("bad bit depth: " + path);
  const size_t total = data.size() / (bytes_per_sample * channels);

  AudioBuffer out;
  out.sample_rate = rate;
  out.samples.resize(total);
  const unsigned char* p = reinterpret_cast<const unsigned char*>(data.data());
  for (size_t i = 0; i < total; ++i) {
    double acc = 0.0;
    for (int ch = 0; ch < channels; ++ch) {
      const unsigned char* s = p + (i * channels + ch) * bytes_per_sample;
      double v;
      if (format == 1 && bits == 16) {
        int16_t raw = s[0] | (s[1] << 8);
        v = raw / 32768.0;
      } else if (format == 1 && bits == 24) {
        int32_t raw = s[0] | (s[1] << 8) | (s[2] << 16);
        if (raw & 0x800000) raw |= ~0xFFFFFF;
        v = raw / 8388608.0;
      } else if (format == 3 && bits == 32) {
        float f;
        std::memcpy(&f, s, 4);
        v = f;
      } else {
        throw std::runtime_error("unsupported WAV encoding (" +
                                 std::to_string(format) + "/" +
                                 std::to_string(bits) + " bit): " + path);
      }
      acc += v;
    }
    out.samples[i] = acc / channels;
  }
  return out;
}

void write_wav(const std::string& path, const AudioBuffer& audio) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write audio file: " + path);
  const uint32_t n = static_cast<uint32_t>(audio.samples.size());
  const uint32_t rate = static_cast<uint32_t>(std::lround(audio.sample_rate));
  out.write("RIFF", 4);
  write_u32(out, 36 + 2 * n);
  out.write("WAVE", 4);
  out.write("fmt ", 4);
  write_u32(out, 16);
  write_u16(out, 1);
  write_u16(out, 1);
  write_u32(out, rate);
  write_u32(out, rate * 2);
  write_u16(out, 2);
  write_u16(out, 16);
  out.write("data", 4);
  write_u32(out, 2 * n);
  for (double s : audio.samples) {
    double c = std::clamp(s, -1.0, 1.0);
    int16_t v = static_cast<int16_t>(std::lround(c * 32767.0));
    write_u16(out, static_cast<uint16_t>(v));
  }
}

AudioBuffer resample(const AudioBuffer& audio, double target_rate) {
  if (audio.sample_rate == target_rate) return audio;
  if (audio.samples.empty()) return {std::vector<double>{}, target_rate};

  const double ratio = audio.sample_rate / target_rate;
  const int n_out =
      static_cast<int>(std::ceil(audio.samples.size() / ratio));
  // Low-pass at the narrower of the two Nyquist bands.
  const double cutoff = 0.95 * std::min(1.0, 1.0 / ratio);
  const int taps = 24;

  AudioBuffer out;
  out.sample_rate = target_rate;
  out.samples.resize(n_out);
  const int n_in = static_cast<int>(audio.samples.size());
  for (int i = 0; i < n_out; ++i) {
    const double center = i * ratio;
    const int lo = std::max(0, static_cast<int>(std::floor(center)) - taps + 1);
    const int hi = std::min(n_in - 1, static_cast<int>(std::floor(center)) + taps);
    double acc = 0.0;
    for (int j = lo; j <= hi; ++j) {
      const double x = center - j;
      const double sinc =
          (x == 0.0) ? cutoff : std::sin(M_PI * cutoff * x) / (M_PI * x);
      const double taper = 0.5 + 0.5 * std::cos(M_PI * x / taps);
      acc += audio.samples[j] * sinc * taper;
    }
    out.samples[i] = acc;
  }
  return out;
}

}  // namespace pitchtrack
