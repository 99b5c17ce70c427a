#include "pitchtrack/config.hpp"

#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>

namespace pitchtrack {

namespace {

struct Entry {
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

template <typename T>
T parse_value(const std::string& s);

template <>
double parse_value<double>(const std::string& s) {
  size_t at = 0;
  const double v = std::stod(s, &at);
  if (at != s.size()) throw std::invalid_argument("not a number: " + s);
  return v;
}

template <>
int parse_value<int>(const std::string& s) {
  size_t at = 0;
  const int v = std::stoi(s, &at);
  if (at != s.size()) throw std::invalid_argument("not an integer: " + s);
  return v;
}

template <>
std::uint64_t parse_value<std::uint64_t>(const std::string& s) {
  size_t at = 0;
  const unsigned long long v = std::stoull(s, &at);
  if (at != s.size()) throw std::invalid_argument("not an integer: " + s);
  return v;
}

template <>
bool parse_value<bool>(const std::string& s) {
  if (s == "1" || s == "true" || s == "on") return true;
  if (s == "0" || s == "false" || s == "off") return false;
  throw std::invalid_argument("not a boolean: " + s);
}

template <typename T>
Entry entry(T RunConfig::* /*unused*/);

template <typename T>
Entry make_entry(std::function<T&(RunConfig&)> ref) {
  Entry e;
  e.set = [ref](RunConfig& c, const std::string& v) { ref(c) = parse_value<T>(v); };
  e.get = [ref](const RunConfig& c) {
    std::ostringstream out;
    out << ref(const_cast<RunConfig&>(c));
    return out.str();
  };
  return e;
}

#define FIELD(type, expr) \
  make_entry<type>(std::function<type&(RunConfig&)>([](RunConfig& c) -> type& { return expr; }))

const std::map<std::string, Entry>& registry() {
  static const std::map<std::string, Entry> reg = {
      {"eval.pitch_tolerance_cents", FIELD(double, c.match.pitch_tolerance_cents)},
      {"eval.onset_tolerance_s", FIELD(double, c.match.onset_tolerance_s)},
      {"eval.offset_tolerance_s", FIELD(double, c.match.offset_tolerance_s)},
      {"eval.offset_min_tolerance_s", FIELD(double, c.match.offset_min_tolerance_s)},
      {"eval.offset_length_fraction", FIELD(double, c.match.offset_length_fraction)},
      {"eval.framewise_tolerance_cents",
       FIELD(double, c.match.framewise_tolerance_cents)},
      {"peak.z", FIELD(double, c.peak.z)},
      {"peak.sigma", FIELD(double, c.peak.sigma)},
      {"peak.threshold", FIELD(double, c.peak.threshold)},
      {"peak.r", FIELD(double, c.peak.r)},
      {"offset.sigma", FIELD(double, c.offset.sigma)},
      {"offset.threshold", FIELD(double, c.offset.threshold)},
      {"notes.removal_stop", FIELD(double, c.train.removal_stop)},
      {"train.seed", FIELD(std::uint64_t, c.train.seed)},
      {"train.regularize", FIELD(bool, c.train.regularize)},
      {"train.n1_iterations", FIELD(int, c.train.n1_iterations)},
      {"train.n1_frame_stride", FIELD(int, c.train.n1_frame_stride)},
      {"train.n3_negative_keep", FIELD(double, c.train.n3_negative_keep)},
      {"train.n4_keep_rate", FIELD(double, c.train.n4_keep_rate)},
      {"train.max_examples", FIELD(int, c.train.max_examples)},
      {"train.n1_epochs", FIELD(int, c.train.n1_epochs)},
      {"train.n2_epochs", FIELD(int, c.train.n2_epochs)},
      {"train.n3_epochs", FIELD(int, c.train.n3_epochs)},
      {"train.n4_epochs", FIELD(int, c.train.n4_epochs)},
      {"train.n5_epochs", FIELD(int, c.train.n5_epochs)},
      {"train.n6_epochs", FIELD(int, c.train.n6_epochs)},
      {"train.early_patience", FIELD(int, c.train.early_patience)},
      {"train.late_patience", FIELD(int, c.train.late_patience)},
      {"train.forward_selection", FIELD(bool, c.train.run_forward_selection)},
      {"train.tune_peak", FIELD(bool, c.train.tune_peak)},
      {"train.tune_offset", FIELD(bool, c.train.tune_offset)},
      {"fs.screen_train_stride",
       FIELD(int, c.train.forward_select.screen_train_stride)},
      {"fs.screen_val_stride", FIELD(int, c.train.forward_select.screen_val_stride)},
      {"fs.refine_stride", FIELD(int, c.train.forward_select.refine_stride)},
      {"fs.final_stride", FIELD(int, c.train.forward_select.final_stride)},
      {"dataset.num_excerpts", FIELD(int, c.dataset.num_excerpts)},
      {"dataset.validation_fraction", FIELD(double, c.dataset.validation_fraction)},
      {"dataset.min_voices", FIELD(int, c.dataset.score.min_voices)},
      {"dataset.max_voices", FIELD(int, c.dataset.score.max_voices)},
      {"dataset.length_s", FIELD(double, c.dataset.score.length_s)},
      {"dataset.min_note_s", FIELD(double, c.dataset.score.min_note_s)},
      {"dataset.max_note_s", FIELD(double, c.dataset.score.max_note_s)},
  };
  return reg;
}

#undef FIELD

}  // namespace

void RunConfig::set(const std::string& key, const std::string& value) {
  auto it = registry().find(key);
  if (it == registry().end())
    throw std::invalid_argument("unknown config key: " + key);
  try {
    it->second.set(*this, value);
  } catch (const std::exception& e) {
    throw std::invalid_argument("config key " + key + ": " + e.what());
  }
}

void RunConfig::load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    const size_t begin = line.find_first_not_of(" \t\r");
    if (begin == std::string::npos) continue;
    const size_t end = line.find_last_not_of(" \t\r");
    line = line.substr(begin, end - begin + 1);
    const size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error(path + ":" + std::to_string(lineno) +
                               ": expected key = value");
    std::string key = line.substr(0, eq);
    std::string value = line.substr(eq + 1);
    key.erase(key.find_last_not_of(" \t") + 1);
    value.erase(0, value.find_first_not_of(" \t"));
    set(key, value);
  }
}

std::string RunConfig::describe() const {
  std::ostringstream out;
  for (const auto& [key, entry] : registry()) {
    out << key << " = " << entry.get(*this) << "\n";
  }
  return out.str();
}

}  // namespace pitchtrack
