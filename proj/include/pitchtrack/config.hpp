#pragma once

#include <string>

#include "pitchtrack/dataset.hpp"
#include "pitchtrack/events.hpp"
#include "pitchtrack/metrics.hpp"
#include "pitchtrack/pipeline.hpp"

namespace pitchtrack {

// Every tunable constant of the system, addressable by a flat key. Values
// load in layers: built-in defaults, then a key=value config file, then
// command-line flags.
struct RunConfig {
  MatchSpec match;
  PeakPickParams peak;
  OffsetDecisionParams offset;
  TrainAllConfig train;
  DatasetConfig dataset;

  // Sets one key; throws std::invalid_argument for unknown keys or
  // unparseable values.
  void set(const std::string& key, const std::string& value);

  // Parses a key=value file ('#' starts a comment). Unknown keys reject the
  // whole file.
  void load_file(const std::string& path);

  // All known keys with their current values (for --help-config).
  std::string describe() const;
};

}  // namespace pitchtrack
