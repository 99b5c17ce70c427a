#pragma once

#include <string>

#include "pitchtrack/types.hpp"

namespace pitchtrack {

class TrackProcessor;

// Grayscale PGM of a plane (rows become image rows, top row = highest bin).
void write_plane_pgm(const std::string& path, const Mat& plane);

// Dense binary matrix dump (rows, cols as int64 then doubles) + CSV index.
void write_plane_binary(const std::string& path, const Mat& plane);
Mat read_plane_binary(const std::string& path);

// Writes spectrogram/tentogram/pitchogram planes, contour CSVs, and
// per-contour activation curves (OC/OCS/OFC) under dir.
void dump_intermediates(TrackProcessor& proc, const std::string& dir);

// Renders the dumped planes/curves to PGM images and summary CSVs in dir.
void render_dump(const std::string& dump_dir, const std::string& out_dir);

}  // namespace pitchtrack
