#include "pitchtrack/plotting.hpp"

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "pitchtrack/pipeline.hpp"

namespace fs = std::filesystem;

namespace pitchtrack {

void write_plane_pgm(const std::string& path, const Mat& plane) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write image: " + path);
  const int rows = static_cast<int>(plane.rows());
  const int cols = static_cast<int>(plane.cols());
  const double lo = plane.minCoeff();
  const double hi = plane.maxCoeff();
  const double scale = hi > lo ? 255.0 / (hi - lo) : 0.0;
  out << "P5\n" << cols << " " << rows << "\n255\n";
  std::vector<unsigned char> row(cols);
  for (int r = rows - 1; r >= 0; --r) {  // top of the image = highest bin
    for (int c = 0; c < cols; ++c) {
      row[c] = static_cast<unsigned char>((plane(r, c) - lo) * scale);
    }
    out.write(reinterpret_cast<const char*>(row.data()), cols);
  }
}

void write_plane_binary(const std::string& path, const Mat& plane) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write plane: " + path);
  const int64_t rows = plane.rows(), cols = plane.cols();
  out.write(reinterpret_cast<const char*>(&rows), 8);
  out.write(reinterpret_cast<const char*>(&cols), 8);
  out.write(reinterpret_cast<const char*>(plane.data()),
            static_cast<std::streamsize>(rows * cols * 8));
}

Mat read_plane_binary(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open plane: " + path);
  int64_t rows = 0, cols = 0;
  in.read(reinterpret_cast<char*>(&rows), 8);
  in.read(reinterpret_cast<char*>(&cols), 8);
  if (rows <= 0 || cols <= 0) throw std::runtime_error("bad plane file: " + path);
  Mat plane(rows, cols);
  in.read(reinterpret_cast<char*>(plane.data()),
          static_cast<std::streamsize>(rows * cols * 8));
  if (!in) throw std::runtime_error("truncated plane file: " + path);
  return plane;
}

void dump_intermediates(TrackProcessor& proc, const std::string& dir) {
  fs::create_directories(dir);
  write_plane_binary((fs::path(dir) / "spectrogram_l.plane").string(),
                     proc.family().white.l);
  write_plane_binary((fs::path(dir) / "tentogram.plane").string(),
                     proc.tentogram());
  write_plane_binary((fs::path(dir) / "pitchogram.plane").string(),
                     proc.pitchogram());

  std::ofstream index((fs::path(dir) / "index.csv").string());
  index << "kind,file\n"
        << "plane,spectrogram_l.plane\n"
        << "plane,tentogram.plane\n"
        << "plane,pitchogram.plane\n"
        << "contours,contours.csv\n"
        << "curves,curves.csv\n";

  std::ofstream contours((fs::path(dir) / "contours.csv").string());
  contours << "contour,frame,time_s,pitch_cents,activation,source\n";
  const auto& cs = proc.contours();
  for (size_t c = 0; c < cs.size(); ++c) {
    for (const ContourFrame& f : cs[c].frames) {
      const char* source = f.source == ContourSource::kRidge ? "ridge"
                           : f.source == ContourSource::kInterpolated
                               ? "interpolated"
                               : "extrapolated";
      contours << c << "," << f.frame << "," << frame_to_seconds(f.frame) << ","
               << f.pitch_cents << "," << f.activation << "," << source << "\n";
    }
  }

  std::ofstream curves((fs::path(dir) / "curves.csv").string());
  curves << "contour,frame,time_s,oc,ocs,ofc\n";
  const auto& oc = proc.onset_curves();
  const auto& ocs = proc.onset_curves_smooth();
  const auto& ofc = proc.offset_curves();
  for (size_t c = 0; c < cs.size(); ++c) {
    for (int i = 0; i < cs[c].length(); ++i) {
      const int frame = cs[c].start_frame + i;
      curves << c << "," << frame << "," << frame_to_seconds(frame) << ","
             << oc[c][i] << "," << ocs[c][i] << "," << ofc[c][i] << "\n";
    }
  }
}

void render_dump(const std::string& dump_dir, const std::string& out_dir) {
  fs::create_directories(out_dir);
  for (const char* name :
       {"spectrogram_l", "tentogram", "pitchogram"}) {
    const fs::path plane_path = fs::path(dump_dir) / (std::string(name) + ".plane");
    if (!fs::exists(plane_path)) continue;
    const Mat plane = read_plane_binary(plane_path.string());
    write_plane_pgm((fs::path(out_dir) / (std::string(name) + ".pgm")).string(),
                    plane);
  }
  for (const char* name : {"contours.csv", "curves.csv"}) {
    const fs::path src = fs::path(dump_dir) / name;
    if (fs::exists(src)) {
      fs::copy_file(src, fs::path(out_dir) / name,
                    fs::copy_options::overwrite_existing);
    }
  }
}

}  // namespace pitchtrack
