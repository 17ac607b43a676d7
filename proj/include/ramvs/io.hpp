#pragma once

#include "ramvs/core.hpp"
#include "ramvs/geometry.hpp"
#include "ramvs/reconstruct.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace ramvs {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Camera text files

struct CamFile {
  Camera camera;
  std::optional<double> num_planes;
  std::optional<double> depth_max;
};

/// Throws Error(format) naming file, line and expectation, Error(io) when the
/// file cannot be opened.
CamFile read_cam(const fs::path& path);
CamFile parse_cam(const std::string& text, const std::string& name);
/// Numbers are written with 17 significant digits so a re-read is exact.
void write_cam(const fs::path& path, const CamFile& cam);
std::string format_cam(const CamFile& cam);

// ---------------------------------------------------------------------------
// View pairing

struct PairEntry {
  int view = 0;
  double score = 0.0;
};
/// Ranked source views for every reference view.
using PairList = std::vector<std::vector<PairEntry>>;

PairList read_pair(const fs::path& path);
void write_pair(const fs::path& path, const PairList& pairs);

// ---------------------------------------------------------------------------
// Raster formats

/// One grid per channel (1 or 3). Throws Error(format) on a bad magic, header
/// or truncated payload.
std::vector<GridXd> read_pfm(const fs::path& path);
/// NaN and non-positive values become invalid pixels.
DepthMap read_pfm_depth(const fs::path& path);
/// Little-endian, single channel. Invalid depth pixels are written as NaN.
void write_pfm(const fs::path& path, const GridXd& values);
void write_pfm(const fs::path& path, const DepthMap& depth);

/// Grayscale in [0, 1]; 8-bit PNG or PFM (three channels are averaged).
GridXd read_image(const fs::path& path);
/// 8-bit grayscale PNG; values are clamped to [0, 1] and rounded.
void write_png(const fs::path& path, const GridXd& image);

// ---------------------------------------------------------------------------
// PLY

enum class PlyFormat { ascii, binary_little_endian };

struct PlyData {
  std::vector<Vec3> points;
  std::vector<Color> colors;
  std::vector<Vec3> normals;
  std::vector<std::array<int, 3>> faces;
};

/// Throws Error(empty_input) for an empty cloud, Error(io) with the path on
/// write failure.
void write_ply(const fs::path& path, const PointCloud& cloud, PlyFormat format = PlyFormat::ascii);
void write_ply(const fs::path& path, const TriangleMesh& mesh, PlyFormat format = PlyFormat::ascii);
/// Reads the vertex (x, y, z, optional colors and normals) and triangle face
/// elements of an ascii or binary little-endian file.
PlyData read_ply(const fs::path& path);

// ---------------------------------------------------------------------------
// Volumes

/// Text header ("RAMVSVOL 1", "dims D H W", "scale s", "endian little",
/// "end") followed by D*H*W little-endian float32 values, slice-major.
/// Invalid cells (valid == 0) are written as NaN.
void write_volume(const fs::path& path, const Volume<double>& values, double scale,
                  const ValidityVolume* valid = nullptr);

struct VolumeFile {
  Volume<double> values;
  ValidityVolume valid;
  double scale = 1.0;
};
VolumeFile read_volume(const fs::path& path);

// ---------------------------------------------------------------------------
// Datasets

/// images/%08d.{png,pfm}, cams/%08d_cam.txt, optional depths/%08d.pfm, pair.txt.
struct SceneBundle {
  fs::path root;
  std::vector<fs::path> images;
  std::vector<CamFile> cams;
  std::vector<std::optional<fs::path>> depths;
  PairList pairs;

  int size() const { return static_cast<int>(cams.size()); }
  bool has_gt() const;
};

std::string view_stem(int view);

SceneBundle load_scene(const fs::path& dir);

enum class ImageFormat { png, pfm };

/// `depths` may be empty.
void write_scene(const fs::path& dir, const std::vector<GridXd>& images, const std::vector<CamFile>& cams,
                 const std::vector<DepthMap>& depths, const PairList& pairs, ImageFormat format = ImageFormat::png);

// ---------------------------------------------------------------------------
// Config files

/// Flat key=value lines; blank lines and lines starting with '#' are skipped.
/// Keys mirror command-line flag names without the leading dashes.
std::vector<std::pair<std::string, std::string>> read_config(const fs::path& path);

}  // namespace ramvs
