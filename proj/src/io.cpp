#include "ramvs/io.hpp"

#include <png.h>

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

namespace ramvs {

namespace {

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCategory::io, "cannot open '" + path.string() + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, const std::string& data) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCategory::io, "cannot open '" + path.string() + "' for writing");
  out.write(data.data(), static_cast<std::streamsize>(data.size()));
  out.close();
  if (!out) throw Error(ErrorCategory::io, "write failed for '" + path.string() + "'");
}

std::vector<std::string> split_lines(const std::string& text) {
  std::vector<std::string> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string::npos) end = text.size();
    std::string line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
    start = end + 1;
  }
  if (!lines.empty() && lines.back().empty()) lines.pop_back();
  return lines;
}

std::vector<std::string> tokens(const std::string& line) {
  std::istringstream ss(line);
  std::vector<std::string> out;
  std::string t;
  while (ss >> t) out.push_back(t);
  return out;
}

bool is_blank(const std::string& line) {
  return std::all_of(line.begin(), line.end(), [](unsigned char c) { return std::isspace(c); });
}

std::optional<double> parse_double(const std::string& s) {
  double value = 0.0;
  const char* first = s.data();
  if (!s.empty() && s.front() == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return value;
}

std::optional<long long> parse_int(const std::string& s) {
  long long value = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return value;
}

std::string fmt17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string shortest(float x) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, ptr);
}

Error format_error(const std::string& name, std::size_t line, const std::string& expectation) {
  return Error(ErrorCategory::format, name + ":" + std::to_string(line) + ": expected " + expectation);
}

std::uint32_t byteswap32(std::uint32_t x) {
  return (x >> 24) | ((x >> 8) & 0xff00u) | ((x << 8) & 0xff0000u) | (x << 24);
}

std::uint64_t byteswap64(std::uint64_t x) {
  return (static_cast<std::uint64_t>(byteswap32(static_cast<std::uint32_t>(x))) << 32) |
         byteswap32(static_cast<std::uint32_t>(x >> 32));
}

float load_f32(const char* p, bool little) {
  std::uint32_t bits;
  std::memcpy(&bits, p, 4);
  if (little != (std::endian::native == std::endian::little)) bits = byteswap32(bits);
  return std::bit_cast<float>(bits);
}

void append_f32_le(std::string& out, float f) {
  std::uint32_t bits = std::bit_cast<std::uint32_t>(f);
  if constexpr (std::endian::native != std::endian::little) bits = byteswap32(bits);
  char b[4];
  std::memcpy(b, &bits, 4);
  out.append(b, 4);
}

template <typename T>
void append_le(std::string& out, T value) {
  if constexpr (sizeof(T) == 4) {
    append_f32_le(out, std::bit_cast<float>(value));
  } else {
    static_assert(sizeof(T) == 1);
    out.push_back(static_cast<char>(value));
  }
}

}  // namespace

// ---------------------------------------------------------------------------

CamFile parse_cam(const std::string& text, const std::string& name) {
  const std::vector<std::string> lines = split_lines(text);
  std::size_t i = 0;
  const auto next_nonblank = [&]() {
    while (i < lines.size() && is_blank(lines[i])) ++i;
  };
  const auto expect_word = [&](const std::string& word) {
    next_nonblank();
    if (i >= lines.size() || tokens(lines[i]) != std::vector<std::string>{word}) {
      throw format_error(name, i + 1, "'" + word + "'");
    }
    ++i;
  };
  const auto numbers = [&](std::size_t min_count, std::size_t max_count, const std::string& what) {
    if (i >= lines.size()) throw format_error(name, i + 1, what);
    const auto toks = tokens(lines[i]);
    if (toks.size() < min_count || toks.size() > max_count) throw format_error(name, i + 1, what);
    std::vector<double> out;
    for (const auto& t : toks) {
      const auto v = parse_double(t);
      if (!v) throw format_error(name, i + 1, what);
      out.push_back(*v);
    }
    ++i;
    return out;
  };

  CamFile cf;
  Camera& cam = cf.camera;
  expect_word("extrinsic");
  Eigen::Matrix4d ext;
  for (int r = 0; r < 4; ++r) {
    const auto row = numbers(4, 4, "extrinsic row " + std::to_string(r + 1) + " of 4 numbers");
    for (int c = 0; c < 4; ++c) ext(r, c) = row[c];
  }
  expect_word("intrinsic");
  for (int r = 0; r < 3; ++r) {
    const auto row = numbers(3, 3, "intrinsic row " + std::to_string(r + 1) + " of 3 numbers");
    for (int c = 0; c < 3; ++c) cam.intrinsics(r, c) = row[c];
  }
  next_nonblank();
  const auto depth = numbers(2, 4, "'DEPTH_MIN DEPTH_INTERVAL [NUM_PLANES DEPTH_MAX]'");
  next_nonblank();
  if (i < lines.size()) throw format_error(name, i + 1, "end of file");
  cam.rotation = ext.topLeftCorner<3, 3>();
  cam.translation = ext.block<3, 1>(0, 3);
  cam.depth_min = depth[0];
  cam.depth_interval = depth[1];
  if (depth.size() >= 3) cf.num_planes = depth[2];
  if (depth.size() >= 4) cf.depth_max = depth[3];
  return cf;
}

CamFile read_cam(const fs::path& path) { return parse_cam(read_file(path), path.string()); }

std::string format_cam(const CamFile& cf) {
  const Camera& cam = cf.camera;
  std::string s = "extrinsic\n";
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) s += fmt17(cam.rotation(r, c)) + " ";
    s += fmt17(cam.translation(r)) + "\n";
  }
  s += "0 0 0 1\n\nintrinsic\n";
  for (int r = 0; r < 3; ++r) {
    s += fmt17(cam.intrinsics(r, 0)) + " " + fmt17(cam.intrinsics(r, 1)) + " " + fmt17(cam.intrinsics(r, 2)) + "\n";
  }
  s += "\n" + fmt17(cam.depth_min) + " " + fmt17(cam.depth_interval);
  if (cf.num_planes) s += " " + fmt17(*cf.num_planes);
  if (cf.num_planes && cf.depth_max) s += " " + fmt17(*cf.depth_max);
  s += "\n";
  return s;
}

void write_cam(const fs::path& path, const CamFile& cam) { write_file(path, format_cam(cam)); }

// ---------------------------------------------------------------------------

PairList read_pair(const fs::path& path) {
  const std::string name = path.string();
  const std::vector<std::string> lines = split_lines(read_file(path));
  std::size_t i = 0;
  const auto next = [&](const std::string& what) {
    while (i < lines.size() && is_blank(lines[i])) ++i;
    if (i >= lines.size()) throw format_error(name, i + 1, what);
    return tokens(lines[i++]);
  };
  const auto count_line = next("view count");
  const auto n = count_line.size() == 1 ? parse_int(count_line[0]) : std::nullopt;
  if (!n || *n < 0) throw format_error(name, i, "view count");
  PairList pairs(static_cast<std::size_t>(*n));
  std::vector<bool> seen(pairs.size(), false);
  for (long long k = 0; k < *n; ++k) {
    const auto idx_line = next("reference view index");
    const auto ref = idx_line.size() == 1 ? parse_int(idx_line[0]) : std::nullopt;
    if (!ref || *ref < 0 || *ref >= *n || seen[*ref]) throw format_error(name, i, "unique reference view index in [0, " + std::to_string(*n) + ")");
    seen[*ref] = true;
    const auto list = next("'K idx score ...'");
    const auto cnt = list.empty() ? std::nullopt : parse_int(list[0]);
    if (!cnt || *cnt < 0 || list.size() != static_cast<std::size_t>(1 + 2 * *cnt)) {
      throw format_error(name, i, "'K idx0 score0 ...' with K pairs");
    }
    for (long long j = 0; j < *cnt; ++j) {
      const auto v = parse_int(list[1 + 2 * j]);
      const auto s = parse_double(list[2 + 2 * j]);
      if (!v || !s || *v < 0 || *v >= *n) throw format_error(name, i, "source index in range and numeric score");
      pairs[*ref].push_back({static_cast<int>(*v), *s});
    }
  }
  return pairs;
}

void write_pair(const fs::path& path, const PairList& pairs) {
  std::string s = std::to_string(pairs.size()) + "\n";
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    s += std::to_string(i) + "\n" + std::to_string(pairs[i].size());
    for (const PairEntry& e : pairs[i]) s += " " + std::to_string(e.view) + " " + fmt17(e.score);
    s += "\n";
  }
  write_file(path, s);
}

// ---------------------------------------------------------------------------

std::vector<GridXd> read_pfm(const fs::path& path) {
  const std::string name = path.string();
  const std::string data = read_file(path);
  std::size_t pos = 0;
  std::size_t line_no = 0;
  const auto header_line = [&](const std::string& what) {
    const std::size_t end = data.find('\n', pos);
    if (end == std::string::npos) throw format_error(name, line_no + 1, what);
    std::string line = data.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    return line;
  };
  const auto magic = tokens(header_line("'Pf' or 'PF'"));
  int channels = 0;
  if (magic.size() == 1 && magic[0] == "Pf") channels = 1;
  if (magic.size() == 1 && magic[0] == "PF") channels = 3;
  if (channels == 0) throw format_error(name, 1, "'Pf' or 'PF'");
  const auto dims = tokens(header_line("'WIDTH HEIGHT'"));
  const auto w = dims.size() == 2 ? parse_int(dims[0]) : std::nullopt;
  const auto h = dims.size() == 2 ? parse_int(dims[1]) : std::nullopt;
  if (!w || !h || *w <= 0 || *h <= 0) throw format_error(name, 2, "'WIDTH HEIGHT' with positive integers");
  const auto scale_tok = tokens(header_line("scale"));
  const auto scale = scale_tok.size() == 1 ? parse_double(scale_tok[0]) : std::nullopt;
  if (!scale || *scale == 0.0) throw format_error(name, 3, "non-zero scale");
  const bool little = *scale < 0.0;
  const std::size_t need = static_cast<std::size_t>(*w) * *h * channels * 4;
  if (data.size() - pos < need) {
    throw Error(ErrorCategory::format, name + ": truncated payload (" + std::to_string(data.size() - pos) + " of " +
                                           std::to_string(need) + " bytes)");
  }
  std::vector<GridXd> out(channels, GridXd(*h, *w));
  const char* p = data.data() + pos;
  for (long long row = *h - 1; row >= 0; --row) {
    for (long long u = 0; u < *w; ++u) {
      for (int c = 0; c < channels; ++c, p += 4) out[c](row, u) = load_f32(p, little);
    }
  }
  return out;
}

DepthMap read_pfm_depth(const fs::path& path) {
  auto channels = read_pfm(path);
  if (channels.size() != 1) throw Error(ErrorCategory::format, path.string() + ": depth maps must have one channel");
  return DepthMap(std::move(channels[0]));
}

void write_pfm(const fs::path& path, const GridXd& values) {
  const auto h = values.rows();
  const auto w = values.cols();
  std::string s = "Pf\n" + std::to_string(w) + " " + std::to_string(h) + "\n-1\n";
  s.reserve(s.size() + static_cast<std::size_t>(w * h * 4));
  for (auto v = h - 1; v >= 0; --v) {
    for (Eigen::Index u = 0; u < w; ++u) append_f32_le(s, static_cast<float>(values(v, u)));
  }
  write_file(path, s);
}

void write_pfm(const fs::path& path, const DepthMap& depth) {
  GridXd values = depth.depth;
  for (int v = 0; v < depth.height(); ++v) {
    for (int u = 0; u < depth.width(); ++u) {
      if (!depth.is_valid(v, u)) values(v, u) = std::numeric_limits<double>::quiet_NaN();
    }
  }
  write_pfm(path, values);
}

GridXd read_image(const fs::path& path) {
  const std::string ext = path.extension().string();
  if (ext == ".pfm") {
    const auto ch = read_pfm(path);
    if (ch.size() == 1) return ch[0];
    return (ch[0] + ch[1] + ch[2]) / 3.0;
  }
  if (ext != ".png") throw Error(ErrorCategory::format, path.string() + ": unsupported image format (png or pfm)");
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.string().c_str())) {
    throw Error(ErrorCategory::format, path.string() + ": " + image.message);
  }
  image.format = PNG_FORMAT_GRAY;
  std::vector<png_byte> buffer(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, buffer.data(), 0, nullptr)) {
    const std::string msg = image.message;
    png_image_free(&image);
    throw Error(ErrorCategory::format, path.string() + ": " + msg);
  }
  const int h = static_cast<int>(image.height);
  const int w = static_cast<int>(image.width);
  GridXd out(h, w);
  for (int v = 0; v < h; ++v) {
    for (int u = 0; u < w; ++u) out(v, u) = buffer[static_cast<std::size_t>(v) * w + u] / 255.0;
  }
  return out;
}

void write_png(const fs::path& path, const GridXd& img) {
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(img.cols());
  image.height = static_cast<png_uint_32>(img.rows());
  image.format = PNG_FORMAT_GRAY;
  std::vector<png_byte> buffer(static_cast<std::size_t>(img.size()));
  for (Eigen::Index v = 0; v < img.rows(); ++v) {
    for (Eigen::Index u = 0; u < img.cols(); ++u) {
      buffer[v * img.cols() + u] = static_cast<png_byte>(std::lround(std::clamp(img(v, u), 0.0, 1.0) * 255.0));
    }
  }
  if (!png_image_write_to_file(&image, path.string().c_str(), 0, buffer.data(), 0, nullptr)) {
    throw Error(ErrorCategory::io, path.string() + ": " + image.message);
  }
}

// ---------------------------------------------------------------------------

namespace {

std::string ply_header(PlyFormat format, std::size_t vertices, bool colors, bool normals, std::size_t faces) {
  std::string s = "ply\nformat ";
  s += format == PlyFormat::ascii ? "ascii 1.0\n" : "binary_little_endian 1.0\n";
  s += "comment generated by ramvs\n";
  s += "element vertex " + std::to_string(vertices) + "\n";
  s += "property float x\nproperty float y\nproperty float z\n";
  if (normals) s += "property float nx\nproperty float ny\nproperty float nz\n";
  if (colors) s += "property uchar red\nproperty uchar green\nproperty uchar blue\n";
  s += "element face " + std::to_string(faces) + "\n";
  s += "property list uchar int vertex_indices\nend_header\n";
  return s;
}

std::string ply_body(PlyFormat format, const std::vector<Vec3>& pts, const std::vector<Color>* colors,
                     const std::vector<Vec3>* normals, const std::vector<std::array<int, 3>>& faces) {
  std::string s;
  const bool ascii = format == PlyFormat::ascii;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    std::vector<float> fs = {float(pts[i].x()), float(pts[i].y()), float(pts[i].z())};
    if (normals) fs.insert(fs.end(), {float((*normals)[i].x()), float((*normals)[i].y()), float((*normals)[i].z())});
    for (std::size_t k = 0; k < fs.size(); ++k) {
      if (ascii) {
        s += (k ? " " : "") + shortest(fs[k]);
      } else {
        append_le(s, fs[k]);
      }
    }
    if (colors) {
      for (std::uint8_t c : (*colors)[i]) {
        if (ascii) {
          s += " " + std::to_string(c);
        } else {
          append_le(s, c);
        }
      }
    }
    if (ascii) s += "\n";
  }
  for (const auto& f : faces) {
    if (ascii) {
      s += "3 " + std::to_string(f[0]) + " " + std::to_string(f[1]) + " " + std::to_string(f[2]) + "\n";
    } else {
      append_le(s, std::uint8_t{3});
      for (int idx : f) append_le(s, std::bit_cast<std::uint32_t>(static_cast<std::int32_t>(idx)));
    }
  }
  return s;
}

}  // namespace

void write_ply(const fs::path& path, const PointCloud& cloud, PlyFormat format) {
  if (cloud.empty()) throw Error(ErrorCategory::empty_input, path.string() + ": refusing to write an empty point cloud");
  const bool colored = !cloud.colors.empty();
  if (colored && cloud.colors.size() != cloud.size()) throw Error(ErrorCategory::domain, "color count differs from point count");
  write_file(path, ply_header(format, cloud.size(), colored, false, 0) +
                       ply_body(format, cloud.points, colored ? &cloud.colors : nullptr, nullptr, {}));
}

void write_ply(const fs::path& path, const TriangleMesh& mesh, PlyFormat format) {
  if (mesh.vertices.empty()) throw Error(ErrorCategory::empty_input, path.string() + ": refusing to write an empty mesh");
  const bool with_normals = !mesh.normals.empty();
  if (with_normals && mesh.normals.size() != mesh.vertices.size()) throw Error(ErrorCategory::domain, "normal count differs from vertex count");
  write_file(path, ply_header(format, mesh.vertices.size(), false, with_normals, mesh.triangles.size()) +
                       ply_body(format, mesh.vertices, nullptr, with_normals ? &mesh.normals : nullptr, mesh.triangles));
}

namespace {

struct PlyProperty {
  std::string name;
  std::string type;
  bool is_list = false;
  std::string count_type;
};

struct PlyElement {
  std::string name;
  std::size_t count = 0;
  std::vector<PlyProperty> props;
};

int type_size(const std::string& t) {
  if (t == "char" || t == "uchar" || t == "int8" || t == "uint8") return 1;
  if (t == "short" || t == "ushort" || t == "int16" || t == "uint16") return 2;
  if (t == "int" || t == "uint" || t == "int32" || t == "uint32" || t == "float" || t == "float32") return 4;
  if (t == "double" || t == "float64") return 8;
  return 0;
}

double decode_binary(const char* p, const std::string& t) {
  if (t == "char" || t == "int8") return static_cast<std::int8_t>(*p);
  if (t == "uchar" || t == "uint8") return static_cast<std::uint8_t>(*p);
  if (t == "short" || t == "int16" || t == "ushort" || t == "uint16") {
    std::uint16_t bits;
    std::memcpy(&bits, p, 2);
    if constexpr (std::endian::native != std::endian::little) bits = static_cast<std::uint16_t>((bits >> 8) | (bits << 8));
    return (t == "short" || t == "int16") ? double(static_cast<std::int16_t>(bits)) : double(bits);
  }
  if (t == "float" || t == "float32") return load_f32(p, true);
  std::uint32_t b32;
  if (type_size(t) == 4) {
    std::memcpy(&b32, p, 4);
    if constexpr (std::endian::native != std::endian::little) b32 = byteswap32(b32);
    return (t == "int" || t == "int32") ? double(static_cast<std::int32_t>(b32)) : double(b32);
  }
  std::uint64_t b64;
  std::memcpy(&b64, p, 8);
  if constexpr (std::endian::native != std::endian::little) b64 = byteswap64(b64);
  return std::bit_cast<double>(b64);
}

}  // namespace

PlyData read_ply(const fs::path& path) {
  const std::string name = path.string();
  const std::string data = read_file(path);
  std::size_t pos = 0;
  std::size_t line_no = 0;
  const auto next_line = [&]() -> std::string {
    const std::size_t end = data.find('\n', pos);
    if (end == std::string::npos) throw format_error(name, line_no + 1, "'end_header'");
    std::string line = data.substr(pos, end - pos);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    pos = end + 1;
    ++line_no;
    return line;
  };
  if (next_line() != "ply") throw format_error(name, 1, "'ply'");
  bool binary = false;
  std::vector<PlyElement> elements;
  for (;;) {
    const std::string line = next_line();
    const auto t = tokens(line);
    if (t.empty() || t[0] == "comment" || t[0] == "obj_info") continue;
    if (t[0] == "end_header") break;
    if (t[0] == "format") {
      if (t.size() != 3) throw format_error(name, line_no, "'format <type> 1.0'");
      if (t[1] == "binary_little_endian") {
        binary = true;
      } else if (t[1] != "ascii") {
        throw format_error(name, line_no, "ascii or binary_little_endian format");
      }
    } else if (t[0] == "element") {
      const auto n = t.size() == 3 ? parse_int(t[2]) : std::nullopt;
      if (!n || *n < 0) throw format_error(name, line_no, "'element <name> <count>'");
      elements.push_back({t[1], static_cast<std::size_t>(*n), {}});
    } else if (t[0] == "property") {
      if (elements.empty()) throw format_error(name, line_no, "'element' before 'property'");
      if (t.size() == 5 && t[1] == "list" && type_size(t[2]) && type_size(t[3])) {
        elements.back().props.push_back({t[4], t[3], true, t[2]});
      } else if (t.size() == 3 && type_size(t[1])) {
        elements.back().props.push_back({t[2], t[1], false, ""});
      } else {
        throw format_error(name, line_no, "'property <type> <name>' or 'property list <type> <type> <name>'");
      }
    } else {
      throw format_error(name, line_no, "header keyword");
    }
  }

  PlyData out;
  std::istringstream ascii_in;
  if (!binary) ascii_in.str(data.substr(pos));
  const auto read_value = [&](const std::string& type) -> double {
    if (binary) {
      const int size = type_size(type);
      if (pos + size > data.size()) throw Error(ErrorCategory::format, name + ": truncated binary payload");
      const double v = decode_binary(data.data() + pos, type);
      pos += size;
      return v;
    }
    std::string tok;
    if (!(ascii_in >> tok)) throw Error(ErrorCategory::format, name + ": truncated ascii payload");
    const auto v = parse_double(tok);
    if (!v) throw Error(ErrorCategory::format, name + ": non-numeric value '" + tok + "'");
    if (type == "float" || type == "float32") return double(static_cast<float>(*v));
    return *v;
  };

  for (const PlyElement& el : elements) {
    const bool is_vertex = el.name == "vertex";
    const bool is_face = el.name == "face";
    for (std::size_t i = 0; i < el.count; ++i) {
      Vec3 p = Vec3::Zero(), n = Vec3::Zero();
      Color c{0, 0, 0};
      bool has_c = false, has_n = false;
      for (const PlyProperty& prop : el.props) {
        if (prop.is_list) {
          const auto cnt = static_cast<long long>(read_value(prop.count_type));
          std::vector<int> idx;
          for (long long k = 0; k < cnt; ++k) idx.push_back(static_cast<int>(read_value(prop.type)));
          if (is_face && (prop.name == "vertex_indices" || prop.name == "vertex_index")) {
            for (std::size_t k = 2; k < idx.size(); ++k) out.faces.push_back({idx[0], idx[k - 1], idx[k]});
          }
          continue;
        }
        const double v = read_value(prop.type);
        if (!is_vertex) continue;
        if (prop.name == "x") p.x() = v;
        else if (prop.name == "y") p.y() = v;
        else if (prop.name == "z") p.z() = v;
        else if (prop.name == "nx") { n.x() = v; has_n = true; }
        else if (prop.name == "ny") { n.y() = v; has_n = true; }
        else if (prop.name == "nz") { n.z() = v; has_n = true; }
        else if (prop.name == "red") { c[0] = static_cast<std::uint8_t>(v); has_c = true; }
        else if (prop.name == "green") { c[1] = static_cast<std::uint8_t>(v); has_c = true; }
        else if (prop.name == "blue") { c[2] = static_cast<std::uint8_t>(v); has_c = true; }
      }
      if (is_vertex) {
        out.points.push_back(p);
        if (has_c) out.colors.push_back(c);
        if (has_n) out.normals.push_back(n);
      }
    }
  }
  for (const auto& f : out.faces) {
    for (int idx : f) {
      if (idx < 0 || static_cast<std::size_t>(idx) >= out.points.size()) {
        throw Error(ErrorCategory::format, name + ": face index out of range");
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

void write_volume(const fs::path& path, const Volume<double>& values, double scale, const ValidityVolume* valid) {
  if (valid && !valid->same_shape(values)) throw Error(ErrorCategory::domain, "validity volume differs in shape");
  std::string s = "RAMVSVOL 1\ndims " + std::to_string(values.depth()) + " " + std::to_string(values.height()) + " " +
                  std::to_string(values.width()) + "\nscale " + fmt17(scale) + "\nendian little\nend\n";
  const auto vals = values.data();
  for (std::size_t i = 0; i < vals.size(); ++i) {
    const bool ok = !valid || valid->data()[i] != 0;
    append_f32_le(s, ok ? static_cast<float>(vals[i]) : std::numeric_limits<float>::quiet_NaN());
  }
  write_file(path, s);
}

VolumeFile read_volume(const fs::path& path) {
  const std::string name = path.string();
  const std::string data = read_file(path);
  std::size_t pos = 0;
  std::size_t line_no = 0;
  const auto next = [&](const std::string& what) {
    const std::size_t end = data.find('\n', pos);
    if (end == std::string::npos) throw format_error(name, line_no + 1, what);
    auto t = tokens(data.substr(pos, end - pos));
    pos = end + 1;
    ++line_no;
    return t;
  };
  if (next("'RAMVSVOL 1'") != std::vector<std::string>{"RAMVSVOL", "1"}) throw format_error(name, 1, "'RAMVSVOL 1'");
  const auto dims = next("'dims D H W'");
  std::optional<long long> d, h, w;
  if (dims.size() == 4 && dims[0] == "dims") {
    d = parse_int(dims[1]);
    h = parse_int(dims[2]);
    w = parse_int(dims[3]);
  }
  if (!d || !h || !w || *d < 0 || *h < 0 || *w < 0) throw format_error(name, 2, "'dims D H W'");
  const auto sc = next("'scale s'");
  const auto scale = sc.size() == 2 && sc[0] == "scale" ? parse_double(sc[1]) : std::nullopt;
  if (!scale) throw format_error(name, 3, "'scale s'");
  if (next("'endian little'") != std::vector<std::string>{"endian", "little"}) throw format_error(name, 4, "'endian little'");
  if (next("'end'") != std::vector<std::string>{"end"}) throw format_error(name, 5, "'end'");
  VolumeFile out{Volume<double>(*d, *h, *w), ValidityVolume(*d, *h, *w, 1), *scale};
  const std::size_t n = out.values.size();
  if (data.size() - pos < n * 4) throw Error(ErrorCategory::format, name + ": truncated payload");
  for (std::size_t i = 0; i < n; ++i) {
    const float f = load_f32(data.data() + pos + 4 * i, true);
    out.values.data()[i] = f;
    if (std::isnan(f)) out.valid.data()[i] = 0;
  }
  return out;
}

// ---------------------------------------------------------------------------

bool SceneBundle::has_gt() const {
  return !depths.empty() && std::all_of(depths.begin(), depths.end(), [](const auto& d) { return d.has_value(); });
}

std::string view_stem(int view) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%08d", view);
  return buf;
}

SceneBundle load_scene(const fs::path& dir) {
  SceneBundle b;
  b.root = dir;
  if (!fs::is_directory(dir)) throw Error(ErrorCategory::io, "'" + dir.string() + "' is not a directory");
  for (const char* sub : {"images", "cams"}) {
    if (!fs::is_directory(dir / sub)) throw Error(ErrorCategory::io, "'" + (dir / sub).string() + "' is missing");
  }
  b.pairs = read_pair(dir / "pair.txt");
  const int n = static_cast<int>(b.pairs.size());
  for (int i = 0; i < n; ++i) {
    const std::string stem = view_stem(i);
    fs::path image = dir / "images" / (stem + ".png");
    if (!fs::exists(image)) image = dir / "images" / (stem + ".pfm");
    if (!fs::exists(image)) throw Error(ErrorCategory::io, "missing image for view " + std::to_string(i) + " in '" + (dir / "images").string() + "'");
    b.images.push_back(image);
    const fs::path cam_path = dir / "cams" / (stem + "_cam.txt");
    if (!fs::exists(cam_path)) throw Error(ErrorCategory::io, "missing camera file '" + cam_path.string() + "'");
    CamFile cf = read_cam(cam_path);
    try {
      cf.camera.validate();
    } catch (const Error& e) {
      throw Error(e.category(), cam_path.string() + ": " + e.what());
    }
    b.cams.push_back(std::move(cf));
    const fs::path depth_path = dir / "depths" / (stem + ".pfm");
    b.depths.push_back(fs::exists(depth_path) ? std::optional<fs::path>(depth_path) : std::nullopt);
  }
  return b;
}

void write_scene(const fs::path& dir, const std::vector<GridXd>& images, const std::vector<CamFile>& cams,
                 const std::vector<DepthMap>& depths, const PairList& pairs, ImageFormat format) {
  if (images.size() != cams.size() || pairs.size() != cams.size() || (!depths.empty() && depths.size() != cams.size())) {
    throw Error(ErrorCategory::domain, "write_scene: per-view inputs differ in count");
  }
  std::error_code ec;
  for (const char* sub : {"images", "cams", "depths"}) {
    if (std::string(sub) == "depths" && depths.empty()) continue;
    fs::create_directories(dir / sub, ec);
    if (ec) throw Error(ErrorCategory::io, "cannot create '" + (dir / sub).string() + "': " + ec.message());
  }
  for (std::size_t i = 0; i < cams.size(); ++i) {
    const std::string stem = view_stem(static_cast<int>(i));
    if (format == ImageFormat::png) {
      write_png(dir / "images" / (stem + ".png"), images[i]);
    } else {
      write_pfm(dir / "images" / (stem + ".pfm"), images[i]);
    }
    write_cam(dir / "cams" / (stem + "_cam.txt"), cams[i]);
    if (!depths.empty()) write_pfm(dir / "depths" / (stem + ".pfm"), depths[i]);
  }
  write_pair(dir / "pair.txt", pairs);
}

// ---------------------------------------------------------------------------

std::vector<std::pair<std::string, std::string>> read_config(const fs::path& path) {
  const std::string name = path.string();
  const auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t");
    if (b == std::string::npos) return std::string();
    const auto e = s.find_last_not_of(" \t");
    return s.substr(b, e - b + 1);
  };
  std::vector<std::pair<std::string, std::string>> out;
  const auto lines = split_lines(read_file(path));
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::string line = trim(lines[i]);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw format_error(name, i + 1, "'key=value'");
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw format_error(name, i + 1, "non-empty key");
    out.emplace_back(key, trim(line.substr(eq + 1)));
  }
  return out;
}

}  // namespace ramvs
