#include "gf/splat_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

namespace gf {
namespace {

std::vector<std::string> splat_property_names(int n_sh) {
  std::vector<std::string> names = {"x",    "y",    "z",    "opacity", "tu_x",  "tu_y", "tu_z",
                                    "tv_x", "tv_y", "tv_z", "log_su",  "log_sv"};
  for (int i = 0; i < n_sh; ++i) {
    names.push_back("sh_" + std::to_string(i) + "_r");
    names.push_back("sh_" + std::to_string(i) + "_g");
    names.push_back("sh_" + std::to_string(i) + "_b");
  }
  return names;
}

std::vector<float> disk_to_row(const GaussianDisk& d, int n_sh) {
  std::vector<float> row;
  row.reserve(12 + 3 * n_sh);
  auto push3 = [&](const Vec3& v) {
    row.push_back(static_cast<float>(v.x()));
    row.push_back(static_cast<float>(v.y()));
    row.push_back(static_cast<float>(v.z()));
  };
  push3(d.position);
  row.push_back(static_cast<float>(d.opacity));
  push3(d.tangent_u);
  push3(d.tangent_v);
  row.push_back(static_cast<float>(d.log_scale_u));
  row.push_back(static_cast<float>(d.log_scale_v));
  for (int i = 0; i < n_sh; ++i) {
    const Vec3 c = i < static_cast<int>(d.sh.size()) ? d.sh[i] : Vec3::Zero();
    push3(c);
  }
  return row;
}

struct PlyHeader {
  bool binary = false;
  size_t n_vertices = 0;
  std::vector<std::string> properties;  // in file order, all float assumed for splats
  std::vector<std::string> types;
  size_t data_start = 0;
};

PlyHeader parse_header(const std::string& bytes, const std::string& path) {
  PlyHeader h;
  std::istringstream in(bytes);
  std::string line;
  size_t consumed = 0;
  auto next_line = [&]() -> bool {
    if (!std::getline(in, line)) return false;
    consumed += line.size() + 1;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return true;
  };
  require(next_line() && line == "ply", ErrCode::MalformedFile, "not a PLY file: " + path);
  bool in_vertex = false;
  while (next_line()) {
    std::istringstream ls(line);
    std::string tok;
    ls >> tok;
    if (tok == "format") {
      std::string fmt;
      ls >> fmt;
      if (fmt == "ascii")
        h.binary = false;
      else if (fmt == "binary_little_endian")
        h.binary = true;
      else
        fail(ErrCode::MalformedFile, "unsupported PLY format '" + fmt + "' in " + path);
    } else if (tok == "element") {
      std::string name;
      size_t count;
      ls >> name >> count;
      in_vertex = (name == "vertex");
      if (in_vertex) h.n_vertices = count;
    } else if (tok == "property" && in_vertex) {
      std::string type, name;
      ls >> type >> name;
      h.properties.push_back(name);
      h.types.push_back(type);
    } else if (tok == "end_header") {
      h.data_start = consumed;
      return h;
    }
  }
  fail(ErrCode::MalformedFile, "PLY header without end_header in " + path);
}

size_t type_size(const std::string& t) {
  if (t == "float" || t == "float32" || t == "int" || t == "int32" || t == "uint" || t == "uint32")
    return 4;
  if (t == "double" || t == "float64") return 8;
  if (t == "uchar" || t == "uint8" || t == "char" || t == "int8") return 1;
  if (t == "short" || t == "ushort" || t == "int16" || t == "uint16") return 2;
  fail(ErrCode::MalformedFile, "unsupported PLY property type '" + t + "'");
}

double read_scalar(const char* p, const std::string& t) {
  if (t == "float" || t == "float32") {
    float v;
    std::memcpy(&v, p, 4);
    return v;
  }
  if (t == "double" || t == "float64") {
    double v;
    std::memcpy(&v, p, 8);
    return v;
  }
  if (t == "uchar" || t == "uint8") return static_cast<double>(*reinterpret_cast<const uint8_t*>(p));
  if (t == "char" || t == "int8") return static_cast<double>(*reinterpret_cast<const int8_t*>(p));
  if (t == "int" || t == "int32") {
    int32_t v;
    std::memcpy(&v, p, 4);
    return v;
  }
  if (t == "uint" || t == "uint32") {
    uint32_t v;
    std::memcpy(&v, p, 4);
    return v;
  }
  if (t == "short" || t == "int16") {
    int16_t v;
    std::memcpy(&v, p, 2);
    return v;
  }
  uint16_t v;
  std::memcpy(&v, p, 2);
  return v;
}

std::string slurp(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  require(f.good(), ErrCode::MalformedFile, "cannot open: " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

/// Reads all vertex rows into name-indexed columns of doubles.
std::vector<std::vector<double>> read_rows(const PlyHeader& h, const std::string& bytes,
                                           const std::string& path) {
  std::vector<std::vector<double>> rows(h.n_vertices, std::vector<double>(h.properties.size()));
  if (h.binary) {
    size_t row_size = 0;
    for (const auto& t : h.types) row_size += type_size(t);
    require(bytes.size() - h.data_start >= h.n_vertices * row_size, ErrCode::MalformedFile,
            "truncated PLY payload in " + path);
    const char* p = bytes.data() + h.data_start;
    for (size_t r = 0; r < h.n_vertices; ++r)
      for (size_t c = 0; c < h.properties.size(); ++c) {
        rows[r][c] = read_scalar(p, h.types[c]);
        p += type_size(h.types[c]);
      }
  } else {
    std::istringstream in(bytes.substr(h.data_start));
    for (size_t r = 0; r < h.n_vertices; ++r)
      for (size_t c = 0; c < h.properties.size(); ++c)
        require(static_cast<bool>(in >> rows[r][c]), ErrCode::MalformedFile,
                "truncated ASCII PLY payload in " + path);
  }
  return rows;
}

}  // namespace

void write_splat_ply(const std::string& path, const SplatCloud& cloud, bool binary) {
  int n_sh = 1;
  for (const auto& d : cloud.disks) n_sh = std::max<int>(n_sh, static_cast<int>(d.sh.size()));
  const auto names = splat_property_names(n_sh);

  std::ofstream f(path, std::ios::binary);
  require(f.good(), ErrCode::MalformedFile, "cannot open for write: " + path);
  f.precision(9);  // float32 round-trip precision for the ascii variant
  f << "ply\nformat " << (binary ? "binary_little_endian" : "ascii") << " 1.0\n";
  f << "element vertex " << cloud.size() << "\n";
  for (const auto& n : names) f << "property float " << n << "\n";
  f << "end_header\n";
  for (const auto& d : cloud.disks) {
    const auto row = disk_to_row(d, n_sh);
    if (binary) {
      f.write(reinterpret_cast<const char*>(row.data()),
              static_cast<std::streamsize>(row.size() * sizeof(float)));
    } else {
      for (size_t i = 0; i < row.size(); ++i) f << (i ? " " : "") << row[i];
      f << "\n";
    }
  }
}

SplatCloud read_splat_ply(const std::string& path) {
  const std::string bytes = slurp(path);
  const PlyHeader h = parse_header(bytes, path);
  auto index_of = [&](const std::string& name) -> int {
    for (size_t i = 0; i < h.properties.size(); ++i)
      if (h.properties[i] == name) return static_cast<int>(i);
    return -1;
  };
  const auto base = splat_property_names(1);
  std::vector<int> idx;
  for (const auto& n : base) {
    const int i = index_of(n);
    require(i >= 0, ErrCode::MalformedFile, "splat PLY missing property '" + n + "' in " + path);
    idx.push_back(i);
  }
  int n_sh = 1;
  while (index_of("sh_" + std::to_string(n_sh) + "_r") >= 0) {
    idx.push_back(index_of("sh_" + std::to_string(n_sh) + "_r"));
    idx.push_back(index_of("sh_" + std::to_string(n_sh) + "_g"));
    idx.push_back(index_of("sh_" + std::to_string(n_sh) + "_b"));
    require(idx[idx.size() - 2] >= 0 && idx.back() >= 0, ErrCode::MalformedFile,
            "incomplete SH band in " + path);
    ++n_sh;
  }

  const auto rows = read_rows(h, bytes, path);
  SplatCloud cloud;
  for (const auto& row : rows) {
    GaussianDisk d;
    d.position = Vec3(row[idx[0]], row[idx[1]], row[idx[2]]);
    d.opacity = row[idx[3]];
    d.tangent_u = Vec3(row[idx[4]], row[idx[5]], row[idx[6]]);
    d.tangent_v = Vec3(row[idx[7]], row[idx[8]], row[idx[9]]);
    d.log_scale_u = row[idx[10]];
    d.log_scale_v = row[idx[11]];
    d.sh.clear();
    for (int i = 0; i < n_sh; ++i)
      d.sh.push_back(Vec3(row[idx[12 + 3 * i]], row[idx[13 + 3 * i]], row[idx[14 + 3 * i]]));
    cloud.add_disk(d);
  }
  return cloud;
}

void write_points_ply(const std::string& path, const std::vector<ColoredPoint>& points) {
  std::ofstream f(path, std::ios::binary);
  require(f.good(), ErrCode::MalformedFile, "cannot open for write: " + path);
  f << "ply\nformat binary_little_endian 1.0\n";
  f << "element vertex " << points.size() << "\n";
  f << "property float x\nproperty float y\nproperty float z\n";
  f << "property uchar red\nproperty uchar green\nproperty uchar blue\n";
  f << "end_header\n";
  for (const auto& p : points) {
    float xyz[3] = {static_cast<float>(p.position.x()), static_cast<float>(p.position.y()),
                    static_cast<float>(p.position.z())};
    uint8_t rgb[3];
    for (int c = 0; c < 3; ++c)
      rgb[c] = static_cast<uint8_t>(std::lround(std::clamp(p.color[c], 0.0, 1.0) * 255.0));
    f.write(reinterpret_cast<const char*>(xyz), 12);
    f.write(reinterpret_cast<const char*>(rgb), 3);
  }
}

std::vector<ColoredPoint> read_points_ply(const std::string& path) {
  const std::string bytes = slurp(path);
  const PlyHeader h = parse_header(bytes, path);
  auto index_of = [&](const std::string& name) -> int {
    for (size_t i = 0; i < h.properties.size(); ++i)
      if (h.properties[i] == name) return static_cast<int>(i);
    return -1;
  };
  const int ix = index_of("x"), iy = index_of("y"), iz = index_of("z");
  const int ir = index_of("red"), ig = index_of("green"), ib = index_of("blue");
  require(ix >= 0 && iy >= 0 && iz >= 0, ErrCode::MalformedFile, "points PLY missing x/y/z");
  const auto rows = read_rows(h, bytes, path);
  std::vector<ColoredPoint> out;
  for (const auto& row : rows) {
    ColoredPoint p;
    p.position = Vec3(row[ix], row[iy], row[iz]);
    if (ir >= 0 && ig >= 0 && ib >= 0)
      p.color = Vec3(row[ir] / 255.0, row[ig] / 255.0, row[ib] / 255.0);
    else
      p.color = Vec3(0.5, 0.5, 0.5);
    out.push_back(p);
  }
  return out;
}

}  // namespace gf
