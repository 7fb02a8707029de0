#include "bdnet/stl.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <map>
#include <set>
#include <stdexcept>

namespace bdnet {

namespace {

using Vec3d = std::array<double, 3>;

Vec3d to_d(const Vec3f& v) { return {v[0], v[1], v[2]}; }

Vec3d sub(const Vec3d& a, const Vec3d& b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }

Vec3d cross(const Vec3d& a, const Vec3d& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}

double dot(const Vec3d& a, const Vec3d& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }

Vec3f vf(double x, double y, double z) { return {static_cast<float>(x), static_cast<float>(y), static_cast<float>(z)}; }

class MeshBuilder {
 public:
  void add(const Vec3f& a, const Vec3f& b, const Vec3f& c, const Vec3d& outward) {
    StlTriangle t{{}, {a, b, c}};
    const Vec3d n = cross(sub(to_d(b), to_d(a)), sub(to_d(c), to_d(a)));
    if (dot(n, outward) < 0.0) std::swap(t.vertices[1], t.vertices[2]);
    t.normal = vf(outward[0], outward[1], outward[2]);
    mesh.triangles.push_back(t);
  }

  void quad(const Vec3f& a, const Vec3f& b, const Vec3f& c, const Vec3f& d, const Vec3d& outward) {
    add(a, b, c, outward);
    add(a, c, d, outward);
  }

  // Vertical wall between two corner columns; `left`/`right` are the split
  // heights on each column, ascending and sharing the first and last value.
  void wall(double x0, double y0, const std::vector<double>& left, double x1, double y1,
            const std::vector<double>& right, const Vec3d& outward) {
    std::size_t i = 0;
    std::size_t j = 0;
    while (i + 1 < left.size() || j + 1 < right.size()) {
      const bool step_left = j + 1 >= right.size() || (i + 1 < left.size() && left[i + 1] <= right[j + 1]);
      if (step_left) {
        add(vf(x0, y0, left[i]), vf(x1, y1, right[j]), vf(x0, y0, left[i + 1]), outward);
        ++i;
      } else {
        add(vf(x0, y0, left[i]), vf(x1, y1, right[j]), vf(x1, y1, right[j + 1]), outward);
        ++j;
      }
    }
  }

  StlMesh mesh;
};

void put_u32(std::string& out, std::uint32_t v) {
  for (int k = 0; k < 4; ++k) out.push_back(static_cast<char>((v >> (8 * k)) & 0xffu));
}

void put_f32(std::string& out, float f) { put_u32(out, std::bit_cast<std::uint32_t>(f)); }

std::uint32_t get_u32(std::string_view s, std::size_t pos) {
  std::uint32_t v = 0;
  for (int k = 0; k < 4; ++k) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(s[pos + k])) << (8 * k);
  return v;
}

float get_f32(std::string_view s, std::size_t pos) { return std::bit_cast<float>(get_u32(s, pos)); }

constexpr std::size_t kHeaderBytes = 80;
constexpr std::size_t kTriangleBytes = 50;

}  // namespace

StlMesh heightfield_mesh(const Matrix& thickness, double pitch, double h_base) {
  if (thickness.rows == 0 || thickness.cols == 0) throw std::invalid_argument("cannot export an empty thickness map");
  if (thickness.values.size() != thickness.rows * thickness.cols)
    throw std::invalid_argument("thickness map size does not match its shape");
  if (!(pitch > 0.0) || !std::isfinite(pitch)) throw std::invalid_argument("feature pitch must be positive");
  if (!(h_base > 0.0)) throw std::invalid_argument("base thickness must be positive for a closed solid");
  for (double h : thickness.values)
    if (!std::isfinite(h) || h < h_base) throw std::invalid_argument("thickness values must be finite and >= h_base");

  const std::size_t nx = thickness.cols;
  const std::size_t ny = thickness.rows;
  // Heights as they will be stored, so that equal values compare equal.
  auto h = [&](std::ptrdiff_t i, std::ptrdiff_t j) -> double {
    if (i < 0 || j < 0 || i >= static_cast<std::ptrdiff_t>(nx) || j >= static_cast<std::ptrdiff_t>(ny)) return 0.0;
    return static_cast<float>(thickness(static_cast<std::size_t>(j), static_cast<std::size_t>(i)));
  };
  auto coord = [&](std::size_t k) { return static_cast<double>(k) * pitch; };
  // Distinct heights among the four features around corner (vx, vy), within [lo, hi].
  auto splits = [&](std::size_t vx, std::size_t vy, double lo, double hi) {
    const auto x = static_cast<std::ptrdiff_t>(vx);
    const auto y = static_cast<std::ptrdiff_t>(vy);
    std::set<double> s{lo, hi};
    for (double v : {h(x - 1, y - 1), h(x, y - 1), h(x - 1, y), h(x, y)})
      if (v > lo && v < hi) s.insert(v);
    return std::vector<double>(s.begin(), s.end());
  };

  MeshBuilder b;
  b.mesh.header = "bdnet extruded heightfield, units mm";
  b.mesh.header.resize(kHeaderBytes, ' ');

  for (std::size_t j = 0; j < ny; ++j) {
    for (std::size_t i = 0; i < nx; ++i) {
      const double x0 = coord(i), x1 = coord(i + 1), y0 = coord(j), y1 = coord(j + 1);
      const double top = h(static_cast<std::ptrdiff_t>(i), static_cast<std::ptrdiff_t>(j));
      b.quad(vf(x0, y0, top), vf(x1, y0, top), vf(x1, y1, top), vf(x0, y1, top), {0, 0, 1});
      b.quad(vf(x0, y0, 0), vf(x0, y1, 0), vf(x1, y1, 0), vf(x1, y0, 0), {0, 0, -1});
    }
  }

  // Walls on x = const lines, between feature columns vx−1 and vx.
  for (std::size_t vx = 0; vx <= nx; ++vx) {
    for (std::size_t j = 0; j < ny; ++j) {
      const double ha = h(static_cast<std::ptrdiff_t>(vx) - 1, static_cast<std::ptrdiff_t>(j));
      const double hb = h(static_cast<std::ptrdiff_t>(vx), static_cast<std::ptrdiff_t>(j));
      if (ha == hb) continue;
      const double lo = std::min(ha, hb), hi = std::max(ha, hb);
      const Vec3d n{ha > hb ? 1.0 : -1.0, 0.0, 0.0};
      b.wall(coord(vx), coord(j), splits(vx, j, lo, hi), coord(vx), coord(j + 1), splits(vx, j + 1, lo, hi), n);
    }
  }
  // Walls on y = const lines, between feature rows vy−1 and vy.
  for (std::size_t vy = 0; vy <= ny; ++vy) {
    for (std::size_t i = 0; i < nx; ++i) {
      const double ha = h(static_cast<std::ptrdiff_t>(i), static_cast<std::ptrdiff_t>(vy) - 1);
      const double hb = h(static_cast<std::ptrdiff_t>(i), static_cast<std::ptrdiff_t>(vy));
      if (ha == hb) continue;
      const double lo = std::min(ha, hb), hi = std::max(ha, hb);
      const Vec3d n{0.0, ha > hb ? 1.0 : -1.0, 0.0};
      b.wall(coord(i), coord(vy), splits(i, vy, lo, hi), coord(i + 1), coord(vy), splits(i + 1, vy, lo, hi), n);
    }
  }
  return std::move(b.mesh);
}

std::string encode_stl(const StlMesh& mesh) {
  if (mesh.triangles.size() > 0xffffffffu) throw std::invalid_argument("too many triangles for binary STL");
  std::string out = mesh.header.substr(0, kHeaderBytes);
  out.resize(kHeaderBytes, ' ');
  out.reserve(kHeaderBytes + 4 + kTriangleBytes * mesh.triangles.size());
  put_u32(out, static_cast<std::uint32_t>(mesh.triangles.size()));
  for (const auto& t : mesh.triangles) {
    for (float f : t.normal) put_f32(out, f);
    for (const auto& v : t.vertices)
      for (float f : v) put_f32(out, f);
    out.push_back('\0');
    out.push_back('\0');
  }
  return out;
}

StlMesh parse_stl(std::string_view bytes, const std::string& source) {
  if (bytes.size() < kHeaderBytes + 4) throw ParseError(source, 0, "binary STL shorter than its header");
  const std::uint32_t count = get_u32(bytes, kHeaderBytes);
  const std::size_t expected = kHeaderBytes + 4 + kTriangleBytes * static_cast<std::size_t>(count);
  if (bytes.size() != expected)
    throw ParseError(source, 0,
                     "binary STL size " + std::to_string(bytes.size()) + " does not match " + std::to_string(count) +
                         " triangles (" + std::to_string(expected) + " bytes)");
  StlMesh mesh;
  mesh.header.assign(bytes.substr(0, kHeaderBytes));
  mesh.triangles.resize(count);
  std::size_t pos = kHeaderBytes + 4;
  for (auto& t : mesh.triangles) {
    for (auto& f : t.normal) f = get_f32(bytes, (pos += 4) - 4);
    for (auto& v : t.vertices)
      for (auto& f : v) f = get_f32(bytes, (pos += 4) - 4);
    if (bytes[pos] != '\0' || bytes[pos + 1] != '\0')
      throw ParseError(source, 0, "non-zero attribute byte count in triangle");
    pos += 2;
  }
  return mesh;
}

std::string export_stl(const Matrix& thickness, double feature_pitch, double h_base) {
  return encode_stl(heightfield_mesh(thickness, feature_pitch, h_base));
}

void write_stl(const std::filesystem::path& path, const Matrix& thickness, double feature_pitch, double h_base) {
  write_text_file(path, export_stl(thickness, feature_pitch, h_base));
}

MeshCheck check_mesh(const StlMesh& mesh) {
  std::map<std::pair<Vec3f, Vec3f>, long> directed;
  for (const auto& t : mesh.triangles) {
    const Vec3d n = cross(sub(to_d(t.vertices[1]), to_d(t.vertices[0])), sub(to_d(t.vertices[2]), to_d(t.vertices[0])));
    if (dot(n, n) == 0.0) {
      ++directed[{t.vertices[0], t.vertices[0]}];  // poison: never balanced
      continue;
    }
    for (int k = 0; k < 3; ++k) ++directed[{t.vertices[k], t.vertices[(k + 1) % 3]}];
  }
  MeshCheck c;
  c.closed = !mesh.triangles.empty();
  c.two_manifold = c.closed;
  for (const auto& [edge, count] : directed) {
    if (edge.first == edge.second) {
      c.degenerate_triangles += static_cast<std::size_t>(count);
      c.closed = c.two_manifold = false;
      continue;
    }
    const auto twin = directed.find({edge.second, edge.first});
    const long back = twin == directed.end() ? 0 : twin->second;
    if (back != count) c.closed = false;
    if (edge.first < edge.second) {
      ++c.edges;
      if (count + back != 2) c.two_manifold = false;
    } else if (back == 0) {
      ++c.edges;
      c.two_manifold = false;
    }
  }
  return c;
}

double mesh_volume(const StlMesh& mesh) {
  double v = 0.0;
  for (const auto& t : mesh.triangles)
    v += dot(to_d(t.vertices[0]), cross(to_d(t.vertices[1]), to_d(t.vertices[2])));
  return v / 6.0;
}

BoundingBox bounding_box(const StlMesh& mesh) {
  if (mesh.triangles.empty()) throw std::invalid_argument("bounding box of an empty mesh");
  BoundingBox box{mesh.triangles[0].vertices[0], mesh.triangles[0].vertices[0]};
  for (const auto& t : mesh.triangles)
    for (const auto& v : t.vertices)
      for (int k = 0; k < 3; ++k) {
        box.min[k] = std::min(box.min[k], v[k]);
        box.max[k] = std::max(box.max[k], v[k]);
      }
  return box;
}

}  // namespace bdnet
