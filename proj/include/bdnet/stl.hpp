#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "bdnet/io.hpp"

namespace bdnet {

using Vec3f = std::array<float, 3>;

struct StlTriangle {
  Vec3f normal;
  std::array<Vec3f, 3> vertices;
};

struct StlMesh {
  std::string header;  // 80 bytes
  std::vector<StlTriangle> triangles;
};

/// Extruded heightfield of one layer: per-feature top plateaus, a flat bottom
/// at z = 0 and vertical walls wherever neighbouring heights differ. Feature
/// (row j, column i) covers [i·p, (i+1)·p] × [j·p, (j+1)·p]. Walls are split at
/// every height present at their corners so that no edge ends mid-edge.
StlMesh heightfield_mesh(const Matrix& thickness, double feature_pitch, double h_base);

/// Binary STL: 80-byte header, little-endian uint32 count, 50 bytes per triangle.
std::string encode_stl(const StlMesh& mesh);
StlMesh parse_stl(std::string_view bytes, const std::string& source = "<stl>");

std::string export_stl(const Matrix& thickness, double feature_pitch, double h_base);
void write_stl(const std::filesystem::path& path, const Matrix& thickness, double feature_pitch, double h_base);

struct MeshCheck {
  /// Every directed edge a→b is matched by as many b→a (closed, consistently oriented).
  bool closed = false;
  /// Every undirected edge is used by exactly two triangles.
  bool two_manifold = false;
  std::size_t edges = 0;
  std::size_t degenerate_triangles = 0;
};

MeshCheck check_mesh(const StlMesh& mesh);

/// Signed-tetrahedron volume; positive for outward-facing triangles.
double mesh_volume(const StlMesh& mesh);

struct BoundingBox {
  Vec3f min;
  Vec3f max;
};
BoundingBox bounding_box(const StlMesh& mesh);

}  // namespace bdnet
