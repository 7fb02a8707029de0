#include <catch_amalgamated.hpp>

#include <cmath>
#include <cstring>
#include <random>

#include "bdnet/stl.hpp"

using namespace bdnet;
using Catch::Matchers::WithinRel;

namespace {

// Summed feature volume: the oracle for the signed-tetrahedron mesh volume.
double feature_volume(const Matrix& m, double pitch) {
  double v = 0.0;
  for (double h : m.values) v += h * pitch * pitch;
  return v;
}

Matrix random_levels(std::size_t rows, std::size_t cols, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_int_distribution<int> level(0, 16);
  Matrix m{rows, cols, std::vector<double>(rows * cols)};
  for (auto& v : m.values) v = 0.5 + 0.0625 * level(rng);
  return m;
}

std::uint32_t read_u32(const std::string& s, std::size_t at) {
  return static_cast<std::uint32_t>(static_cast<unsigned char>(s[at])) |
         static_cast<std::uint32_t>(static_cast<unsigned char>(s[at + 1])) << 8 |
         static_cast<std::uint32_t>(static_cast<unsigned char>(s[at + 2])) << 16 |
         static_cast<std::uint32_t>(static_cast<unsigned char>(s[at + 3])) << 24;
}

}  // namespace

TEST_CASE("single feature exports a box") {
  const Matrix one{1, 1, {1.5}};
  const auto mesh = heightfield_mesh(one, 0.5, 0.5);
  CHECK(mesh.triangles.size() == 12);
  const auto c = check_mesh(mesh);
  CHECK(c.closed);
  CHECK(c.two_manifold);
  CHECK(c.degenerate_triangles == 0);
  CHECK(c.edges == 18);
  CHECK_THAT(mesh_volume(mesh), WithinRel(0.5 * 0.5 * 1.5, 1e-9));
  const auto bb = bounding_box(mesh);
  CHECK(bb.min == Vec3f{0.0f, 0.0f, 0.0f});
  CHECK(bb.max == Vec3f{0.5f, 0.5f, 1.5f});
}

TEST_CASE("constant map matches the equivalent box") {
  const Matrix flat{2, 2, {1.25, 1.25, 1.25, 1.25}};
  const auto mesh = heightfield_mesh(flat, 0.5, 0.5);
  const auto bb = bounding_box(mesh);
  CHECK(bb.max == Vec3f{1.0f, 1.0f, 1.25f});
  CHECK(bb.min == Vec3f{0.0f, 0.0f, 0.0f});
  CHECK_THAT(mesh_volume(mesh), WithinRel(1.0 * 1.0 * 1.25, 1e-9));
  CHECK(check_mesh(mesh).closed);
}

TEST_CASE("random level maps are watertight with exact volume") {
  for (unsigned seed = 1; seed <= 6; ++seed) {
    const auto m = random_levels(3 + seed, 2 + 2 * seed, seed);
    const auto mesh = heightfield_mesh(m, 0.5, 0.5);
    const auto c = check_mesh(mesh);
    CAPTURE(seed);
    CHECK(c.closed);
    CHECK(c.degenerate_triangles == 0);
    CHECK_THAT(mesh_volume(mesh), WithinRel(feature_volume(m, 0.5), 1e-9));
    const auto bb = bounding_box(mesh);
    CHECK(bb.max[0] == static_cast<float>(m.cols * 0.5));
    CHECK(bb.max[1] == static_cast<float>(m.rows * 0.5));
    double hmax = 0.0;
    for (double v : m.values) hmax = std::max(hmax, v);
    CHECK(bb.max[2] == static_cast<float>(hmax));
  }
}

TEST_CASE("normals point outward") {
  const Matrix m{1, 2, {1.0, 1.5}};
  const auto mesh = heightfield_mesh(m, 0.5, 0.5);
  for (const auto& t : mesh.triangles) {
    float cx = 0, cy = 0, cz = 0;
    for (const auto& v : t.vertices) {
      cx += v[0] / 3;
      cy += v[1] / 3;
      cz += v[2] / 3;
    }
    // Bottom faces face down, the top plateaus face up.
    if (cz == 0.0f) CHECK(t.normal[2] < 0.0f);
    if (std::abs(cz - 1.5f) < 1e-6f) CHECK(t.normal[2] > 0.0f);
    if (cx == 0.0f) CHECK(t.normal[0] < 0.0f);
    if (cy == 0.0f) CHECK(t.normal[1] < 0.0f);
    const float len = std::sqrt(t.normal[0] * t.normal[0] + t.normal[1] * t.normal[1] + t.normal[2] * t.normal[2]);
    CHECK(std::abs(len - 1.0f) < 1e-6f);
  }
}

TEST_CASE("binary layout and reparse") {
  const auto m = random_levels(5, 7, 11);
  const auto bytes = export_stl(m, 0.5, 0.5);
  const auto mesh = heightfield_mesh(m, 0.5, 0.5);
  REQUIRE(bytes.size() == 84 + 50 * mesh.triangles.size());
  CHECK(read_u32(bytes, 80) == mesh.triangles.size());
  for (std::size_t i = 0; i < mesh.triangles.size(); ++i) {
    CHECK(bytes[84 + 50 * i + 48] == 0);
    CHECK(bytes[84 + 50 * i + 49] == 0);
  }
  float x0;
  std::memcpy(&x0, bytes.data() + 84 + 12, 4);  // little-endian host
  CHECK(x0 == mesh.triangles[0].vertices[0][0]);

  const auto back = parse_stl(bytes);
  REQUIRE(back.triangles.size() == mesh.triangles.size());
  for (std::size_t i = 0; i < mesh.triangles.size(); ++i) {
    CHECK(back.triangles[i].normal == mesh.triangles[i].normal);
    CHECK(back.triangles[i].vertices == mesh.triangles[i].vertices);
  }
  CHECK(check_mesh(back).closed);
  CHECK(encode_stl(back) == bytes);
}

TEST_CASE("malformed binaries are rejected") {
  const Matrix one{1, 1, {1.0}};
  const auto bytes = export_stl(one, 0.5, 0.5);
  CHECK_THROWS_AS(parse_stl(bytes.substr(0, 50)), ParseError);
  CHECK_THROWS_AS(parse_stl(bytes.substr(0, bytes.size() - 1)), ParseError);
  CHECK_THROWS_AS(parse_stl(bytes + "x"), ParseError);
  auto attr = bytes;
  attr[84 + 48] = 1;
  CHECK_THROWS_AS(parse_stl(attr), ParseError);
}

TEST_CASE("export preconditions") {
  CHECK_THROWS_AS(heightfield_mesh(Matrix{}, 0.5, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(heightfield_mesh(Matrix{1, 1, {0.4}}, 0.5, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(heightfield_mesh(Matrix{1, 1, {NAN}}, 0.5, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(heightfield_mesh(Matrix{1, 1, {1.0}}, 0.0, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(heightfield_mesh(Matrix{1, 2, {1.0}}, 0.5, 0.5), std::invalid_argument);
}

TEST_CASE("write_stl creates the file") {
  const auto path = std::filesystem::temp_directory_path() / "bdnet_test_layer.stl";
  const auto m = random_levels(4, 4, 3);
  write_stl(path, m, 0.5, 0.5);
  const auto text = read_text_file(path);
  CHECK(text == export_stl(m, 0.5, 0.5));
  std::filesystem::remove(path);
  CHECK_THROWS_AS(write_stl("/nonexistent-dir/x.stl", m, 0.5, 0.5), IoError);
}
