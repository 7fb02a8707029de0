#include <catch_amalgamated.hpp>

#include <filesystem>

#include "bdnet/config.hpp"
#include "bdnet/io.hpp"

using namespace bdnet;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

const fs::path kConfigs = fs::path(BDNET_SOURCE_DIR) / "configs";

json minimal() {
  return json::parse(R"({
    "geometry": {"layers": 2, "features": 8, "feature_pitch_mm": 0.5, "oversampling": 2,
                 "first_layer_active_mm": 4, "input_aperture_mm": 3, "input_distance_mm": 4,
                 "layer_spacing_mm": 5, "output_distance_mm": 6,
                 "output_apertures": [{"center_mm": [0, 0], "size_mm": 2}],
                 "slab_thickness_mm": 1, "window_guard": 1.5},
    "loss": {"bands": [{"center_thz": 0.5, "pass_width_thz": 0.01}]}
  })");
}

std::string field_of(const json& j) {
  try {
    parse_config(j, fs::temp_directory_path());
  } catch (const ConfigError& e) {
    return e.field();
  }
  return "<accepted>";
}

}  // namespace

TEST_CASE("bundled configs parse") {
  std::size_t n = 0;
  for (const auto& entry : fs::directory_iterator(kConfigs)) {
    if (entry.path().extension() != ".json") continue;
    CAPTURE(entry.path().string());
    CHECK_NOTHROW(load_config(entry.path()));
    ++n;
  }
  CHECK(n >= 9);
}

TEST_CASE("desk config values") {
  const auto c = load_config(kConfigs / "desk_350.json");
  CHECK(c.geometry.layer_count == 3);
  CHECK(c.geometry.features == 40);
  CHECK(c.geometry.oversampling == 4);
  CHECK(c.training.frequencies == 751);
  CHECK(c.training.batch == 20);
  CHECK(c.training.epochs == 30);
  CHECK(c.loss.bands.size() == 1);
  CHECK(c.loss.bands[0].center == 0.35);
  CHECK(c.loss.bands[0].beta == 0.0);
  CHECK(c.seed == 7);
  CHECK(c.training.seed == 7);
  REQUIRE(c.material_table.has_value());
  CHECK(c.material_table->is_absolute());
  CHECK(fs::exists(*c.material_table));
  CHECK(c.output_dir.is_absolute());
  CHECK(c.output_dir.filename() == "desk_350");
}

TEST_CASE("defaults fill omitted sections") {
  const auto c = parse_config(minimal(), "/tmp");
  CHECK(c.training.frequencies == 7500);
  CHECK(c.training.learning_rate == 1e-3);
  CHECK(c.training.straight_through);
  CHECK(c.geometry.levels == 16);
  CHECK_FALSE(c.material_table.has_value());
  CHECK(c.output_dir == fs::path("/tmp/out"));
  CHECK(c.analysis.scan_step == 0.001);
}

TEST_CASE("unknown keys and bad values name the offending field") {
  auto j = minimal();
  j["geometry"]["layer_count"] = 3;
  CHECK(field_of(j) == "geometry.layer_count");

  j = minimal();
  j["training"] = {{"epochz", 3}};
  CHECK(field_of(j) == "training.epochz");

  j = minimal();
  j["loss"]["bands"][0]["alpha"] = "one";
  CHECK(field_of(j) == "loss.bands[0].alpha");

  j = minimal();
  j["geometry"]["output_distance_mm"] = -1;
  CHECK(field_of(j) == "geometry.output_distance_mm");

  j = minimal();
  j["geometry"]["output_apertures"][0]["size_mm"] = 0;
  CHECK(field_of(j) == "geometry.output_apertures[0].size_mm");

  j = minimal();
  j["loss"]["bands"][0]["detector"] = 2;
  CHECK(field_of(j) == "loss");

  j = minimal();
  j["training"] = {{"batch", 0}};
  CHECK(field_of(j) == "training");

  j = minimal();
  j["material"] = {{"table", "no_such_table.csv"}};
  CHECK(field_of(j) == "material.table");

  j = minimal();
  j.erase("loss");
  CHECK(field_of(j) == "loss");

  j = minimal();
  j["geometry"]["output_apertures"][0]["size_mm"] = 40;
  CHECK(field_of(j) == "geometry");
}

TEST_CASE("overrides") {
  auto j = minimal();
  apply_override(j, "training.epochs=5");
  apply_override(j, "seed=11");
  apply_override(j, "output_dir=results/a");
  apply_override(j, "loss.bands=[{\"center_thz\":0.4}]");
  CHECK(j["training"]["epochs"] == 5);
  CHECK(j["output_dir"] == "results/a");
  const auto c = parse_config(j, "/tmp");
  CHECK(c.training.epochs == 5);
  CHECK(c.seed == 11);
  CHECK(c.loss.bands[0].center == 0.4);
  CHECK_THROWS_AS(apply_override(j, "no_equals_sign"), ConfigError);
  CHECK_THROWS_AS(apply_override(j, "seed.x=1"), ConfigError);
  CHECK_THROWS_AS(apply_override(j, "training..epochs=1"), ConfigError);
}

TEST_CASE("effective config round trips") {
  const auto c = load_config(kConfigs / "desk_350.json");
  const auto j = to_json(c);
  const auto again = parse_config(j, "/");
  CHECK(to_json(again) == j);
  CHECK(config_hash(again) == config_hash(c));
}

TEST_CASE("manifests replay their effective config") {
  const auto dir = fs::temp_directory_path() / "bdnet_test_config";
  fs::create_directories(dir);
  const auto c = load_config(kConfigs / "desk_350.json", {"training.epochs=2"});
  const json manifest{{"command", "train"}, {"effective_config", to_json(c)}};
  write_text_file(dir / "manifest_train.json", manifest.dump(2));
  const auto replay = load_config(dir / "manifest_train.json");
  CHECK(to_json(replay) == to_json(c));
  CHECK(replay.training.epochs == 2);
  fs::remove_all(dir);
}

TEST_CASE("config hash") {
  auto c = parse_config(minimal(), "/tmp");
  const auto h = config_hash(c);
  CHECK(h.size() == 16);
  c.output_dir = "/elsewhere";
  CHECK(config_hash(c) == h);
  c.seed = 99;
  CHECK(config_hash(c) != h);
  // Reference FNV-1a 64 values.
  CHECK(fnv1a64("") == 0xcbf29ce484222325ull);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cull);
  CHECK(fnv1a64("foobar") == 0x85944171f73967e8ull);
}

TEST_CASE("file level errors") {
  CHECK_THROWS_AS(load_config("/nonexistent/config.json"), IoError);
  const auto dir = fs::temp_directory_path() / "bdnet_test_config_bad";
  fs::create_directories(dir);
  write_text_file(dir / "bad.json", "{ not json");
  CHECK_THROWS_AS(load_config(dir / "bad.json"), ConfigError);
  write_text_file(dir / "list.json", "[1, 2]");
  CHECK_THROWS_AS(load_config(dir / "list.json"), ConfigError);
  fs::remove_all(dir);
}
