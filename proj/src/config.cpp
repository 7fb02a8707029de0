#include "bdnet/config.hpp"

#include <cstdio>
#include <set>

#include "bdnet/io.hpp"

namespace bdnet {

using nlohmann::json;

namespace {

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

// Object reader that remembers which keys were consumed so leftovers can be rejected.
class Reader {
 public:
  Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_, "expected an object");
  }

  // Marks the key as consumed; null counts as absent.
  bool has(const std::string& key) {
    seen_.insert(key);
    return j_.contains(key) && !j_.at(key).is_null();
  }

  const json& raw(const std::string& key) {
    seen_.insert(key);
    if (!j_.contains(key)) throw ConfigError(join(path_, key), "missing required key");
    return j_.at(key);
  }

  template <class T>
  T get(const std::string& key, T fallback) {
    seen_.insert(key);
    if (!has(key)) return fallback;
    return convert<T>(key);
  }

  template <class T>
  std::optional<T> optional(const std::string& key) {
    seen_.insert(key);
    if (!has(key)) return std::nullopt;
    return convert<T>(key);
  }

  std::string path(const std::string& key) const { return join(path_, key); }

  void finish() const {
    for (const auto& [key, value] : j_.items())
      if (!seen_.count(key)) throw ConfigError(join(path_, key), "unknown key");
  }

 private:
  template <class T>
  T convert(const std::string& key) {
    const json& v = j_.at(key);
    try {
      if constexpr (std::is_same_v<T, bool>) {
        if (!v.is_boolean()) throw ConfigError(join(path_, key), "expected true or false");
      } else if constexpr (std::is_integral_v<T>) {
        if (!v.is_number_integer()) throw ConfigError(join(path_, key), "expected an integer");
        if (std::is_unsigned_v<T> && v.get<long long>() < 0) throw ConfigError(join(path_, key), "must be >= 0");
      } else if constexpr (std::is_floating_point_v<T>) {
        if (!v.is_number()) throw ConfigError(join(path_, key), "expected a number");
      } else if constexpr (std::is_same_v<T, std::string>) {
        if (!v.is_string()) throw ConfigError(join(path_, key), "expected a string");
      }
      return v.get<T>();
    } catch (const json::exception& e) {
      throw ConfigError(join(path_, key), e.what());
    }
  }

  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

template <class T>
std::vector<T> number_list(const json& v, const std::string& path) {
  if (v.is_number()) return {v.get<T>()};
  if (!v.is_array()) throw ConfigError(path, "expected a number or a list of numbers");
  std::vector<T> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!v[i].is_number()) throw ConfigError(path + "[" + std::to_string(i) + "]", "expected a number");
    out.push_back(v[i].get<T>());
  }
  return out;
}

Region parse_region(const json& j, const std::string& path) {
  Reader r(j, path);
  const auto center = number_list<double>(r.raw("center_mm"), r.path("center_mm"));
  const auto size = number_list<double>(r.raw("size_mm"), r.path("size_mm"));
  r.finish();
  if (center.size() != 2) throw ConfigError(r.path("center_mm"), "expected [x, y]");
  if (size.size() != 1 && size.size() != 2) throw ConfigError(r.path("size_mm"), "expected a width or [wx, wy]");
  const double wy = size.size() == 2 ? size[1] : size[0];
  if (!(size[0] > 0.0) || !(wy > 0.0)) throw ConfigError(r.path("size_mm"), "widths must be positive");
  return {center[0], center[1], size[0], wy};
}

std::vector<Region> parse_regions(const json& j, const std::string& path) {
  if (!j.is_array() || j.empty()) throw ConfigError(path, "expected a non-empty list of regions");
  std::vector<Region> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(parse_region(j[i], path + "[" + std::to_string(i) + "]"));
  return out;
}

json region_json(const Region& r) {
  return {{"center_mm", {r.center_x, r.center_y}}, {"size_mm", {r.width_x, r.width_y}}};
}

TransferModel parse_model(const std::string& s, const std::string& path) {
  if (s == "rayleigh_sommerfeld") return TransferModel::rayleigh_sommerfeld;
  if (s == "angular_spectrum") return TransferModel::angular_spectrum;
  throw ConfigError(path, "expected \"rayleigh_sommerfeld\" or \"angular_spectrum\"");
}

std::string model_name(TransferModel m) {
  return m == TransferModel::rayleigh_sommerfeld ? "rayleigh_sommerfeld" : "angular_spectrum";
}

StackGeometry parse_geometry(const json& j) {
  Reader r(j, "geometry");
  StackGeometry g;
  g.layer_count = r.get("layers", g.layer_count);
  g.features = r.get("features", g.features);
  g.feature_pitch = r.get("feature_pitch_mm", g.feature_pitch);
  g.oversampling = r.get("oversampling", g.oversampling);
  g.first_layer_active = r.get("first_layer_active_mm", g.first_layer_active);
  g.layer_active = r.optional<double>("layer_active_mm");
  g.input_aperture = r.get("input_aperture_mm", g.input_aperture);
  g.input_distance = r.get("input_distance_mm", g.input_distance);
  if (r.has("layer_spacing_mm")) g.layer_spacing = number_list<double>(r.raw("layer_spacing_mm"), r.path("layer_spacing_mm"));
  g.output_distance = r.get("output_distance_mm", g.output_distance);
  if (r.has("output_apertures")) g.output_apertures = parse_regions(r.raw("output_apertures"), r.path("output_apertures"));
  if (r.has("detectors")) g.detectors = parse_regions(r.raw("detectors"), r.path("detectors"));
  g.slab_index = r.get("slab_index", g.slab_index);
  g.slab_thickness = r.get("slab_thickness_mm", g.slab_thickness);
  g.guard = r.get("window_guard", g.guard);
  g.free_space_model =
      parse_model(r.get<std::string>("free_space_model", model_name(g.free_space_model)), r.path("free_space_model"));
  g.free_space_padding = r.get("free_space_padding", g.free_space_padding);
  r.finish();
  if (g.input_distance <= 0.0) throw ConfigError("geometry.input_distance_mm", "must be positive");
  for (double s : g.layer_spacing)
    if (!(s > 0.0)) throw ConfigError("geometry.layer_spacing_mm", "spacings must be positive");
  if (!(g.output_distance > 0.0)) throw ConfigError("geometry.output_distance_mm", "must be positive");
  if (!(g.slab_index >= 1.0)) throw ConfigError("geometry.slab_index", "must be >= 1");
  if (!(g.slab_thickness > 0.0)) throw ConfigError("geometry.slab_thickness_mm", "must be positive");
  return g;
}

BandSpec parse_band(const json& j, const std::string& path) {
  Reader r(j, path);
  BandSpec b;
  b.center = r.get<double>("center_thz", b.center);
  b.pass_width = r.get<double>("pass_width_thz", b.pass_width);
  b.target_q = r.optional<double>("target_q");
  b.detector = r.get<std::size_t>("detector", b.detector);
  b.alpha = r.get<double>("alpha", b.alpha);
  b.beta = r.get<double>("beta", b.beta);
  r.finish();
  return b;
}

LossSpec parse_loss(const json& j) {
  Reader r(j, "loss");
  const json& bands = r.raw("bands");
  r.finish();
  if (!bands.is_array()) throw ConfigError("loss.bands", "expected a list");
  LossSpec spec;
  for (std::size_t i = 0; i < bands.size(); ++i)
    spec.bands.push_back(parse_band(bands[i], "loss.bands[" + std::to_string(i) + "]"));
  return spec;
}

TrainConfig parse_training(const json& j) {
  Reader r(j, "training");
  TrainConfig t;
  t.f_min = r.get("f_min_thz", t.f_min);
  t.f_max = r.get("f_max_thz", t.f_max);
  t.frequencies = r.get("frequencies", t.frequencies);
  t.batch = r.get("batch", t.batch);
  t.epochs = r.get("epochs", t.epochs);
  t.learning_rate = r.get("learning_rate", t.learning_rate);
  if (r.has("adam")) {
    Reader a(r.raw("adam"), "training.adam");
    t.adam.beta1 = a.get("beta1", t.adam.beta1);
    t.adam.beta2 = a.get("beta2", t.adam.beta2);
    t.adam.epsilon = a.get("epsilon", t.adam.epsilon);
    a.finish();
  }
  t.quantize_during_training = r.get("quantize_during_training", t.quantize_during_training);
  t.straight_through = r.get("straight_through", t.straight_through);
  t.plateau_patience = r.get("plateau_patience", t.plateau_patience);
  t.plateau_tolerance = r.get("plateau_tolerance", t.plateau_tolerance);
  r.finish();
  try {
    t.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError("training", e.what());
  }
  return t;
}

AnalysisConfig parse_analysis(const json& j) {
  Reader r(j, "analysis");
  AnalysisConfig a;
  a.scan_min = r.get("scan_min_thz", a.scan_min);
  a.scan_max = r.get("scan_max_thz", a.scan_max);
  a.scan_step = r.get("scan_step_thz", a.scan_step);
  if (r.has("dz_values_mm")) a.dz_values = number_list<double>(r.raw("dz_values_mm"), r.path("dz_values_mm"));
  if (r.has("aperture_widths_mm"))
    a.aperture_widths = number_list<double>(r.raw("aperture_widths_mm"), r.path("aperture_widths_mm"));
  a.detector = r.get("detector", a.detector);
  if (r.has("xz")) {
    Reader x(r.raw("xz"), "analysis.xz");
    a.xz.frequency = x.optional<double>("frequency_thz");
    a.xz.z_min = x.optional<double>("z_min_mm");
    a.xz.z_max = x.optional<double>("z_max_mm");
    a.xz.z_step = x.get("z_step_mm", a.xz.z_step);
    x.finish();
    if (!(a.xz.z_step > 0.0)) throw ConfigError("analysis.xz.z_step_mm", "must be positive");
  }
  r.finish();
  if (!(a.scan_min > 0.0) || !(a.scan_max > a.scan_min) || !(a.scan_step > 0.0))
    throw ConfigError("analysis", "scan range needs 0 < scan_min < scan_max and a positive step");
  for (double w : a.aperture_widths)
    if (!(w > 0.0)) throw ConfigError("analysis.aperture_widths_mm", "widths must be positive");
  return a;
}

TunableConfig parse_tunable(const json& j) {
  Reader r(j, "tunable");
  TunableConfig t;
  if (r.has("anchors")) {
    const json& list = r.raw("anchors");
    if (!list.is_array()) throw ConfigError("tunable.anchors", "expected a list");
    for (std::size_t i = 0; i < list.size(); ++i) {
      Reader a(list[i], "tunable.anchors[" + std::to_string(i) + "]");
      TunableAnchor anchor{a.get("dz_mm", 0.0), 0.0};
      anchor.center = a.get<double>("center_thz", 0.0);
      a.finish();
      if (!(anchor.center > 0.0)) throw ConfigError(a.path("center_thz"), "must be positive");
      t.anchors.push_back(anchor);
    }
  }
  if (r.has("band")) t.band_template = parse_band(r.raw("band"), "tunable.band");
  t.epochs = r.optional<std::size_t>("epochs");
  t.learning_rate = r.optional<double>("learning_rate");
  r.finish();
  return t;
}

}  // namespace

DispersionTable DesignConfig::material() const {
  return material_table ? DispersionTable::load_csv(*material_table) : DispersionTable::synthetic();
}

DesignConfig parse_config(const json& j, const std::filesystem::path& base_dir) {
  Reader r(j, "");
  DesignConfig cfg;
  if (r.has("geometry")) cfg.geometry = parse_geometry(r.raw("geometry"));
  if (r.has("parametrization")) {
    Reader p(r.raw("parametrization"), "parametrization");
    cfg.geometry.h_max = p.get("h_max_mm", cfg.geometry.h_max);
    cfg.geometry.h_base = p.get("h_base_mm", cfg.geometry.h_base);
    cfg.geometry.levels = p.get("levels", cfg.geometry.levels);
    cfg.geometry.quantize = p.get("quantize", cfg.geometry.quantize);
    p.finish();
  }
  if (r.has("material")) {
    Reader m(r.raw("material"), "material");
    const auto table = m.get<std::string>("table", "synthetic");
    m.finish();
    if (table != "synthetic") {
      std::filesystem::path p = table;
      if (p.is_relative()) p = base_dir / p;
      p = std::filesystem::weakly_canonical(p);
      if (!std::filesystem::exists(p)) throw ConfigError("material.table", "file not found: " + p.string());
      cfg.material_table = p;
    }
  }
  cfg.loss = parse_loss(r.raw("loss"));
  if (r.has("training")) cfg.training = parse_training(r.raw("training"));
  if (r.has("analysis")) cfg.analysis = parse_analysis(r.raw("analysis"));
  if (r.has("tunable")) cfg.tunable = parse_tunable(r.raw("tunable"));
  std::filesystem::path out = r.get<std::string>("output_dir", "out");
  if (out.is_relative()) out = base_dir / out;
  cfg.output_dir = std::filesystem::weakly_canonical(out);
  cfg.seed = r.get<std::uint64_t>("seed", cfg.seed);
  r.finish();
  cfg.training.seed = cfg.seed;

  OpticalStack stack;
  try {
    stack = build_stack(cfg.geometry);
  } catch (const std::invalid_argument& e) {
    throw ConfigError("geometry", e.what());
  }
  try {
    cfg.loss.validate(stack.detectors.size());
  } catch (const std::invalid_argument& e) {
    throw ConfigError("loss", e.what());
  }
  if (cfg.analysis.detector >= stack.detectors.size())
    throw ConfigError("analysis.detector", "detector index out of range");
  if (cfg.tunable.band_template) {
    try {
      LossSpec{{*cfg.tunable.band_template}}.validate(stack.detectors.size());
    } catch (const std::invalid_argument& e) {
      throw ConfigError("tunable.band", e.what());
    }
  }
  try {
    const auto table = cfg.material();
    if (cfg.training.f_min < table.min_frequency() || cfg.training.f_max > table.max_frequency())
      throw ConfigError("training", "training band exceeds the dispersion table range");
  } catch (const ParseError& e) {
    throw ConfigError("material.table", e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError("material.table", e.what());
  }
  return cfg;
}

json band_to_json(const BandSpec& b) {
  json j{{"center_thz", b.center}, {"pass_width_thz", b.pass_width}, {"detector", b.detector},
         {"alpha", b.alpha},       {"beta", b.beta}};
  j["target_q"] = b.target_q ? json(*b.target_q) : json(nullptr);
  return j;
}

json to_json(const DesignConfig& c) {
  const auto& g = c.geometry;
  json geometry{{"layers", g.layer_count},
                {"features", g.features},
                {"feature_pitch_mm", g.feature_pitch},
                {"oversampling", g.oversampling},
                {"first_layer_active_mm", g.first_layer_active},
                {"input_aperture_mm", g.input_aperture},
                {"input_distance_mm", g.input_distance},
                {"layer_spacing_mm", g.layer_spacing},
                {"output_distance_mm", g.output_distance},
                {"slab_index", g.slab_index},
                {"slab_thickness_mm", g.slab_thickness},
                {"window_guard", g.guard},
                {"free_space_model", model_name(g.free_space_model)},
                {"free_space_padding", g.free_space_padding}};
  geometry["layer_active_mm"] = g.layer_active ? json(*g.layer_active) : json(nullptr);
  geometry["output_apertures"] = json::array();
  for (const auto& a : g.output_apertures) geometry["output_apertures"].push_back(region_json(a));
  if (g.detectors) {
    geometry["detectors"] = json::array();
    for (const auto& d : *g.detectors) geometry["detectors"].push_back(region_json(d));
  } else {
    geometry["detectors"] = nullptr;
  }

  json bands = json::array();
  for (const auto& b : c.loss.bands) bands.push_back(band_to_json(b));
  const auto& t = c.training;
  json training{{"f_min_thz", t.f_min},
                {"f_max_thz", t.f_max},
                {"frequencies", t.frequencies},
                {"batch", t.batch},
                {"epochs", t.epochs},
                {"learning_rate", t.learning_rate},
                {"adam", {{"beta1", t.adam.beta1}, {"beta2", t.adam.beta2}, {"epsilon", t.adam.epsilon}}},
                {"quantize_during_training", t.quantize_during_training},
                {"straight_through", t.straight_through},
                {"plateau_patience", t.plateau_patience},
                {"plateau_tolerance", t.plateau_tolerance}};
  const auto& a = c.analysis;
  json xz{{"z_step_mm", a.xz.z_step}};
  xz["frequency_thz"] = a.xz.frequency ? json(*a.xz.frequency) : json(nullptr);
  xz["z_min_mm"] = a.xz.z_min ? json(*a.xz.z_min) : json(nullptr);
  xz["z_max_mm"] = a.xz.z_max ? json(*a.xz.z_max) : json(nullptr);
  json analysis{{"scan_min_thz", a.scan_min},    {"scan_max_thz", a.scan_max}, {"scan_step_thz", a.scan_step},
                {"dz_values_mm", a.dz_values},   {"aperture_widths_mm", a.aperture_widths},
                {"detector", a.detector},        {"xz", xz}};
  json anchors = json::array();
  for (const auto& an : c.tunable.anchors) anchors.push_back({{"dz_mm", an.output_shift}, {"center_thz", an.center}});
  json tunable{{"anchors", anchors}};
  tunable["band"] = c.tunable.band_template ? band_to_json(*c.tunable.band_template) : json(nullptr);
  tunable["epochs"] = c.tunable.epochs ? json(*c.tunable.epochs) : json(nullptr);
  tunable["learning_rate"] = c.tunable.learning_rate ? json(*c.tunable.learning_rate) : json(nullptr);

  return {{"geometry", geometry},
          {"parametrization",
           {{"h_max_mm", g.h_max}, {"h_base_mm", g.h_base}, {"levels", g.levels}, {"quantize", g.quantize}}},
          {"material", {{"table", c.material_table ? c.material_table->string() : std::string("synthetic")}}},
          {"loss", {{"bands", bands}}},
          {"training", training},
          {"analysis", analysis},
          {"tunable", tunable},
          {"output_dir", c.output_dir.string()},
          {"seed", c.seed}};
}

void apply_override(json& j, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos || eq == 0) throw ConfigError("", "override must look like key.path=value");
  const std::string key(assignment.substr(0, eq));
  const std::string text(assignment.substr(eq + 1));
  json value;
  try {
    value = json::parse(text);
  } catch (const json::parse_error&) {
    value = text;
  }
  json* node = &j;
  std::size_t start = 0;
  while (true) {
    const auto dot = key.find('.', start);
    const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (part.empty()) throw ConfigError(key, "empty key component in override");
    if (!node->is_object()) throw ConfigError(key, "override path crosses a non-object value");
    if (dot == std::string::npos) {
      (*node)[part] = value;
      return;
    }
    node = &(*node)[part];
    if (node->is_null()) *node = json::object();
    start = dot + 1;
  }
}

DesignConfig load_config(const std::filesystem::path& path, const std::vector<std::string>& overrides) {
  const std::string text = read_text_file(path);
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("", path.string() + ": " + e.what());
  }
  if (j.is_object() && j.contains("effective_config")) j = j.at("effective_config");
  for (const auto& o : overrides) apply_override(j, o);
  const auto base = std::filesystem::absolute(path).parent_path();
  return parse_config(j, base);
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::string config_hash(const DesignConfig& cfg) {
  // Where results are written does not change what is computed.
  auto j = to_json(cfg);
  j.erase("output_dir");
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(j.dump())));
  return buf;
}

}  // namespace bdnet
