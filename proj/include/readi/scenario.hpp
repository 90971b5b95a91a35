// SPDX-License-Identifier: Apache-2.0
#pragma once

// Scenario files: JSON, every key optional, unknown keys rejected.
//
// {
//   "name": "speckle", "seed": 1,
//   "geometry": {"n_elements": 128, "pitch": null},            pitch null -> one wavelength
//   "pulse": {"center_frequency": 4.3e6, "cycles": 2, "envelope": "rectangular", "sample_rate": null},
//   "scene": {"speed_of_sound": 1540, "prf": 1000, "noise_snr_db": null, "velocity": [vx, vz],
//             "points": [{"x": 0, "z": 0.02, "reflectivity": 1}],
//             "speckle": {"lateral": [a, b], "axial": [a, b], "density_per_mm2": 5,
//                         "cysts": [{"x": 0, "z": 0.02, "radius": 0.002}]}},
//   "acquisition": {"first_event": 1, "acquisitions": 1},
//   "grouping": {"S": 8, "Q": 16},
//   "grid": {"center": [0, 0.02], "size": [256, 256], "pixel_size": 5e-5},
//   "beamform": {"fnumber": 1, "apodization": "rect", "cf_weighting": true, "interpolation": "linear",
//                "precision": "f32", "threads": 1},
//   "motion": {"grid_spacing": 10, ..., "reference_index": 0},
//   "rois": {"inside": {"shape": "circle", "center": [x, z], "radius": r},
//            "background": {"shape": "rectangle", "center": [x, z], "size": [w, h]}},
//   "filter": {"keep": "2-16"},
//   "outputs": {"images": true, "containers": true, "motion_csv": true, "dynamic_range_db": 60}
// }

#include <bit>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"

#include "readi/analysis.hpp"
#include "readi/beamform.hpp"
#include "readi/error.hpp"
#include "readi/hadamard.hpp"
#include "readi/image.hpp"
#include "readi/io.hpp"
#include "readi/motion.hpp"
#include "readi/simulate.hpp"

namespace readi {

using json = nlohmann::ordered_json;

// Validation failure in a scenario; path is the dotted key.
class config_error : public std::runtime_error {
 public:
  config_error(const std::string& path, const std::string& what)
      : std::runtime_error(path.empty() ? what : path + ": " + what), path_(path) {}
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

enum class Precision { f32, f64 };

struct PointSpec {
  Vec2 position;
  double reflectivity = 1.0;
};

struct SceneSpec {
  double speed_of_sound = 1540.0;
  double prf = 1000.0;
  std::optional<double> noise_snr_db;
  Vec2 velocity;
  std::vector<PointSpec> points;
  std::optional<SpeckleSpec> speckle;
};

struct GridSpec {
  Vec2 center{0.0, 20e-3};
  int nx = 256, nz = 256;
  double pixel_size = 5e-5;

  ImagingGrid grid() const { return ImagingGrid::centered(center.x, center.z, nx, nz, pixel_size, pixel_size); }
};

struct OutputSpec {
  bool images = true;
  bool containers = true;
  bool motion_csv = true;
  double dynamic_range_db = 60.0;
};

struct Scenario {
  std::string name = "scenario";
  std::uint64_t seed = 1;
  ArrayGeometry geometry{128, 1540.0 / 4.3e6};
  PulseDefinition pulse;
  SceneSpec scene;
  long first_event = 1;
  int acquisitions = 1;  // consecutive FORCES acquisitions (filter ensembles)
  int groups = 8;        // S
  GridSpec grid;
  BeamformConfig beamform{1540.0, 1.0, Apodization::rect, true, Interpolation::linear, 1};
  Precision precision = Precision::f32;
  MotionConfig motion;
  std::optional<RoiSpec> roi_inside, roi_background;
  std::string keep = "2-16";
  OutputSpec outputs;

  GroupingScheme grouping() const { return GroupingScheme::make(geometry.n_elements, groups); }
};

namespace detail {

// Reads an object's keys, tracks what was consumed, complains about leftovers.
class ObjectReader {
 public:
  ObjectReader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw config_error(path_, "expected an object");
  }

  bool has(const std::string& key) {
    used_.insert(key);
    return j_.contains(key) && !j_.at(key).is_null();
  }

  std::string sub(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  const json& at(const std::string& key) {
    used_.insert(key);
    return j_.at(key);
  }

  template <class T>
  void read(const std::string& key, T& out) {
    if (!has(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
      throw config_error(sub(key), "wrong type (" + std::string(j_.at(key).type_name()) + ")");
    }
  }

  void read_vec2(const std::string& key, Vec2& out) {
    if (!has(key)) return;
    const json& v = j_.at(key);
    if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
      throw config_error(sub(key), "expected [x, z] in meters");
    out = {v[0].get<double>(), v[1].get<double>()};
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!used_.count(it.key())) throw config_error(sub(it.key()), "unknown key");
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> used_;
};

inline RoiSpec parse_roi(const json& j, const std::string& path) {
  ObjectReader r(j, path);
  std::string shape = "circle";
  r.read("shape", shape);
  RoiSpec roi;
  r.read_vec2("center", roi.center);
  if (shape == "circle") {
    double radius = 0.0;
    r.read("radius", radius);
    roi = RoiSpec::circle(roi.center, radius);
    if (!(radius > 0.0)) throw config_error(r.sub("radius"), "must be > 0");
  } else if (shape == "rectangle") {
    Vec2 size;
    r.read_vec2("size", size);
    roi = RoiSpec::rectangle(roi.center, size.x, size.z);
    if (!(size.x > 0.0) || !(size.z > 0.0)) throw config_error(r.sub("size"), "must be > 0");
  } else {
    throw config_error(r.sub("shape"), "expected circle or rectangle, got '" + shape + "'");
  }
  r.finish();
  return roi;
}

inline json roi_json(const RoiSpec& roi) {
  json j;
  j["shape"] = roi.shape == RoiShape::circle ? "circle" : "rectangle";
  j["center"] = {roi.center.x, roi.center.z};
  if (roi.shape == RoiShape::circle)
    j["radius"] = 0.5 * roi.width;
  else
    j["size"] = {roi.width, roi.height};
  return j;
}

template <class E>
E parse_enum(const std::string& path, const std::string& text, std::initializer_list<std::pair<const char*, E>> choices) {
  std::string names;
  for (const auto& [n, e] : choices) {
    if (text == n) return e;
    names += names.empty() ? n : std::string(", ") + n;
  }
  throw config_error(path, "expected one of {" + names + "}, got '" + text + "'");
}

}  // namespace detail

// Applies "a.b.c=value"; value is parsed as JSON when possible, else taken as a string.
inline void apply_override(json& doc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw config_error("--set", "expected key=value, got '" + assignment + "'");
  const std::string key = assignment.substr(0, eq), text = assignment.substr(eq + 1);
  json value;
  try {
    value = json::parse(text);
  } catch (const nlohmann::json::exception&) {
    value = text;
  }
  json* node = &doc;
  std::size_t pos = 0;
  while (true) {
    const std::size_t dot = key.find('.', pos);
    const std::string part = key.substr(pos, dot == std::string::npos ? std::string::npos : dot - pos);
    if (part.empty()) throw config_error(key, "empty path component");
    if (!node->is_object()) throw config_error(key, "cannot descend into a non-object");
    if (dot == std::string::npos) {
      (*node)[part] = value;
      return;
    }
    if (!node->contains(part) || (*node)[part].is_null()) (*node)[part] = json::object();
    node = &(*node)[part];
    pos = dot + 1;
  }
}

inline Scenario parse_scenario(const json& doc) {
  using detail::ObjectReader;
  Scenario s;
  ObjectReader top(doc, "");
  top.read("name", s.name);
  top.read("seed", s.seed);
  if (top.has("provenance")) (void)top.at("provenance");  // written by resolved configs; informational

  bool pitch_given = false;
  if (top.has("geometry")) {
    ObjectReader r(top.at("geometry"), "geometry");
    r.read("n_elements", s.geometry.n_elements);
    if (r.has("pitch")) {
      r.read("pitch", s.geometry.pitch);
      pitch_given = true;
    }
    r.finish();
  }
  if (top.has("pulse")) {
    ObjectReader r(top.at("pulse"), "pulse");
    r.read("center_frequency", s.pulse.center_frequency);
    r.read("cycles", s.pulse.cycles);
    std::string env = s.pulse.envelope == Envelope::hann ? "hann" : "rectangular";
    r.read("envelope", env);
    s.pulse.envelope = detail::parse_enum<Envelope>("pulse.envelope", env, {{"rectangular", Envelope::rectangular}, {"hann", Envelope::hann}});
    s.pulse.sample_rate = 8.0 * s.pulse.center_frequency;
    r.read("sample_rate", s.pulse.sample_rate);
    r.finish();
  }
  if (top.has("scene")) {
    ObjectReader r(top.at("scene"), "scene");
    r.read("speed_of_sound", s.scene.speed_of_sound);
    r.read("prf", s.scene.prf);
    if (r.has("noise_snr_db")) {
      double v = 0.0;
      r.read("noise_snr_db", v);
      s.scene.noise_snr_db = v;
    }
    r.read_vec2("velocity", s.scene.velocity);
    if (r.has("points")) {
      const json& pts = r.at("points");
      if (!pts.is_array()) throw config_error("scene.points", "expected an array");
      for (std::size_t k = 0; k < pts.size(); ++k) {
        ObjectReader p(pts[k], "scene.points[" + std::to_string(k) + "]");
        PointSpec ps;
        p.read("x", ps.position.x);
        p.read("z", ps.position.z);
        p.read("reflectivity", ps.reflectivity);
        p.finish();
        s.scene.points.push_back(ps);
      }
    }
    if (r.has("speckle")) {
      ObjectReader p(r.at("speckle"), "scene.speckle");
      SpeckleSpec sp;
      Vec2 lat{sp.lateral_min, sp.lateral_max}, ax{sp.axial_min, sp.axial_max};
      p.read_vec2("lateral", lat);
      p.read_vec2("axial", ax);
      sp.lateral_min = lat.x;
      sp.lateral_max = lat.z;
      sp.axial_min = ax.x;
      sp.axial_max = ax.z;
      p.read("density_per_mm2", sp.density_per_mm2);
      if (p.has("cysts")) {
        const json& cs = p.at("cysts");
        if (!cs.is_array()) throw config_error("scene.speckle.cysts", "expected an array");
        for (std::size_t k = 0; k < cs.size(); ++k) {
          ObjectReader c(cs[k], "scene.speckle.cysts[" + std::to_string(k) + "]");
          Cyst cy;
          c.read("x", cy.center.x);
          c.read("z", cy.center.z);
          c.read("radius", cy.radius);
          c.finish();
          sp.cysts.push_back(cy);
        }
      }
      p.finish();
      if (!(sp.lateral_max > sp.lateral_min) || !(sp.axial_max > sp.axial_min))
        throw config_error("scene.speckle", "lateral/axial ranges must be increasing");
      if (!(sp.density_per_mm2 >= 0.0)) throw config_error("scene.speckle.density_per_mm2", "must be >= 0");
      s.scene.speckle = sp;
    }
    r.finish();
  }
  if (!pitch_given) s.geometry.pitch = s.scene.speed_of_sound / s.pulse.center_frequency;
  s.beamform.speed_of_sound = s.scene.speed_of_sound;

  if (top.has("acquisition")) {
    ObjectReader r(top.at("acquisition"), "acquisition");
    r.read("first_event", s.first_event);
    r.read("acquisitions", s.acquisitions);
    r.finish();
  }
  if (top.has("grouping")) {
    ObjectReader r(top.at("grouping"), "grouping");
    r.read("S", s.groups);
    if (r.has("Q")) {
      int q = 0;
      r.read("Q", q);
      if (q < 1 || s.groups * q != s.geometry.n_elements)
        throw config_error("grouping", "S*Q must equal geometry.n_elements (" + std::to_string(s.groups) + "*" + std::to_string(q) +
                                           " != " + std::to_string(s.geometry.n_elements) + ")");
    }
    r.finish();
  }
  if (top.has("grid")) {
    ObjectReader r(top.at("grid"), "grid");
    r.read_vec2("center", s.grid.center);
    if (r.has("size")) {
      const json& v = r.at("size");
      if (!v.is_array() || v.size() != 2 || !v[0].is_number_integer() || !v[1].is_number_integer())
        throw config_error("grid.size", "expected [nx, nz] in pixels");
      s.grid.nx = v[0].get<int>();
      s.grid.nz = v[1].get<int>();
    }
    r.read("pixel_size", s.grid.pixel_size);
    r.finish();
  }
  if (top.has("beamform")) {
    ObjectReader r(top.at("beamform"), "beamform");
    r.read("fnumber", s.beamform.receive_fnumber);
    std::string ap = s.beamform.apodization == Apodization::hann ? "hann" : "rect";
    r.read("apodization", ap);
    s.beamform.apodization = detail::parse_enum<Apodization>("beamform.apodization", ap, {{"rect", Apodization::rect}, {"hann", Apodization::hann}});
    r.read("cf_weighting", s.beamform.cf_weighting);
    std::string in = s.beamform.interpolation == Interpolation::nearest ? "nearest" : "linear";
    r.read("interpolation", in);
    s.beamform.interpolation =
        detail::parse_enum<Interpolation>("beamform.interpolation", in, {{"linear", Interpolation::linear}, {"nearest", Interpolation::nearest}});
    std::string pr = s.precision == Precision::f64 ? "f64" : "f32";
    r.read("precision", pr);
    s.precision = detail::parse_enum<Precision>("beamform.precision", pr, {{"f32", Precision::f32}, {"f64", Precision::f64}});
    r.read("threads", s.beamform.threads);
    r.finish();
  }
  if (top.has("motion")) {
    ObjectReader r(top.at("motion"), "motion");
    r.read("grid_spacing", s.motion.grid_spacing);
    r.read("ref_patch", s.motion.ref_patch);
    r.read("search_margin", s.motion.search_margin);
    r.read("abs_peak_threshold", s.motion.abs_peak_threshold);
    r.read("rel_peak_threshold", s.motion.rel_peak_threshold);
    r.read("min_curvature", s.motion.min_curvature);
    r.read("reference_index", s.motion.reference_index);
    r.finish();
  }
  s.motion.threads = s.beamform.threads;
  if (top.has("rois")) {
    ObjectReader r(top.at("rois"), "rois");
    if (r.has("inside")) s.roi_inside = detail::parse_roi(r.at("inside"), "rois.inside");
    if (r.has("background")) s.roi_background = detail::parse_roi(r.at("background"), "rois.background");
    r.finish();
  }
  if (top.has("filter")) {
    ObjectReader r(top.at("filter"), "filter");
    r.read("keep", s.keep);
    r.finish();
  }
  if (top.has("outputs")) {
    ObjectReader r(top.at("outputs"), "outputs");
    r.read("images", s.outputs.images);
    r.read("containers", s.outputs.containers);
    r.read("motion_csv", s.outputs.motion_csv);
    r.read("dynamic_range_db", s.outputs.dynamic_range_db);
    r.finish();
  }
  top.finish();
  return s;
}

// Semantic checks, each naming the offending key.
inline void validate(const Scenario& s) {
  auto wrap = [](const std::string& path, auto&& fn) {
    try {
      fn();
    } catch (const error& e) {
      throw config_error(path, e.what());
    }
  };
  wrap("geometry", [&] { s.geometry.validate(); });
  if (s.geometry.n_elements > 1024 || !std::has_single_bit(static_cast<unsigned>(s.geometry.n_elements)))
    throw config_error("geometry.n_elements", "must be a power of two <= 1024 (Sylvester order)");
  wrap("pulse", [&] { s.pulse.validate(); });
  if (!(s.scene.speed_of_sound > 0.0)) throw config_error("scene.speed_of_sound", "must be > 0");
  if (!(s.scene.prf > 0.0)) throw config_error("scene.prf", "must be > 0");
  if (s.scene.points.empty() && !s.scene.speckle) throw config_error("scene", "needs points or speckle");
  for (std::size_t k = 0; k < s.scene.points.size(); ++k)
    if (!(s.scene.points[k].position.z > 0.0)) throw config_error("scene.points[" + std::to_string(k) + "].z", "must be > 0");
  if (s.scene.speckle && !(s.scene.speckle->axial_min > 0.0)) throw config_error("scene.speckle.axial", "must start at z > 0");
  if (s.first_event < 1) throw config_error("acquisition.first_event", "is 1-based");
  if (s.acquisitions < 1) throw config_error("acquisition.acquisitions", "must be >= 1");
  if (s.groups < 1 || s.geometry.n_elements % s.groups != 0 || !std::has_single_bit(static_cast<unsigned>(s.groups)))
    throw config_error("grouping.S", "must be a power of two dividing geometry.n_elements");
  if (s.grid.nx < 1 || s.grid.nz < 1) throw config_error("grid.size", "must be positive");
  if (!(s.grid.pixel_size > 0.0)) throw config_error("grid.pixel_size", "must be > 0");
  if (!(s.grid.grid().z_min > 0.0)) throw config_error("grid", "must lie at z > 0");
  wrap("beamform", [&] { s.beamform.validate(); });
  wrap("motion", [&] { s.motion.validate(); });
  if (s.motion.reference_index >= s.groups) throw config_error("motion.reference_index", "must be < grouping.S");
  if (s.roi_inside && !s.roi_inside->inside_grid(s.grid.grid())) throw config_error("rois.inside", "extends past the grid");
  if (s.roi_background && !s.roi_background->inside_grid(s.grid.grid())) throw config_error("rois.background", "extends past the grid");
  wrap("filter.keep", [&] { (void)parse_keep_set(s.keep); });
  if (!(s.outputs.dynamic_range_db > 0.0)) throw config_error("outputs.dynamic_range_db", "must be > 0");
}

// Fully resolved scenario, defaults filled in.
inline json to_json(const Scenario& s) {
  json j;
  j["name"] = s.name;
  j["seed"] = s.seed;
  j["geometry"] = {{"n_elements", s.geometry.n_elements}, {"pitch", s.geometry.pitch}};
  j["pulse"] = {{"center_frequency", s.pulse.center_frequency},
                {"cycles", s.pulse.cycles},
                {"envelope", s.pulse.envelope == Envelope::hann ? "hann" : "rectangular"},
                {"sample_rate", s.pulse.sample_rate}};
  json scene;
  scene["speed_of_sound"] = s.scene.speed_of_sound;
  scene["prf"] = s.scene.prf;
  scene["noise_snr_db"] = s.scene.noise_snr_db ? json(*s.scene.noise_snr_db) : json(nullptr);
  scene["velocity"] = {s.scene.velocity.x, s.scene.velocity.z};
  scene["points"] = json::array();
  for (const auto& p : s.scene.points) scene["points"].push_back({{"x", p.position.x}, {"z", p.position.z}, {"reflectivity", p.reflectivity}});
  if (s.scene.speckle) {
    const auto& sp = *s.scene.speckle;
    json cy = json::array();
    for (const auto& c : sp.cysts) cy.push_back({{"x", c.center.x}, {"z", c.center.z}, {"radius", c.radius}});
    scene["speckle"] = {{"lateral", {sp.lateral_min, sp.lateral_max}},
                        {"axial", {sp.axial_min, sp.axial_max}},
                        {"density_per_mm2", sp.density_per_mm2},
                        {"cysts", cy}};
  } else {
    scene["speckle"] = nullptr;
  }
  j["scene"] = scene;
  j["acquisition"] = {{"first_event", s.first_event}, {"acquisitions", s.acquisitions}};
  j["grouping"] = {{"S", s.groups}, {"Q", s.geometry.n_elements / std::max(1, s.groups)}};
  j["grid"] = {{"center", {s.grid.center.x, s.grid.center.z}}, {"size", {s.grid.nx, s.grid.nz}}, {"pixel_size", s.grid.pixel_size}};
  j["beamform"] = {{"fnumber", s.beamform.receive_fnumber},
                   {"apodization", s.beamform.apodization == Apodization::hann ? "hann" : "rect"},
                   {"cf_weighting", s.beamform.cf_weighting},
                   {"interpolation", s.beamform.interpolation == Interpolation::nearest ? "nearest" : "linear"},
                   {"precision", s.precision == Precision::f64 ? "f64" : "f32"},
                   {"threads", s.beamform.threads}};
  j["motion"] = {{"grid_spacing", s.motion.grid_spacing},
                 {"ref_patch", s.motion.ref_patch},
                 {"search_margin", s.motion.search_margin},
                 {"abs_peak_threshold", s.motion.abs_peak_threshold},
                 {"rel_peak_threshold", s.motion.rel_peak_threshold},
                 {"min_curvature", s.motion.min_curvature},
                 {"reference_index", s.motion.reference_index}};
  json rois = json::object();
  if (s.roi_inside) rois["inside"] = detail::roi_json(*s.roi_inside);
  if (s.roi_background) rois["background"] = detail::roi_json(*s.roi_background);
  j["rois"] = rois;
  j["filter"] = {{"keep", s.keep}};
  j["outputs"] = {{"images", s.outputs.images},
                  {"containers", s.outputs.containers},
                  {"motion_csv", s.outputs.motion_csv},
                  {"dynamic_range_db", s.outputs.dynamic_range_db}};
  return j;
}

inline json load_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw config_error("--scenario", "cannot open scenario file " + path.string());
  try {
    return json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw config_error(path.string(), std::string("JSON parse error: ") + e.what());
  }
}

// Point scatterers plus seeded speckle, all moving with the scene velocity.
inline ScattererScene build_scene(const Scenario& s) {
  ScattererScene scene;
  scene.speed_of_sound = s.scene.speed_of_sound;
  scene.prf = s.scene.prf;
  scene.noise_snr_db = s.scene.noise_snr_db;
  scene.rng_seed = s.seed;
  for (const auto& p : s.scene.points) scene.scatterers.push_back({p.position, s.scene.velocity, p.reflectivity});
  if (s.scene.speckle) {
    auto sp = *s.scene.speckle;
    sp.velocity = s.scene.velocity;
    const auto speckle = make_speckle(sp, s.seed);
    scene.scatterers.insert(scene.scatterers.end(), speckle.begin(), speckle.end());
  }
  return scene;
}

}  // namespace readi
