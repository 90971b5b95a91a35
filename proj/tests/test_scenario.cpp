// SPDX-License-Identifier: Apache-2.0
#include <filesystem>
#include <string>

#include <gtest/gtest.h>

#include "readi/scenario.hpp"

using namespace readi;

namespace {

Scenario parse(const std::string& text) { return parse_scenario(json::parse(text)); }

std::string error_path(const std::string& text) {
  try {
    validate(parse(text));
  } catch (const config_error& e) {
    return e.path();
  }
  return "<none>";
}

}  // namespace

TEST(Scenario, DefaultsFromEmptyObject) {
  const auto s = parse("{}");
  EXPECT_EQ(s.geometry.n_elements, 128);
  EXPECT_DOUBLE_EQ(s.geometry.pitch, 1540.0 / 4.3e6);
  EXPECT_DOUBLE_EQ(s.pulse.sample_rate, 8.0 * 4.3e6);
  EXPECT_EQ(s.groups, 8);
  EXPECT_EQ(s.precision, Precision::f32);
  EXPECT_TRUE(s.beamform.cf_weighting);
  EXPECT_EQ(s.keep, "2-16");
  // an empty scene is rejected by validation, not parsing
  EXPECT_EQ(error_path("{}"), "scene");
}

TEST(Scenario, PitchAndSampleRateFollowPhysics) {
  const auto s = parse(R"({"pulse": {"center_frequency": 2e6}, "scene": {"speed_of_sound": 1500}})");
  EXPECT_DOUBLE_EQ(s.geometry.pitch, 1500.0 / 2e6);
  EXPECT_DOUBLE_EQ(s.pulse.sample_rate, 16e6);
  EXPECT_DOUBLE_EQ(s.beamform.speed_of_sound, 1500.0);
  const auto t = parse(R"({"geometry": {"pitch": 3e-4}, "pulse": {"sample_rate": 5e7}})");
  EXPECT_DOUBLE_EQ(t.geometry.pitch, 3e-4);
  EXPECT_DOUBLE_EQ(t.pulse.sample_rate, 5e7);
}

TEST(Scenario, UnknownKeysAreRejectedWithPath) {
  for (const auto& [doc, path] : std::vector<std::pair<std::string, std::string>>{
           {R"({"colour": 1})", "colour"},
           {R"({"geometry": {"elements": 4}})", "geometry.elements"},
           {R"({"scene": {"points": [{"x": 0, "y": 1}]}})", "scene.points[0].y"},
           {R"({"motion": {"patch": 3}})", "motion.patch"}}) {
    try {
      (void)parse(doc);
      FAIL() << doc;
    } catch (const config_error& e) {
      EXPECT_EQ(e.path(), path);
    }
  }
}

TEST(Scenario, WrongTypesAndEnums) {
  EXPECT_THROW((void)parse(R"({"geometry": {"n_elements": "many"}})"), config_error);
  EXPECT_THROW((void)parse(R"({"pulse": {"envelope": "gauss"}})"), config_error);
  EXPECT_THROW((void)parse(R"({"beamform": {"precision": "f16"}})"), config_error);
  EXPECT_THROW((void)parse(R"({"grid": {"size": [10]}})"), config_error);
}

TEST(Scenario, GroupingMustFactorElementCount) {
  EXPECT_THROW((void)parse(R"({"geometry": {"n_elements": 16}, "grouping": {"S": 4, "Q": 8}})"), config_error);
  EXPECT_NO_THROW((void)parse(R"({"geometry": {"n_elements": 16}, "grouping": {"S": 4, "Q": 4}})"));
  const std::string base = R"({"geometry": {"n_elements": 16}, "scene": {"points": [{"x": 0, "z": 0.02}]}, "grouping": {"S": 3}})";
  EXPECT_EQ(error_path(base), "grouping.S");
  EXPECT_EQ(error_path(R"({"geometry": {"n_elements": 12}, "scene": {"points": [{"x": 0, "z": 0.02}]}, "grouping": {"S": 4}})"),
            "geometry.n_elements");
}

TEST(Scenario, SemanticChecksNameTheKey) {
  const std::string pt = R"("scene": {"points": [{"x": 0, "z": 0.02}]})";
  EXPECT_EQ(error_path("{" + pt + R"(, "geometry": {"n_elements": 16}, "grouping": {"S": 2}})"), "<none>");
  EXPECT_EQ(error_path("{" + pt + R"(, "pulse": {"sample_rate": 1e6}})"), "pulse");
  EXPECT_EQ(error_path("{" + pt + R"(, "grid": {"pixel_size": 0}})"), "grid.pixel_size");
  EXPECT_EQ(error_path("{" + pt + R"(, "motion": {"reference_index": 8}})"), "motion.reference_index");
  EXPECT_EQ(error_path("{" + pt + R"(, "filter": {"keep": "9-2"}})"), "filter.keep");
  EXPECT_EQ(error_path("{" + pt + R"(, "rois": {"inside": {"center": [0, 0.02], "radius": 0.5}}})"), "rois.inside");
  EXPECT_EQ(error_path("{" + pt + R"(, "acquisition": {"first_event": 0}})"), "acquisition.first_event");
}

TEST(Scenario, OverridesCreateAndReplace) {
  json doc = json::parse(R"({"grouping": {"S": 8}})");
  apply_override(doc, "grouping.S=4");
  apply_override(doc, "beamform.precision=f64");
  apply_override(doc, "scene.velocity=[0.1, 0]");
  apply_override(doc, "name=probe");
  EXPECT_EQ(doc["grouping"]["S"], 4);
  EXPECT_EQ(doc["beamform"]["precision"], "f64");
  EXPECT_EQ(doc["scene"]["velocity"][0], 0.1);
  EXPECT_EQ(doc["name"], "probe");
  EXPECT_THROW(apply_override(doc, "novalue"), config_error);
  EXPECT_THROW(apply_override(doc, "a..b=1"), config_error);
  EXPECT_THROW(apply_override(doc, "name.sub=1"), config_error);
}

TEST(Scenario, ResolvedJsonRoundTrips) {
  const auto s = parse(R"({"geometry": {"n_elements": 32}, "grouping": {"S": 4},
      "scene": {"noise_snr_db": 20, "velocity": [0.1, -0.05], "points": [{"x": 0.001, "z": 0.02, "reflectivity": 0.5}],
                "speckle": {"lateral": [-0.002, 0.002], "axial": [0.018, 0.022], "density_per_mm2": 3,
                            "cysts": [{"x": 0, "z": 0.02, "radius": 0.001}]}},
      "rois": {"inside": {"center": [0, 0.02], "radius": 0.0008},
               "background": {"shape": "rectangle", "center": [0.002, 0.02], "size": [0.001, 0.002]}},
      "beamform": {"apodization": "hann", "interpolation": "nearest", "precision": "f64"},
      "motion": {"grid_spacing": 8}, "filter": {"keep": "1,3-5"}})");
  const auto j = to_json(s);
  const auto again = parse_scenario(j);
  EXPECT_EQ(to_json(again).dump(), j.dump());
  EXPECT_EQ(again.groups, 4);
  EXPECT_EQ(again.motion.grid_spacing, 8);
  ASSERT_TRUE(again.roi_background.has_value());
  EXPECT_EQ(again.roi_background->shape, RoiShape::rectangle);
  // a provenance block from an earlier run is tolerated
  auto with_prov = j;
  with_prov["provenance"] = {{"subcommand", "simulate"}};
  EXPECT_NO_THROW((void)parse_scenario(with_prov));
}

TEST(Scenario, BuildSceneIsSeeded) {
  const auto s = parse(R"({"seed": 5, "scene": {"velocity": [0, 0.2], "points": [{"x": 0, "z": 0.02}],
      "speckle": {"lateral": [-0.001, 0.001], "axial": [0.019, 0.021], "density_per_mm2": 10}}})");
  const auto a = build_scene(s), b = build_scene(s);
  ASSERT_EQ(a.scatterers.size(), 41u);
  for (std::size_t k = 0; k < a.scatterers.size(); ++k) {
    EXPECT_EQ(a.scatterers[k].position, b.scatterers[k].position);
    EXPECT_EQ(a.scatterers[k].velocity, (Vec2{0.0, 0.2}));
  }
  EXPECT_EQ(a.rng_seed, 5u);
}

TEST(Scenario, ShippedScenariosValidate) {
  int count = 0;
  for (const auto& entry : std::filesystem::directory_iterator(READI_SCENARIO_DIR)) {
    if (entry.path().extension() != ".json") continue;
    ++count;
    SCOPED_TRACE(entry.path().string());
    Scenario s;
    ASSERT_NO_THROW(s = parse_scenario(load_json(entry.path())));
    EXPECT_NO_THROW(validate(s));
  }
  EXPECT_GE(count, 4);
  EXPECT_THROW((void)load_json("/nonexistent/scenario.json"), config_error);
}
