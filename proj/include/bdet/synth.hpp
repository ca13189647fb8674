#pragma once

#include <cstdint>
#include <vector>

#include "bdet/geometry.hpp"
#include "bdet/imagery.hpp"

namespace bdet {

/// Rectangular roof with a drop shadow. `rotation` (degrees) is the direction
/// of the `width` side in image coordinates.
struct BuildingSpec {
  PointD center;
  double width = 0.0;
  double height = 0.0;
  double rotation = 0.0;
  Rgb roof{200, 200, 200};
  PointD shadow_offset{4.0, 4.0};
  double ridge_shade = 0.0;  // gabled roof: the +v half is darkened by this fraction
};

/// Elliptical clutter: tree crowns, tanks, ponds. Elevated ones cast a
/// shadow like buildings do; a zero offset means none.
struct DistractorSpec {
  PointD center;
  double radius_x = 0.0;
  double radius_y = 0.0;
  double rotation = 0.0;
  Rgb color{60, 80, 50};
  PointD shadow_offset{0.0, 0.0};
};

struct SceneSpec {
  int width = 0;
  int height = 0;
  std::vector<BuildingSpec> buildings;
  std::vector<DistractorSpec> distractors;
  Rgb background{110, 115, 100};
  double noise_sigma = 6.0;     // per-pixel Gaussian luminance noise
  double roof_texture = 3.0;    // extra noise on roofs
  double shadow_factor = 0.3;   // shadow luminance relative to background
  std::uint64_t seed = 0;
};

struct Scene {
  RgbImage image;
  std::vector<BBox> gt;          // axis-aligned bounds of the roofs
  std::vector<double> angles;    // roof rotation, degrees in [0, 180)
};

/// Roof corners in image coordinates.
std::array<PointD, 4> roof_corners(const BuildingSpec& b);
BBox roof_bounds(const BuildingSpec& b);

/// Renders the scene. Throws std::invalid_argument when a building (with its
/// shadow) leaves the image or two roofs overlap by more than 10% of the
/// smaller roof's bounding box.
Scene synth_scene(const SceneSpec& spec);

struct SceneStyle {
  int cell = 110;                    // one object per cell, jittered inside it
  double building_probability = 0.65;
  double distractor_probability = 0.25;
  double bright_distractor_fraction = 0.5;  // roof-bright clutter
  double elevated_distractor_fraction = 0.7;  // clutter casting a shadow
  double gable_fraction = 0.5;
  double min_side = 24.0;
  double max_side = 72.0;
  double shadow = 4.0;
};

/// Random scene on a jittered grid, so object count scales with area.
SceneSpec random_scene_spec(int width, int height, std::uint64_t seed, const SceneStyle& style = {});

/// Random tiles laid side by side. Sizes must be whole multiples. With
/// `repeat_tile` every tile has the same layout, so content is exactly
/// proportional to area; otherwise tiles are independent.
SceneSpec tiled_scene_spec(int width, int height, int tile_width, int tile_height, std::uint64_t seed,
                           const SceneStyle& style = {}, bool repeat_tile = false);

}  // namespace bdet
