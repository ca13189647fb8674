#include "bdet/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

namespace bdet {

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

// Sub-pixel sample offsets for anti-aliased coverage.
constexpr std::array<double, 4> kSub{-0.375, -0.125, 0.125, 0.375};

struct Shape {
  PointD center;
  double half_u = 0.0;
  double half_v = 0.0;
  double cos_a = 1.0;
  double sin_a = 0.0;
  bool ellipse = false;

  [[nodiscard]] bool contains(double x, double y) const {
    const double dx = x - center.x;
    const double dy = y - center.y;
    const double u = dx * cos_a + dy * sin_a;
    const double v = -dx * sin_a + dy * cos_a;
    if (ellipse) {
      const double a = u / half_u;
      const double b = v / half_v;
      return a * a + b * b <= 1.0;
    }
    return std::abs(u) <= half_u && std::abs(v) <= half_v;
  }

  [[nodiscard]] double coverage(int x, int y) const {
    int hits = 0;
    for (double oy : kSub)
      for (double ox : kSub) hits += contains(x + ox, y + oy) ? 1 : 0;
    return hits / 16.0;
  }

  [[nodiscard]] double reach() const { return std::hypot(half_u, half_v); }
};

Shape roof_shape(const BuildingSpec& b, PointD offset = {0.0, 0.0}) {
  return {{b.center.x + offset.x, b.center.y + offset.y}, b.width / 2.0, b.height / 2.0,
          std::cos(b.rotation * kDeg), std::sin(b.rotation * kDeg), false};
}

struct Canvas {
  int width;
  int height;
  std::vector<double> r, g, b;

  Canvas(int w, int h, Rgb bg)
      : width(w), height(h), r(std::size_t(w) * h, bg.r), g(std::size_t(w) * h, bg.g),
        b(std::size_t(w) * h, bg.b) {}

  void paint(const Shape& s, double cr, double cg, double cb) {
    const double reach = s.reach() + 1.0;
    const int x0 = std::max(0, static_cast<int>(std::floor(s.center.x - reach)));
    const int x1 = std::min(width - 1, static_cast<int>(std::ceil(s.center.x + reach)));
    const int y0 = std::max(0, static_cast<int>(std::floor(s.center.y - reach)));
    const int y1 = std::min(height - 1, static_cast<int>(std::ceil(s.center.y + reach)));
    for (int y = y0; y <= y1; ++y) {
      for (int x = x0; x <= x1; ++x) {
        const double c = s.coverage(x, y);
        if (c <= 0.0) continue;
        const std::size_t i = std::size_t(y) * width + x;
        r[i] += c * (cr - r[i]);
        g[i] += c * (cg - g[i]);
        b[i] += c * (cb - b[i]);
      }
    }
  }
};

std::uint8_t clamp8(double v) {
  return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
}

double normalize_angle(double a) {
  double r = std::fmod(a, 180.0);
  if (r < 0.0) r += 180.0;
  return r;
}

}  // namespace

std::array<PointD, 4> roof_corners(const BuildingSpec& b) {
  const double c = std::cos(b.rotation * kDeg);
  const double s = std::sin(b.rotation * kDeg);
  const double hu = b.width / 2.0;
  const double hv = b.height / 2.0;
  std::array<PointD, 4> out;
  const std::array<std::pair<double, double>, 4> uv{{{-hu, -hv}, {hu, -hv}, {hu, hv}, {-hu, hv}}};
  for (std::size_t i = 0; i < 4; ++i) {
    const auto [u, v] = uv[i];
    out[i] = {b.center.x + u * c - v * s, b.center.y + u * s + v * c};
  }
  return out;
}

BBox roof_bounds(const BuildingSpec& b) {
  const auto pts = roof_corners(b);
  BBox box{pts[0].x, pts[0].y, pts[0].x, pts[0].y};
  for (const PointD& p : pts) {
    box.left = std::min(box.left, p.x);
    box.top = std::min(box.top, p.y);
    box.right = std::max(box.right, p.x);
    box.bottom = std::max(box.bottom, p.y);
  }
  return box;
}

Scene synth_scene(const SceneSpec& spec) {
  if (spec.width < 1 || spec.height < 1) throw std::invalid_argument("scene size must be positive");
  if (spec.noise_sigma < 0.0 || spec.roof_texture < 0.0)
    throw std::invalid_argument("noise levels must be non-negative");
  for (const BuildingSpec& b : spec.buildings)
    if (b.ridge_shade < 0.0 || b.ridge_shade >= 1.0)
      throw std::invalid_argument("ridge shade must lie in [0, 1)");
  if (spec.shadow_factor < 0.0 || spec.shadow_factor > 1.0)
    throw std::invalid_argument("shadow factor must lie in [0, 1]");

  std::vector<BBox> bounds;
  for (const BuildingSpec& b : spec.buildings) {
    if (!(b.width > 0.0) || !(b.height > 0.0))
      throw std::invalid_argument("building sides must be positive");
    const BBox rb = roof_bounds(b);
    const BBox sb{rb.left + std::min(0.0, b.shadow_offset.x), rb.top + std::min(0.0, b.shadow_offset.y),
                  rb.right + std::max(0.0, b.shadow_offset.x),
                  rb.bottom + std::max(0.0, b.shadow_offset.y)};
    if (sb.left < 0.0 || sb.top < 0.0 || sb.right > spec.width - 1 || sb.bottom > spec.height - 1)
      throw std::invalid_argument("building leaves the image");
    for (const BBox& other : bounds) {
      const double iw = std::min(rb.right, other.right) - std::max(rb.left, other.left);
      const double ih = std::min(rb.bottom, other.bottom) - std::max(rb.top, other.top);
      if (iw <= 0.0 || ih <= 0.0) continue;
      if (iw * ih > 0.1 * std::min(rb.area(), other.area()))
        throw std::invalid_argument("buildings overlap by more than 10%");
    }
    bounds.push_back(rb);
  }

  Canvas canvas(spec.width, spec.height, spec.background);
  const double f = spec.shadow_factor;
  std::vector<Shape> clutter;
  for (const DistractorSpec& d : spec.distractors) {
    if (!(d.radius_x > 0.0) || !(d.radius_y > 0.0))
      throw std::invalid_argument("distractor radii must be positive");
    clutter.push_back({d.center, d.radius_x, d.radius_y, std::cos(d.rotation * kDeg),
                       std::sin(d.rotation * kDeg), true});
    if (d.shadow_offset.x != 0.0 || d.shadow_offset.y != 0.0) {
      Shape shadow = clutter.back();
      shadow.center = {d.center.x + d.shadow_offset.x, d.center.y + d.shadow_offset.y};
      canvas.paint(shadow, spec.background.r * f, spec.background.g * f, spec.background.b * f);
    }
  }
  for (std::size_t i = 0; i < clutter.size(); ++i) {
    const Rgb c = spec.distractors[i].color;
    canvas.paint(clutter[i], c.r, c.g, c.b);
  }
  for (const BuildingSpec& b : spec.buildings) {
    canvas.paint(roof_shape(b, b.shadow_offset), spec.background.r * f, spec.background.g * f,
                 spec.background.b * f);
  }
  std::vector<double> roof_mask(std::size_t(spec.width) * spec.height, 0.0);
  for (const BuildingSpec& b : spec.buildings) {
    const Shape s = roof_shape(b);
    canvas.paint(s, b.roof.r, b.roof.g, b.roof.b);
    if (b.ridge_shade > 0.0) {
      const double q = b.height / 4.0;
      Shape half = s;
      half.center = {s.center.x - q * s.sin_a, s.center.y + q * s.cos_a};
      half.half_v = q;
      const double k = 1.0 - b.ridge_shade;
      canvas.paint(half, b.roof.r * k, b.roof.g * k, b.roof.b * k);
    }
    const double reach = s.reach() + 1.0;
    const int x0 = std::max(0, static_cast<int>(std::floor(s.center.x - reach)));
    const int x1 = std::min(spec.width - 1, static_cast<int>(std::ceil(s.center.x + reach)));
    const int y0 = std::max(0, static_cast<int>(std::floor(s.center.y - reach)));
    const int y1 = std::min(spec.height - 1, static_cast<int>(std::ceil(s.center.y + reach)));
    for (int y = y0; y <= y1; ++y)
      for (int x = x0; x <= x1; ++x)
        roof_mask[std::size_t(y) * spec.width + x] =
            std::max(roof_mask[std::size_t(y) * spec.width + x], s.coverage(x, y));
  }

  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  Scene scene{RgbImage(spec.width, spec.height), {}, {}};
  for (std::size_t i = 0; i < roof_mask.size(); ++i) {
    const double n = noise(rng) * spec.noise_sigma + noise(rng) * spec.roof_texture * roof_mask[i];
    scene.image.pixels()[i] = {clamp8(canvas.r[i] + n), clamp8(canvas.g[i] + n),
                               clamp8(canvas.b[i] + n)};
  }
  scene.gt = bounds;
  for (const BuildingSpec& b : spec.buildings) scene.angles.push_back(normalize_angle(b.rotation));
  return scene;
}

SceneSpec random_scene_spec(int width, int height, std::uint64_t seed, const SceneStyle& style) {
  if (width < 1 || height < 1) throw std::invalid_argument("scene size must be positive");
  if (style.cell < 8) throw std::invalid_argument("cell must be at least 8 px");
  if (!(style.min_side > 0.0) || style.max_side < style.min_side)
    throw std::invalid_argument("building side range is invalid");

  SceneSpec spec;
  spec.width = width;
  spec.height = height;
  spec.seed = seed ^ 0x9e3779b97f4a7c15ULL;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto uniform = [&](double a, double b) { return a + (b - a) * unit(rng); };

  const int border = 8;
  const int nx = std::max(0, (width - 2 * border) / style.cell);
  const int ny = std::max(0, (height - 2 * border) / style.cell);
  const double ox = (width - nx * style.cell) / 2.0;
  const double oy = (height - ny * style.cell) / 2.0;
  const double half = style.cell / 2.0;

  for (int cy = 0; cy < ny; ++cy) {
    for (int cx = 0; cx < nx; ++cx) {
      const PointD cell_center{ox + cx * style.cell + half, oy + cy * style.cell + half};
      const double pick = unit(rng);
      if (pick < style.building_probability) {
        BuildingSpec b;
        b.width = uniform(style.min_side, style.max_side);
        b.height = uniform(style.min_side, style.max_side);
        b.rotation = uniform(0.0, 180.0);
        const double reach = std::hypot(b.width, b.height) / 2.0 + style.shadow + 2.0;
        if (reach > half) {
          const double k = (half - style.shadow - 2.0) / (reach - style.shadow - 2.0);
          b.width *= k;
          b.height *= k;
        }
        const double slack = std::max(0.0, half - (std::hypot(b.width, b.height) / 2.0 + style.shadow + 2.0));
        b.center = {cell_center.x + uniform(-slack, slack), cell_center.y + uniform(-slack, slack)};
        const double lum = uniform(170.0, 235.0);
        const double tint = uniform(-15.0, 15.0);
        b.roof = {clamp8(lum + tint), clamp8(lum), clamp8(lum - tint)};
        b.shadow_offset = {style.shadow, style.shadow};
        if (unit(rng) < style.gable_fraction) b.ridge_shade = uniform(0.1, 0.25);
        spec.buildings.push_back(b);
      } else if (pick < style.building_probability + style.distractor_probability) {
        DistractorSpec d;
        d.radius_x = uniform(8.0, half - style.shadow - 6.0);
        d.radius_y = uniform(8.0, half - style.shadow - 6.0);
        d.rotation = uniform(0.0, 180.0);
        const double slack = std::max(0.0, half - std::max(d.radius_x, d.radius_y) - style.shadow - 2.0);
        d.center = {cell_center.x + uniform(-slack, slack), cell_center.y + uniform(-slack, slack)};
        if (unit(rng) < style.bright_distractor_fraction) {
          const double lum = uniform(160.0, 230.0);
          d.color = {clamp8(lum), clamp8(lum * 0.95), clamp8(lum * 0.85)};
        } else {
          const double shade = uniform(40.0, 90.0);
          d.color = {clamp8(shade * 0.7), clamp8(shade), clamp8(shade * 0.6)};
        }
        if (unit(rng) < style.elevated_distractor_fraction) d.shadow_offset = {style.shadow, style.shadow};
        spec.distractors.push_back(d);
      }
    }
  }
  return spec;
}

SceneSpec tiled_scene_spec(int width, int height, int tile_width, int tile_height, std::uint64_t seed,
                           const SceneStyle& style, bool repeat_tile) {
  if (tile_width < 1 || tile_height < 1 || width < tile_width || height < tile_height ||
      width % tile_width != 0 || height % tile_height != 0)
    throw std::invalid_argument("scene size must be a whole number of tiles");
  SceneSpec spec;
  spec.width = width;
  spec.height = height;
  spec.seed = seed ^ 0x9e3779b97f4a7c15ULL;
  const int nx = width / tile_width;
  const int ny = height / tile_height;
  for (int ty = 0; ty < ny; ++ty) {
    for (int tx = 0; tx < nx; ++tx) {
      const std::uint64_t k =
          repeat_tile ? 0 : static_cast<std::uint64_t>(ty) * static_cast<std::uint64_t>(nx) + static_cast<std::uint64_t>(tx);
      SceneSpec tile = random_scene_spec(tile_width, tile_height, seed * 1000003ULL + k, style);
      const PointD origin{static_cast<double>(tx * tile_width), static_cast<double>(ty * tile_height)};
      for (BuildingSpec& b : tile.buildings) {
        b.center = {b.center.x + origin.x, b.center.y + origin.y};
        spec.buildings.push_back(b);
      }
      for (DistractorSpec& d : tile.distractors) {
        d.center = {d.center.x + origin.x, d.center.y + origin.y};
        spec.distractors.push_back(d);
      }
    }
  }
  return spec;
}

}  // namespace bdet
