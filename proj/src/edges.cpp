#include "bdet/edges.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace bdet {

namespace {

constexpr int kKernelRadius = 2;
constexpr double kSigma = 1.4;

std::array<float, 2 * kKernelRadius + 1> gaussian_kernel() {
  std::array<float, 2 * kKernelRadius + 1> k{};
  double total = 0.0;
  std::array<double, 2 * kKernelRadius + 1> raw{};
  for (int i = -kKernelRadius; i <= kKernelRadius; ++i) {
    raw[static_cast<std::size_t>(i + kKernelRadius)] = std::exp(-(i * i) / (2.0 * kSigma * kSigma));
    total += raw[static_cast<std::size_t>(i + kKernelRadius)];
  }
  for (std::size_t i = 0; i < k.size(); ++i) k[i] = static_cast<float>(raw[i] / total);
  return k;
}

inline int clampi(int v, int lo, int hi) { return v < lo ? lo : (v > hi ? hi : v); }

GradientBin quantize(float gx, float gy) {
  double deg = std::atan2(static_cast<double>(gy), static_cast<double>(gx)) * 180.0 / std::numbers::pi;
  if (deg < 0.0) deg += 180.0;
  if (deg >= 180.0) deg -= 180.0;
  if (deg < 22.5 || deg >= 157.5) return GradientBin::Deg0;
  if (deg < 67.5) return GradientBin::Deg45;
  if (deg < 112.5) return GradientBin::Deg90;
  return GradientBin::Deg135;
}

}  // namespace

void ThresholdPair::validate() const {
  if (!(low >= 0.0 && low <= high && high <= 1.0)) {
    throw std::invalid_argument("threshold pair must satisfy 0 <= low <= high <= 1, got (" +
                                std::to_string(low) + ", " + std::to_string(high) + ")");
  }
}

std::size_t EdgeMap::count() const {
  return static_cast<std::size_t>(std::count(edges_.begin(), edges_.end(), std::uint8_t{1}));
}

GrayImage EdgeMap::to_image() const {
  std::vector<std::uint8_t> px(edges_.size());
  std::transform(edges_.begin(), edges_.end(), px.begin(),
                 [](std::uint8_t e) { return static_cast<std::uint8_t>(e ? 255 : 0); });
  return GrayImage(width_, height_, std::move(px));
}

GradientField gradient(const GrayImage& img) {
  const int w = img.width();
  const int h = img.height();
  if (w < 3 || h < 3) {
    throw std::invalid_argument("gradient needs at least a 3x3 image, got " + std::to_string(w) +
                                "x" + std::to_string(h));
  }
  const auto kernel = gaussian_kernel();
  const std::size_t n = static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
  const auto& src = img.pixels();

  // Separable smoothing, replicated border.
  std::vector<float> tmp(n);
  std::vector<float> smooth(n);
  for (int y = 0; y < h; ++y) {
    const std::size_t row = static_cast<std::size_t>(y) * static_cast<std::size_t>(w);
    for (int x = 0; x < w; ++x) {
      float acc = 0.0f;
      for (int k = -kKernelRadius; k <= kKernelRadius; ++k) {
        acc += kernel[static_cast<std::size_t>(k + kKernelRadius)] *
               static_cast<float>(src[row + static_cast<std::size_t>(clampi(x + k, 0, w - 1))]);
      }
      tmp[row + static_cast<std::size_t>(x)] = acc;
    }
  }
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      float acc = 0.0f;
      for (int k = -kKernelRadius; k <= kKernelRadius; ++k) {
        const int yy = clampi(y + k, 0, h - 1);
        acc += kernel[static_cast<std::size_t>(k + kKernelRadius)] *
               tmp[static_cast<std::size_t>(yy) * static_cast<std::size_t>(w) +
                   static_cast<std::size_t>(x)];
      }
      smooth[static_cast<std::size_t>(y) * static_cast<std::size_t>(w) + static_cast<std::size_t>(x)] = acc;
    }
  }

  GradientField field;
  field.width = w;
  field.height = h;
  field.magnitude.assign(n, 0.0f);
  field.direction.assign(n, GradientBin::None);
  std::vector<float> gxs(n);
  std::vector<float> gys(n);
  auto s = [&](int x, int y) {
    return smooth[static_cast<std::size_t>(clampi(y, 0, h - 1)) * static_cast<std::size_t>(w) +
                  static_cast<std::size_t>(clampi(x, 0, w - 1))];
  };
  float peak = 0.0f;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const float gx = (s(x + 1, y - 1) + 2.0f * s(x + 1, y) + s(x + 1, y + 1)) -
                       (s(x - 1, y - 1) + 2.0f * s(x - 1, y) + s(x - 1, y + 1));
      const float gy = (s(x - 1, y + 1) + 2.0f * s(x, y + 1) + s(x + 1, y + 1)) -
                       (s(x - 1, y - 1) + 2.0f * s(x, y - 1) + s(x + 1, y - 1));
      const std::size_t i = static_cast<std::size_t>(y) * static_cast<std::size_t>(w) +
                            static_cast<std::size_t>(x);
      gxs[i] = gx;
      gys[i] = gy;
      const float m = std::sqrt(gx * gx + gy * gy);
      field.magnitude[i] = m;
      peak = std::max(peak, m);
    }
  }
  // Float noise from the smoothing pass can leave tiny non-zero gradients on
  // constant images; treat anything at that level as no contrast.
  constexpr float kNoContrast = 1e-3f;
  if (peak <= kNoContrast) {
    std::fill(field.magnitude.begin(), field.magnitude.end(), 0.0f);
    return field;
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (field.magnitude[i] <= kNoContrast) {
      field.magnitude[i] = 0.0f;
      continue;
    }
    field.magnitude[i] /= peak;
    field.direction[i] = quantize(gxs[i], gys[i]);
  }
  return field;
}

SuppressedGradient::SuppressedGradient(const GrayImage& img) { suppress(gradient(img)); }

SuppressedGradient::SuppressedGradient(const GradientField& field) { suppress(field); }

void SuppressedGradient::suppress(const GradientField& field) {
  width_ = field.width;
  height_ = field.height;
  ridge_.assign(field.magnitude.size(), 0.0f);
  std::vector<RidgePixel> raster;
  level_.assign(field.magnitude.size(), 0);
  auto mag = [&](int x, int y) -> float {
    if (x < 0 || y < 0 || x >= width_ || y >= height_) return 0.0f;
    return field.mag(x, y);
  };
  for (int y = 0; y < height_; ++y) {
    for (int x = 0; x < width_; ++x) {
      const float m = field.mag(x, y);
      if (m <= 0.0f) continue;
      int dx = 0;
      int dy = 0;
      switch (field.dir(x, y)) {
        case GradientBin::Deg0: dx = 1; dy = 0; break;
        case GradientBin::Deg45: dx = 1; dy = 1; break;
        case GradientBin::Deg90: dx = 0; dy = 1; break;
        case GradientBin::Deg135: dx = -1; dy = 1; break;
        case GradientBin::None: continue;
      }
      // Strict on one side, inclusive on the other: a symmetric plateau of
      // width two keeps exactly one pixel.
      if (m > mag(x - dx, y - dy) && m >= mag(x + dx, y + dy)) {
        const std::size_t i = static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
                              static_cast<std::size_t>(x);
        ridge_[i] = m;
        raster.push_back({static_cast<std::uint32_t>(i), m});
        level_[i] = static_cast<std::uint8_t>(1 + std::min(kBands - 1, static_cast<int>(m * kBands)));
      }
    }
  }
  // Stable counting sort into bands keeps each pair's seed walk short and
  // sequential.
  auto band = [](float m) { return kBands - 1 - std::min(kBands - 1, static_cast<int>(m * kBands)); };
  band_start_.assign(kBands + 1, 0);
  for (const RidgePixel& r : raster) ++band_start_[static_cast<std::size_t>(band(r.magnitude)) + 1];
  for (int b = 0; b < kBands; ++b) band_start_[static_cast<std::size_t>(b) + 1] += band_start_[static_cast<std::size_t>(b)];
  ridge_pixels_.resize(raster.size());
  std::vector<std::size_t> fill(band_start_.begin(), band_start_.end() - 1);
  for (const RidgePixel& r : raster) ridge_pixels_[fill[static_cast<std::size_t>(band(r.magnitude))]++] = r;
}

EdgeMap SuppressedGradient::hysteresis(const ThresholdPair& t) const {
  EdgeMap out(width_, height_);
  // low > high only occurs on the comparison Cartesian grid: nothing is
  // in-band, so edges are the pixels clearing both thresholds.
  const float high = static_cast<float>(std::max(t.low, t.high));
  const float low = static_cast<float>(std::min(t.low, t.high));
  std::vector<std::uint32_t> stack;
  auto& cells = out.data();
  // Bands wholly below `high` hold no seeds.
  const int last_band = kBands - 1 - std::min(kBands - 1, static_cast<int>(high * kBands));
  const std::size_t end = band_start_[static_cast<std::size_t>(last_band) + 1];
  // Neighbour test on one byte per pixel; the float is read only when the
  // pixel shares the low threshold's band.
  const int low_level = 1 + std::min(kBands - 1, static_cast<int>(low * kBands));
  auto clears_low = [&](std::size_t j) {
    const int lv = level_[j];
    return lv > low_level || (lv == low_level && ridge_[j] >= low);
  };
  for (std::size_t k = 0; k < end; ++k) {
    const auto [seed, magnitude] = ridge_pixels_[k];
    if (magnitude < high || cells[seed]) continue;
    cells[seed] = 1;
    stack.push_back(seed);
    while (!stack.empty()) {
      const std::uint32_t i = stack.back();
      stack.pop_back();
      const int x = static_cast<int>(i % static_cast<std::uint32_t>(width_));
      const int y = static_cast<int>(i / static_cast<std::uint32_t>(width_));
      for (int dy = -1; dy <= 1; ++dy) {
        const int yy = y + dy;
        if (yy < 0 || yy >= height_) continue;
        for (int dx = -1; dx <= 1; ++dx) {
          const int xx = x + dx;
          if ((dx == 0 && dy == 0) || xx < 0 || xx >= width_) continue;
          const std::size_t j = static_cast<std::size_t>(yy) * static_cast<std::size_t>(width_) +
                                static_cast<std::size_t>(xx);
          if (level_[j] != 0 && !cells[j] && clears_low(j)) {
            cells[j] = 1;
            stack.push_back(static_cast<std::uint32_t>(j));
          }
        }
      }
    }
  }
  return out;
}

EdgeMap canny(const GrayImage& img, const ThresholdPair& t) {
  t.validate();
  return SuppressedGradient(img).hysteresis(t);
}

std::vector<ThresholdPair> threshold_grid(double step, GridMode mode) {
  if (!(step > 0.0) || step > 1.0) {
    throw std::invalid_argument("grid step must lie in (0, 1], got " + std::to_string(step));
  }
  const double inv = 1.0 / step;
  const long n = std::lround(inv);
  if (std::abs(inv - static_cast<double>(n)) > 1e-9 * std::max(1.0, inv)) {
    throw std::invalid_argument("grid step must divide 1, got " + std::to_string(step));
  }
  // Values as i/n so nested grids (0.2, 0.1, 0.05) produce bit-identical
  // thresholds.
  std::vector<ThresholdPair> out;
  for (long i = 0; i <= n; ++i) {
    for (long j = (mode == GridMode::Ordered ? i : 0); j <= n; ++j) {
      out.push_back({static_cast<double>(i) / static_cast<double>(n),
                     static_cast<double>(j) / static_cast<double>(n)});
    }
  }
  return out;
}

}  // namespace bdet
