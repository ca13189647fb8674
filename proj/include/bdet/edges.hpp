#pragma once

#include <cstdint>
#include <vector>

#include "bdet/imagery.hpp"

namespace bdet {

/// Gradient orientation quantized to the four Canny bins, measured in image
/// coordinates (x right, y down).
enum class GradientBin : std::int8_t { None = -1, Deg0 = 0, Deg45 = 1, Deg90 = 2, Deg135 = 3 };

/// Smoothed Sobel gradient with magnitudes scaled so the global maximum is 1.
struct GradientField {
  int width = 0;
  int height = 0;
  std::vector<float> magnitude;
  std::vector<GradientBin> direction;

  [[nodiscard]] float mag(int x, int y) const {
    return magnitude[static_cast<std::size_t>(y) * static_cast<std::size_t>(width) +
                     static_cast<std::size_t>(x)];
  }
  [[nodiscard]] GradientBin dir(int x, int y) const {
    return direction[static_cast<std::size_t>(y) * static_cast<std::size_t>(width) +
                     static_cast<std::size_t>(x)];
  }
};

struct ThresholdPair {
  double low = 0.0;
  double high = 0.0;

  /// Throws std::invalid_argument unless 0 <= low <= high <= 1.
  void validate() const;

  friend constexpr bool operator==(const ThresholdPair&, const ThresholdPair&) = default;
};

class EdgeMap {
 public:
  EdgeMap() = default;
  EdgeMap(int width, int height)
      : width_(width),
        height_(height),
        edges_(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), 0) {}

  [[nodiscard]] int width() const { return width_; }
  [[nodiscard]] int height() const { return height_; }

  [[nodiscard]] bool at(int x, int y) const { return edges_[index(x, y)] != 0; }
  void set(int x, int y, bool v = true) { edges_[index(x, y)] = v ? 1 : 0; }

  [[nodiscard]] bool in_bounds(int x, int y) const {
    return x >= 0 && y >= 0 && x < width_ && y < height_;
  }
  [[nodiscard]] std::size_t count() const;
  [[nodiscard]] const std::vector<std::uint8_t>& data() const { return edges_; }
  std::vector<std::uint8_t>& data() { return edges_; }

  /// 0/255 rendering for debug dumps.
  [[nodiscard]] GrayImage to_image() const;

  friend bool operator==(const EdgeMap&, const EdgeMap&) = default;

 private:
  [[nodiscard]] std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(x);
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> edges_;
};

/// Threshold-independent part of Canny: gradient followed by non-maximum
/// suppression. Computed once per image and reused for every threshold pair.
class SuppressedGradient {
 public:
  explicit SuppressedGradient(const GrayImage& img);
  explicit SuppressedGradient(const GradientField& field);

  [[nodiscard]] int width() const { return width_; }
  [[nodiscard]] int height() const { return height_; }
  /// Magnitude of a ridge pixel, 0 where suppressed.
  [[nodiscard]] float at(int x, int y) const {
    return ridge_[static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
                  static_cast<std::size_t>(x)];
  }

  /// Double-threshold hysteresis: ridge pixels >= high seed edges, ridge
  /// pixels in [low, high) join when 8-connected to a seed through in-band
  /// pixels.
  [[nodiscard]] EdgeMap hysteresis(const ThresholdPair& t) const;

 private:
  void suppress(const GradientField& field);

  int width_ = 0;
  int height_ = 0;
  std::vector<float> ridge_;
  struct RidgePixel {
    std::uint32_t index;
    float magnitude;
  };
  // Non-zero ridge pixels grouped by magnitude band, strongest band first,
  // raster order within a band; band_start_ has kBands + 1 offsets.
  static constexpr int kBands = 64;
  std::vector<RidgePixel> ridge_pixels_;
  std::vector<std::size_t> band_start_;
  std::vector<std::uint8_t> level_;  // 0 off-ridge, else 1 + band index from the weakest
};

/// 5x5 Gaussian (sigma 1.4) then 3x3 Sobel, replicated borders. Requires at
/// least 3x3 pixels.
GradientField gradient(const GrayImage& img);

EdgeMap canny(const GrayImage& img, const ThresholdPair& t);

enum class GridMode {
  Ordered,    // low <= high only
  Cartesian,  // every (low, high) combination, low > high included
};

/// Threshold pairs on the grid {0, step, 2 step, ..., 1}, low-major ascending.
std::vector<ThresholdPair> threshold_grid(double step, GridMode mode = GridMode::Ordered);

}  // namespace bdet
