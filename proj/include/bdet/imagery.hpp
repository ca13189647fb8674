#pragma once

#include <concepts>
#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

namespace bdet {

/// Raised when an image file cannot be read or decoded.
class DecodeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Rgb {
  std::uint8_t r = 0;
  std::uint8_t g = 0;
  std::uint8_t b = 0;

  friend constexpr bool operator==(const Rgb&, const Rgb&) = default;
};

/// Row-major 8-bit RGB raster.
class RgbImage {
 public:
  RgbImage() = default;
  RgbImage(int width, int height, Rgb fill = {});
  RgbImage(int width, int height, std::vector<Rgb> pixels);

  [[nodiscard]] int width() const { return width_; }
  [[nodiscard]] int height() const { return height_; }
  [[nodiscard]] bool empty() const { return pixels_.empty(); }

  [[nodiscard]] const Rgb& at(int x, int y) const { return pixels_[index(x, y)]; }
  Rgb& at(int x, int y) { return pixels_[index(x, y)]; }

  [[nodiscard]] const std::vector<Rgb>& pixels() const { return pixels_; }
  std::vector<Rgb>& pixels() { return pixels_; }

  friend bool operator==(const RgbImage&, const RgbImage&) = default;

 private:
  [[nodiscard]] std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(x);
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<Rgb> pixels_;
};

/// Row-major 8-bit luminance raster.
class GrayImage {
 public:
  GrayImage() = default;
  GrayImage(int width, int height, std::uint8_t fill = 0);
  GrayImage(int width, int height, std::vector<std::uint8_t> pixels);

  [[nodiscard]] int width() const { return width_; }
  [[nodiscard]] int height() const { return height_; }
  [[nodiscard]] bool empty() const { return pixels_.empty(); }

  [[nodiscard]] std::uint8_t at(int x, int y) const { return pixels_[index(x, y)]; }
  std::uint8_t& at(int x, int y) { return pixels_[index(x, y)]; }

  [[nodiscard]] const std::vector<std::uint8_t>& pixels() const { return pixels_; }
  std::vector<std::uint8_t>& pixels() { return pixels_; }

  friend bool operator==(const GrayImage&, const GrayImage&) = default;

 private:
  [[nodiscard]] std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(x);
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> pixels_;
};

/// Half-open pixel rectangle [x0, x1) x [y0, y1).
struct Rect {
  int x0 = 0;
  int y0 = 0;
  int x1 = 0;
  int y1 = 0;

  [[nodiscard]] constexpr int width() const { return x1 - x0; }
  [[nodiscard]] constexpr int height() const { return y1 - y0; }
};

/// Summed-area table. Stored with a zero row and column in front so every
/// rectangle sum is four lookups without branches.
class IntegralImage {
 public:
  IntegralImage() = default;
  explicit IntegralImage(const GrayImage& img);

  [[nodiscard]] int width() const { return width_; }
  [[nodiscard]] int height() const { return height_; }

  /// Sum of luminance over all (i <= x, j <= y).
  [[nodiscard]] std::int64_t sum_at(int x, int y) const { return table(x + 1, y + 1); }

  /// Exact sum over r. Throws std::out_of_range if r leaves the image.
  [[nodiscard]] std::int64_t rect_sum(const Rect& r) const;

  /// rect_sum without the bounds check, for callers that have already
  /// validated their geometry.
  [[nodiscard]] std::int64_t rect_sum_unchecked(const Rect& r) const {
    return table(r.x1, r.y1) - table(r.x0, r.y1) - table(r.x1, r.y0) + table(r.x0, r.y0);
  }

 private:
  [[nodiscard]] std::int64_t table(int x, int y) const {
    return sums_[static_cast<std::size_t>(y) * static_cast<std::size_t>(width_ + 1) +
                 static_cast<std::size_t>(x)];
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<std::int64_t> sums_;
};

/// Anything that answers rectangle-sum queries (integral images, or test
/// doubles that count calls).
template <class T>
concept RectSummer = requires(const T& s, const Rect& r) {
  { s.rect_sum(r) } -> std::convertible_to<std::int64_t>;
};

/// Decodes PNG, binary PGM (P5) or binary PPM (P6), detected by content.
RgbImage load_image(const std::filesystem::path& path);

/// BT.601 luma, rounded to nearest and clamped to [0, 255].
std::uint8_t luma(Rgb px);
GrayImage to_grayscale(const RgbImage& img);
RgbImage to_rgb(const GrayImage& img);

IntegralImage integral(const GrayImage& img);
std::int64_t rect_sum(const IntegralImage& ii, const Rect& r);

void write_pgm(const GrayImage& img, const std::filesystem::path& path);
void write_png(const RgbImage& img, const std::filesystem::path& path);
void write_png(const GrayImage& img, const std::filesystem::path& path);

}  // namespace bdet
