#include "bdet/imagery.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

namespace bdet {

namespace {

void check_dims(int width, int height) {
  if (width < 1 || height < 1) {
    throw std::invalid_argument("image dimensions must be positive, got " +
                                std::to_string(width) + "x" + std::to_string(height));
  }
}

std::vector<unsigned char> read_all(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DecodeError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

RgbImage decode_png(const std::vector<unsigned char>& bytes, const std::string& name) {
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size())) {
    throw DecodeError(name + ": " + image.message);
  }
  image.format = PNG_FORMAT_RGB;
  if (image.width == 0 || image.height == 0) {
    png_image_free(&image);
    throw DecodeError(name + ": zero-dimension image");
  }
  std::vector<png_byte> buffer(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, buffer.data(), 0, nullptr)) {
    const std::string msg = image.message;
    png_image_free(&image);
    throw DecodeError(name + ": " + msg);
  }
  const int w = static_cast<int>(image.width);
  const int h = static_cast<int>(image.height);
  std::vector<Rgb> px(static_cast<std::size_t>(w) * static_cast<std::size_t>(h));
  for (std::size_t i = 0; i < px.size(); ++i) {
    px[i] = {buffer[3 * i], buffer[3 * i + 1], buffer[3 * i + 2]};
  }
  return RgbImage(w, h, std::move(px));
}

// Netpbm header: magic, width, height, maxval, separated by whitespace and
// optional comments, followed by a single whitespace byte.
RgbImage decode_pnm(const std::vector<unsigned char>& bytes, const std::string& name) {
  std::size_t pos = 2;
  auto skip_space = [&] {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(bytes[pos])) {
        ++pos;
      } else {
        break;
      }
    }
  };
  auto read_int = [&] {
    skip_space();
    long value = 0;
    bool any = false;
    while (pos < bytes.size() && std::isdigit(bytes[pos])) {
      value = value * 10 + (bytes[pos] - '0');
      if (value > 1'000'000'000) throw DecodeError(name + ": header value too large");
      ++pos;
      any = true;
    }
    if (!any) throw DecodeError(name + ": malformed netpbm header");
    return value;
  };
  const bool color = bytes[1] == '6';
  const long w = read_int();
  const long h = read_int();
  const long maxval = read_int();
  if (w == 0 || h == 0) throw DecodeError(name + ": zero-dimension image");
  if (maxval < 1 || maxval > 255) throw DecodeError(name + ": only 8-bit netpbm is supported");
  ++pos;
  const std::size_t channels = color ? 3 : 1;
  const std::size_t count = static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
  if (bytes.size() < pos + count * channels) throw DecodeError(name + ": truncated pixel data");

  auto scale = [maxval](unsigned char v) {
    return static_cast<std::uint8_t>(maxval == 255 ? v : (v * 255 + maxval / 2) / maxval);
  };
  std::vector<Rgb> px(count);
  for (std::size_t i = 0; i < count; ++i) {
    const unsigned char* p = &bytes[pos + i * channels];
    px[i] = color ? Rgb{scale(p[0]), scale(p[1]), scale(p[2])}
                  : Rgb{scale(p[0]), scale(p[0]), scale(p[0])};
  }
  return RgbImage(static_cast<int>(w), static_cast<int>(h), std::move(px));
}

}  // namespace

RgbImage::RgbImage(int width, int height, Rgb fill)
    : width_(width), height_(height) {
  check_dims(width, height);
  pixels_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill);
}

RgbImage::RgbImage(int width, int height, std::vector<Rgb> pixels)
    : width_(width), height_(height), pixels_(std::move(pixels)) {
  check_dims(width, height);
  if (pixels_.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
    throw std::invalid_argument("pixel count does not match dimensions");
  }
}

GrayImage::GrayImage(int width, int height, std::uint8_t fill)
    : width_(width), height_(height) {
  check_dims(width, height);
  pixels_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill);
}

GrayImage::GrayImage(int width, int height, std::vector<std::uint8_t> pixels)
    : width_(width), height_(height), pixels_(std::move(pixels)) {
  check_dims(width, height);
  if (pixels_.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
    throw std::invalid_argument("pixel count does not match dimensions");
  }
}

IntegralImage::IntegralImage(const GrayImage& img)
    : width_(img.width()), height_(img.height()) {
  const std::size_t stride = static_cast<std::size_t>(width_) + 1;
  sums_.assign(stride * (static_cast<std::size_t>(height_) + 1), 0);
  const auto& px = img.pixels();
  for (int y = 0; y < height_; ++y) {
    std::int64_t row = 0;
    const std::size_t src = static_cast<std::size_t>(y) * static_cast<std::size_t>(width_);
    std::int64_t* above = &sums_[static_cast<std::size_t>(y) * stride];
    std::int64_t* cur = &sums_[(static_cast<std::size_t>(y) + 1) * stride];
    for (int x = 0; x < width_; ++x) {
      row += px[src + static_cast<std::size_t>(x)];
      cur[x + 1] = above[x + 1] + row;
    }
  }
}

std::int64_t IntegralImage::rect_sum(const Rect& r) const {
  if (r.x0 < 0 || r.y0 < 0 || r.x1 > width_ || r.y1 > height_ || r.x0 > r.x1 || r.y0 > r.y1) {
    throw std::out_of_range("rectangle [" + std::to_string(r.x0) + "," + std::to_string(r.x1) +
                            ")x[" + std::to_string(r.y0) + "," + std::to_string(r.y1) +
                            ") outside " + std::to_string(width_) + "x" +
                            std::to_string(height_) + " image");
  }
  return rect_sum_unchecked(r);
}

RgbImage load_image(const std::filesystem::path& path) {
  const auto bytes = read_all(path);
  const std::string name = path.string();
  static constexpr unsigned char kPngSig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  if (bytes.size() >= 8 && std::equal(std::begin(kPngSig), std::end(kPngSig), bytes.begin())) {
    return decode_png(bytes, name);
  }
  if (bytes.size() >= 2 && bytes[0] == 'P' && (bytes[1] == '5' || bytes[1] == '6')) {
    return decode_pnm(bytes, name);
  }
  throw DecodeError(name + ": unsupported image format");
}

std::uint8_t luma(Rgb px) {
  const double y = 0.299 * px.r + 0.587 * px.g + 0.114 * px.b;
  return static_cast<std::uint8_t>(std::clamp(std::lround(y), 0L, 255L));
}

GrayImage to_grayscale(const RgbImage& img) {
  std::vector<std::uint8_t> out(img.pixels().size());
  std::transform(img.pixels().begin(), img.pixels().end(), out.begin(), luma);
  return GrayImage(img.width(), img.height(), std::move(out));
}

RgbImage to_rgb(const GrayImage& img) {
  std::vector<Rgb> out(img.pixels().size());
  std::transform(img.pixels().begin(), img.pixels().end(), out.begin(),
                 [](std::uint8_t v) { return Rgb{v, v, v}; });
  return RgbImage(img.width(), img.height(), std::move(out));
}

IntegralImage integral(const GrayImage& img) { return IntegralImage(img); }

std::int64_t rect_sum(const IntegralImage& ii, const Rect& r) { return ii.rect_sum(r); }

void write_pgm(const GrayImage& img, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "P5\n" << img.width() << ' ' << img.height() << "\n255\n";
  out.write(reinterpret_cast<const char*>(img.pixels().data()),
            static_cast<std::streamsize>(img.pixels().size()));
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

namespace {

void write_png_buffer(const std::filesystem::path& path, int width, int height,
                      png_uint_32 format, const void* data) {
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(width);
  image.height = static_cast<png_uint_32>(height);
  image.format = format;
  if (!png_image_write_to_file(&image, path.string().c_str(), 0, data, 0, nullptr)) {
    const std::string msg = image.message;
    png_image_free(&image);
    throw std::runtime_error("cannot write " + path.string() + ": " + msg);
  }
}

}  // namespace

void write_png(const RgbImage& img, const std::filesystem::path& path) {
  static_assert(sizeof(Rgb) == 3);
  write_png_buffer(path, img.width(), img.height(), PNG_FORMAT_RGB, img.pixels().data());
}

void write_png(const GrayImage& img, const std::filesystem::path& path) {
  write_png_buffer(path, img.width(), img.height(), PNG_FORMAT_GRAY, img.pixels().data());
}

}  // namespace bdet
