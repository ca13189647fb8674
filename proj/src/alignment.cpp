#include "bdet/alignment.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>

namespace bdet {

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

// Contributions beyond this many sigma are below 1e-21 of the peak and are
// skipped.
constexpr double kCutoffSigmas = 10.0;

}  // namespace

int OrientationProfile::argmax() const {
  return static_cast<int>(std::max_element(values.begin(), values.end()) - values.begin());
}

SegmentAngle segment_angle(Point from, Point to) {
  double xdist = static_cast<double>(from.x - to.x);
  double ydist = static_cast<double>(from.y - to.y);
  if (ydist < 0.0) {
    xdist = -xdist;
    ydist = -ydist;
  }
  double angle = std::atan2(ydist, xdist) / kDeg;
  if (angle >= 180.0) angle -= 180.0;
  return {angle, std::hypot(xdist, ydist)};
}

std::vector<SegmentAngle> segment_angles(std::span<const Point> chain, int span) {
  if (span < 1) throw std::invalid_argument("segment span must be >= 1");
  const std::size_t n = chain.size();
  std::vector<SegmentAngle> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Point a = chain[i];
    const Point b = chain[(i + static_cast<std::size_t>(span)) % n];
    if (a == b) continue;
    out.push_back(segment_angle(a, b));
  }
  if (out.empty()) throw std::invalid_argument("degenerate contour: all segments have zero length");
  return out;
}

int dominant_angle_sum(std::span<const SegmentAngle> segments) {
  if (segments.empty()) throw std::invalid_argument("degenerate contour: no segments");
  std::array<double, 180> bins{};
  for (const SegmentAngle& s : segments) {
    const long deg = std::lround(s.angle) % 180;
    bins[static_cast<std::size_t>(deg)] += s.magnitude;
  }
  return static_cast<int>(std::max_element(bins.begin(), bins.end()) - bins.begin());
}

OrientationProfile orientation_profile(std::span<const SegmentAngle> segments, double sigma) {
  if (segments.empty()) throw std::invalid_argument("degenerate contour: no segments");
  if (!(sigma > 0.0)) throw std::invalid_argument("sigma must be positive");
  OrientationProfile profile;
  profile.sigma = sigma;
  double total = 0.0;
  for (const SegmentAngle& s : segments) total += s.magnitude;
  if (!(total > 0.0)) throw std::invalid_argument("degenerate contour: zero total length");
  profile.weights.reserve(segments.size());
  const double norm = 1.0 / (sigma * std::sqrt(2.0 * std::numbers::pi));
  const int reach = static_cast<int>(std::ceil(kCutoffSigmas * sigma));
  for (const SegmentAngle& s : segments) {
    const double lambda = s.magnitude / total;
    profile.weights.push_back(lambda);
    if (reach >= 90) {
      for (int theta = 0; theta < 180; ++theta) {
        const double z = angular_distance(theta, s.angle) / sigma;
        profile.values[static_cast<std::size_t>(theta)] += lambda * norm * std::exp(-0.5 * z * z);
      }
      continue;
    }
    const int centre = static_cast<int>(std::floor(s.angle));
    for (int k = centre - reach; k <= centre + reach + 1; ++k) {
      const int theta = ((k % 180) + 180) % 180;
      const double z = angular_distance(theta, s.angle) / sigma;
      profile.values[static_cast<std::size_t>(theta)] += lambda * norm * std::exp(-0.5 * z * z);
    }
  }
  return profile;
}

int dominant_angle_gaussian(std::span<const SegmentAngle> segments, double sigma) {
  return orientation_profile(segments, sigma).argmax();
}

PointD to_frame(double angle, PointD p) {
  const double c = std::cos(angle * kDeg);
  const double s = std::sin(angle * kDeg);
  return {p.x * c + p.y * s, -p.x * s + p.y * c};
}

PointD from_frame(double angle, PointD q) {
  const double c = std::cos(angle * kDeg);
  const double s = std::sin(angle * kDeg);
  return {q.x * c - q.y * s, q.x * s + q.y * c};
}

Frame candidate_frame(std::span<const Point> chain, double angle) {
  if (chain.empty()) throw std::invalid_argument("candidate_frame of an empty chain");
  Frame f{angle,
          {std::numeric_limits<double>::max(), std::numeric_limits<double>::max(),
           std::numeric_limits<double>::lowest(), std::numeric_limits<double>::lowest()}};
  const double c = std::cos(angle * kDeg);
  const double s = std::sin(angle * kDeg);
  for (const Point& p : chain) {
    const double u = p.x * c + p.y * s;
    const double v = -p.x * s + p.y * c;
    f.box.left = std::min(f.box.left, u);
    f.box.right = std::max(f.box.right, u);
    f.box.top = std::min(f.box.top, v);
    f.box.bottom = std::max(f.box.bottom, v);
  }
  return f;
}

std::array<PointD, 4> frame_corners(const Frame& f) {
  return {from_frame(f.angle, {f.box.left, f.box.top}),
          from_frame(f.angle, {f.box.right, f.box.top}),
          from_frame(f.angle, {f.box.right, f.box.bottom}),
          from_frame(f.angle, {f.box.left, f.box.bottom})};
}

BBox frame_bounds(const Frame& f) {
  const auto corners = frame_corners(f);
  BBox b{corners[0].x, corners[0].y, corners[0].x, corners[0].y};
  for (const PointD& p : corners) {
    b.left = std::min(b.left, p.x);
    b.top = std::min(b.top, p.y);
    b.right = std::max(b.right, p.x);
    b.bottom = std::max(b.bottom, p.y);
  }
  return b;
}

BBox padded_region(const Frame& f, double pad) {
  // Frame bounds are pixel centres; the covered region reaches half a pixel
  // beyond them.
  const double eu = f.box.width() + 1.0;
  const double ev = f.box.height() + 1.0;
  return {f.box.left - 0.5 - pad * eu, f.box.top - 0.5 - pad * ev,
          f.box.right + 0.5 + pad * eu, f.box.bottom + 0.5 + pad * ev};
}

Chip extract_chip(const GrayImage& img, const Frame& frame, const ChipOptions& opts) {
  if (opts.size < 1) throw std::invalid_argument("chip size must be positive");
  if (!(opts.pad >= 0.0)) throw std::invalid_argument("pad must be non-negative");
  if (frame.box.width() < 0.0 || frame.box.height() < 0.0) {
    throw std::invalid_argument("frame box is inverted");
  }
  const BBox region = padded_region(frame, opts.pad);
  const Frame padded{frame.angle, region};

  const double xmin = -0.5;
  const double ymin = -0.5;
  const double xmax = img.width() - 0.5;
  const double ymax = img.height() - 0.5;
  bool outside = false;
  for (const PointD& p : frame_corners(padded)) {
    constexpr double eps = 1e-9;
    if (p.x < xmin - eps || p.y < ymin - eps || p.x > xmax + eps || p.y > ymax + eps) {
      outside = true;
    }
  }
  if (outside && opts.mode == BoundsMode::Strict) {
    throw OutOfBoundsError("padded chip region leaves the image");
  }

  const int n = opts.size;
  const double su = region.width() / n;
  const double sv = region.height() / n;
  const double c = std::cos(frame.angle * kDeg);
  const double s = std::sin(frame.angle * kDeg);
  const int w = img.width();
  const int h = img.height();
  const auto& src = img.pixels();

  std::vector<std::uint8_t> out(static_cast<std::size_t>(n) * static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j) {
    const double v = region.top + (j + 0.5) * sv;
    for (int i = 0; i < n; ++i) {
      const double u = region.left + (i + 0.5) * su;
      double x = u * c - v * s;
      double y = u * s + v * c;
      x = std::clamp(x, 0.0, static_cast<double>(w - 1));
      y = std::clamp(y, 0.0, static_cast<double>(h - 1));
      const int x0 = static_cast<int>(x);
      const int y0 = static_cast<int>(y);
      const int x1 = std::min(x0 + 1, w - 1);
      const int y1 = std::min(y0 + 1, h - 1);
      const double fx = x - x0;
      const double fy = y - y0;
      const std::size_t r0 = static_cast<std::size_t>(y0) * static_cast<std::size_t>(w);
      const std::size_t r1 = static_cast<std::size_t>(y1) * static_cast<std::size_t>(w);
      const double top = src[r0 + static_cast<std::size_t>(x0)] * (1.0 - fx) +
                         src[r0 + static_cast<std::size_t>(x1)] * fx;
      const double bottom = src[r1 + static_cast<std::size_t>(x0)] * (1.0 - fx) +
                            src[r1 + static_cast<std::size_t>(x1)] * fx;
      const double value = top * (1.0 - fy) + bottom * fy;
      out[static_cast<std::size_t>(j) * static_cast<std::size_t>(n) + static_cast<std::size_t>(i)] =
          static_cast<std::uint8_t>(std::clamp(std::lround(value), 0L, 255L));
    }
  }
  return Chip{GrayImage(n, n, std::move(out)), frame, frame.angle, outside};
}

Chip extract_chip(const GrayImage& img, const Candidate& cand, const ChipOptions& opts) {
  return extract_chip(img, candidate_frame(cand.contour, cand.angle), opts);
}

void write_profile_csv(const OrientationProfile& profile, std::ostream& out) {
  out << "theta,value\n";
  for (std::size_t t = 0; t < profile.values.size(); ++t) {
    out << t << ',' << profile.values[t] << '\n';
  }
}

}  // namespace bdet
