#pragma once

#include <array>
#include <span>
#include <stdexcept>
#include <vector>

#include "bdet/contours.hpp"
#include "bdet/geometry.hpp"
#include "bdet/imagery.hpp"

namespace bdet {

/// Orientation of one contour segment, folded into [0, 180), and its length.
struct SegmentAngle {
  double angle = 0.0;
  double magnitude = 0.0;
};

/// Kernel-density orientation profile over the integer degrees 0..179.
struct OrientationProfile {
  std::array<double, 180> values{};
  double sigma = 1.0;
  std::vector<double> weights;  // per-segment |c_i| / sum |c_j|

  /// Smallest degree attaining the maximum.
  [[nodiscard]] int argmax() const;
};

/// Segment from point i to point (i + span) mod n for every i, with
/// wraparound. span = 1 gives the raw chain steps; pixel chains only step in
/// multiples of 45 degrees, so longer spans (chords) are used to resolve
/// intermediate orientations. Zero-length segments are skipped.
/// Throws std::invalid_argument when every segment has zero length.
std::vector<SegmentAngle> segment_angles(std::span<const Point> chain, int span = 1);

/// Single-vector form of the same rule, exposed for tests.
SegmentAngle segment_angle(Point from, Point to);

/// Magnitude-weighted histogram over rounded degrees; ties toward the
/// smaller angle.
int dominant_angle_sum(std::span<const SegmentAngle> segments);

/// Sum of magnitude-normalized Gaussians (wraparound distance mod 180).
OrientationProfile orientation_profile(std::span<const SegmentAngle> segments, double sigma = 1.0);

/// argmax of orientation_profile.
int dominant_angle_gaussian(std::span<const SegmentAngle> segments, double sigma = 1.0);

/// Rotated rectangle: `box` holds bounds in the frame whose u axis points
/// along `angle` (degrees, image coordinates) and v axis is u turned 90
/// degrees clockwise on screen. With angle 0 the box is in image coordinates.
struct Frame {
  double angle = 0.0;
  BBox box;
};

PointD to_frame(double angle, PointD image_point);
PointD from_frame(double angle, PointD frame_point);

/// Tight bound of a chain in the frame rotated by `angle`.
Frame candidate_frame(std::span<const Point> chain, double angle);

/// Image-space corners, in order (left,top) (right,top) (right,bottom) (left,bottom).
std::array<PointD, 4> frame_corners(const Frame& f);

/// Axis-aligned bound of the frame's corners.
BBox frame_bounds(const Frame& f);

/// Raised in strict mode when the padded chip region leaves the image.
class OutOfBoundsError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class BoundsMode {
  Strict,  // training: throw OutOfBoundsError
  Clamp,   // detection: clamp samples to the border and flag the chip
};

struct ChipOptions {
  double pad = 0.05;  // fraction of the frame extent added on each side
  int size = 200;
  BoundsMode mode = BoundsMode::Strict;
};

struct Chip {
  GrayImage pixels;
  Frame frame;
  double applied_angle = 0.0;
  bool clamped = false;
};

/// Region of the image covered by the padded chip, in frame coordinates.
BBox padded_region(const Frame& f, double pad);

/// Resamples the padded frame region into a size x size chip with bilinear
/// interpolation, rotating by -angle so the frame's u axis becomes the chip's
/// x axis. Rotation and scaling are done in one resampling pass.
Chip extract_chip(const GrayImage& img, const Frame& frame, const ChipOptions& opts = {});
Chip extract_chip(const GrayImage& img, const Candidate& cand, const ChipOptions& opts = {});

/// Writes the profile as `theta,value` rows.
void write_profile_csv(const OrientationProfile& profile, std::ostream& out);

}  // namespace bdet
