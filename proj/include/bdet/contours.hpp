#pragma once

#include <span>
#include <vector>

#include "bdet/edges.hpp"
#include "bdet/geometry.hpp"

namespace bdet {

/// Closed chain of pixel coordinates; consecutive points (with wraparound)
/// are 8-adjacent. Thin structures are walked on both sides, so a point may
/// appear more than once.
using Contour = std::vector<Point>;

struct Candidate {
  Contour contour;
  BBox bbox;
  ThresholdPair source;
  double angle = 0.0;  // degrees in [0, 180), filled by alignment
};

/// Outer borders of the 8-connected edge components, in raster order of
/// their first pixel. Uses the single-pass labeling/border-following scheme
/// of Chang, Chen and Lu: every pixel is visited a bounded number of times.
/// Inner (hole) borders are followed for labeling but not returned, and
/// chains shorter than 3 points are dropped.
std::vector<Contour> trace(const EdgeMap& edges);

BBox bounding_box(std::span<const Point> chain);

struct FilterOptions {
  std::size_t min_points = 20;  // minimum chain length
  double min_side = 10.0;       // minimum bbox width and height
  double dedup_tol = 5.0;       // near-duplicate tolerance per bbox edge (strict)
};

/// Drops short chains and small boxes, then near-duplicates: a candidate is
/// removed when an earlier survivor's four bbox edges each differ from its
/// own by less than dedup_tol. Order is preserved.
std::vector<Candidate> filter(std::vector<Candidate> cands, const FilterOptions& opts);

}  // namespace bdet
