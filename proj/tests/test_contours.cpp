#include <doctest.h>

#include <random>
#include <vector>

#include "bdet/contours.hpp"

using namespace bdet;

namespace {

void hollow_square(EdgeMap& em, int x0, int y0, int side) {
  for (int i = 0; i < side; ++i) {
    em.set(x0 + i, y0);
    em.set(x0 + i, y0 + side - 1);
    em.set(x0, y0 + i);
    em.set(x0 + side - 1, y0 + i);
  }
}

bool adjacent8(Point a, Point b) {
  return std::max(std::abs(a.x - b.x), std::abs(a.y - b.y)) == 1;
}

// Flood-fill oracle: sizes of the 8-connected components.
std::vector<std::size_t> component_sizes(const EdgeMap& em) {
  std::vector<int> seen(std::size_t(em.width()) * em.height(), 0);
  std::vector<std::size_t> sizes;
  for (int y = 0; y < em.height(); ++y)
    for (int x = 0; x < em.width(); ++x) {
      if (!em.at(x, y) || seen[std::size_t(y) * em.width() + x]) continue;
      std::size_t n = 0;
      std::vector<Point> stack{{x, y}};
      seen[std::size_t(y) * em.width() + x] = 1;
      while (!stack.empty()) {
        const Point p = stack.back();
        stack.pop_back();
        ++n;
        for (int dy = -1; dy <= 1; ++dy)
          for (int dx = -1; dx <= 1; ++dx) {
            const int xx = p.x + dx, yy = p.y + dy;
            if (!em.in_bounds(xx, yy) || !em.at(xx, yy)) continue;
            int& s = seen[std::size_t(yy) * em.width() + xx];
            if (!s) {
              s = 1;
              stack.push_back({xx, yy});
            }
          }
      }
      sizes.push_back(n);
    }
  return sizes;
}

Candidate with_box(BBox b, std::size_t points = 25) {
  Candidate c;
  c.contour.assign(points, Point{int(b.left), int(b.top)});
  c.bbox = b;
  return c;
}

}  // namespace

TEST_CASE("empty map has no contours") {
  CHECK(trace(EdgeMap(10, 10)).empty());
}

TEST_CASE("hollow 4x4 square is followed clockwise from its first pixel") {
  EdgeMap em(10, 10);
  hollow_square(em, 2, 2, 4);
  const auto cs = trace(em);
  REQUIRE(cs.size() == 1);
  const Contour expected{{2, 2}, {3, 2}, {4, 2}, {5, 2}, {5, 3}, {5, 4},
                         {5, 5}, {4, 5}, {3, 5}, {2, 5}, {2, 4}, {2, 3}};
  CHECK(cs[0] == expected);
  CHECK(bounding_box(cs[0]) == BBox{2, 2, 5, 5});
}

TEST_CASE("disjoint and nested squares") {
  EdgeMap two(30, 12);
  hollow_square(two, 1, 1, 6);
  hollow_square(two, 15, 3, 7);
  CHECK(trace(two).size() == 2);

  EdgeMap nested(20, 20);
  hollow_square(nested, 1, 1, 16);
  hollow_square(nested, 6, 6, 5);
  const auto cs = trace(nested);
  REQUIRE(cs.size() == 2);  // the outer ring's hole border is not returned
  CHECK(bounding_box(cs[0]) == BBox{1, 1, 16, 16});
  CHECK(bounding_box(cs[1]) == BBox{6, 6, 10, 10});
}

TEST_CASE("thin structures are walked on both sides; tiny chains dropped") {
  EdgeMap line(8, 3);
  line.set(2, 1);
  line.set(3, 1);
  line.set(4, 1);
  const auto cs = trace(line);
  REQUIRE(cs.size() == 1);
  const Contour expected{{2, 1}, {3, 1}, {4, 1}, {3, 1}};
  CHECK(cs[0] == expected);

  EdgeMap dots(8, 8);
  dots.set(1, 1);
  dots.set(5, 5);
  dots.set(6, 5);
  CHECK(trace(dots).empty());
}

TEST_CASE("filled block gives its 8-point border") {
  EdgeMap em(6, 6);
  for (int y = 1; y <= 3; ++y)
    for (int x = 1; x <= 3; ++x) em.set(x, y);
  const auto cs = trace(em);
  REQUIRE(cs.size() == 1);
  CHECK(cs[0].size() == 8);
}

TEST_CASE("random maps: one closed outer chain per component") {
  std::mt19937 rng(3);
  for (int trial = 0; trial < 40; ++trial) {
    EdgeMap em(24, 18);
    for (int y = 0; y < 18; ++y)
      for (int x = 0; x < 24; ++x) em.set(x, y, rng() % 100 < 30);
    std::size_t expected = 0;
    for (std::size_t n : component_sizes(em)) expected += n >= 2 ? 1 : 0;
    const auto cs = trace(em);
    std::size_t two_point = 0;
    for (const Contour& c : cs) {
      REQUIRE(c.size() >= 3);
      for (std::size_t i = 0; i < c.size(); ++i) {
        CHECK(em.at(c[i].x, c[i].y));
        CHECK(adjacent8(c[i], c[(i + 1) % c.size()]));
      }
    }
    // Two-pixel components trace to two points and are dropped.
    EdgeMap copy = em;
    for (std::size_t n : component_sizes(copy)) two_point += n == 2 ? 1 : 0;
    CHECK(cs.size() == expected - two_point);
  }
}

TEST_CASE("bounding box") {
  const Contour l{{0, 0}, {1, 0}, {2, 0}, {3, 0}, {4, 0}, {5, 0}, {6, 0}, {7, 0}, {8, 0}, {9, 0},
                  {9, 1}, {8, 1}, {1, 1}, {1, 2}, {1, 3}, {1, 4}, {0, 4}, {0, 3}};
  CHECK(bounding_box(l) == BBox{0, 0, 9, 4});
  CHECK_THROWS_AS(bounding_box(Contour{}), std::invalid_argument);
}

TEST_CASE("filter: length, size and near-duplicates") {
  FilterOptions opts;
  CHECK(filter({with_box({0, 0, 50, 50}, 3)}, opts).empty());
  CHECK(filter({with_box({0, 0, 50, 8})}, opts).empty());       // too thin
  CHECK(filter({with_box({0, 0, 10, 10})}, opts).size() == 1);  // exactly min side

  const auto merged = filter({with_box({10, 10, 50, 50}), with_box({12, 11, 53, 52})}, opts);
  REQUIRE(merged.size() == 1);
  CHECK(merged[0].bbox == BBox{10, 10, 50, 50});

  CHECK(filter({with_box({10, 10, 50, 50}), with_box({10, 10, 50, 56})}, opts).size() == 2);
  CHECK(filter({with_box({10, 10, 50, 50}), with_box({10, 10, 50, 55})}, opts).size() == 2);  // strict

  // Compared against survivors only: a chain of small shifts is not transitive.
  const auto chain = filter({with_box({0, 0, 40, 40}), with_box({4, 0, 44, 40}), with_box({8, 0, 48, 40})}, opts);
  REQUIRE(chain.size() == 2);
  CHECK(chain[1].bbox.left == 8);

  FilterOptions no_dedup = opts;
  no_dedup.dedup_tol = 0.0;
  CHECK(filter({with_box({10, 10, 50, 50}), with_box({10, 10, 50, 50})}, no_dedup).size() == 2);
}

TEST_CASE("filter dedup matches the quadratic definition") {
  std::mt19937 rng(9);
  std::vector<Candidate> cands;
  for (int i = 0; i < 400; ++i) {
    const double l = rng() % 60, t = rng() % 60;
    cands.push_back(with_box({l, t, l + 10 + rng() % 20, t + 10 + rng() % 20}));
  }
  FilterOptions opts;
  std::vector<BBox> expected;
  for (const Candidate& c : cands) {
    bool dup = false;
    for (const BBox& s : expected)
      dup = dup || (std::abs(s.left - c.bbox.left) < 5 && std::abs(s.top - c.bbox.top) < 5 &&
                    std::abs(s.right - c.bbox.right) < 5 && std::abs(s.bottom - c.bbox.bottom) < 5);
    if (!dup) expected.push_back(c.bbox);
  }
  const auto got = filter(cands, opts);
  REQUIRE(got.size() == expected.size());
  for (std::size_t i = 0; i < got.size(); ++i) CHECK(got[i].bbox == expected[i]);
}
