#include "bdet/contours.hpp"

#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <limits>
#include <stdexcept>
#include <unordered_map>

namespace bdet {

namespace {

// Clockwise in image coordinates (y down), starting east.
constexpr std::array<Point, 8> kStep = {{
    {1, 0}, {1, 1}, {0, 1}, {-1, 1}, {-1, 0}, {-1, -1}, {0, -1}, {1, -1}}};

// Only zero versus non-zero is ever tested, so one byte per pixel suffices.
constexpr std::int8_t kMarked = -1;
constexpr std::int8_t kLabeled = 1;

class BorderFollower {
 public:
  explicit BorderFollower(const EdgeMap& edges) : edges_(edges), labels_(scratch()) {
    const std::size_t n = static_cast<std::size_t>(edges.width()) * static_cast<std::size_t>(edges.height());
    if (labels_.size() < n) labels_.assign(n, 0);
  }

  ~BorderFollower() {
    for (const std::uint32_t i : touched_) labels_[i] = 0;
  }

  BorderFollower(const BorderFollower&) = delete;
  BorderFollower& operator=(const BorderFollower&) = delete;

  std::vector<Contour> run() {
    std::vector<Contour> out;
    const int w = edges_.width();
    const int h = edges_.height();
    const std::uint8_t* cells = edges_.data().data();
    for (int y = 0; y < h; ++y) {
      const std::uint8_t* row = cells + static_cast<std::size_t>(y) * static_cast<std::size_t>(w);
      for (int x = 0; x < w; ++x) {
        if (!row[x]) {
          x = next_set(row, x, w);
          if (x == w) break;
        }
        const Point p{x, y};
        if (label(p) == 0 && !black({x, y - 1})) {
          Contour c = follow(p, 7);
          if (c.size() >= 3) out.push_back(std::move(c));
        }
        if (in_image({x, y + 1}) && !black({x, y + 1}) && label({x, y + 1}) == 0) {
          if (label(p) == 0) set_label(p, label({x - 1, y}));
          follow(p, 3);
        } else if (label(p) == 0) {
          set_label(p, label({x - 1, y}));
        }
      }
    }
    return out;
  }

 private:
  [[nodiscard]] bool in_image(Point p) const { return edges_.in_bounds(p.x, p.y); }
  [[nodiscard]] bool black(Point p) const { return in_image(p) && edges_.at(p.x, p.y); }
  [[nodiscard]] std::size_t index(Point p) const {
    return static_cast<std::size_t>(p.y) * static_cast<std::size_t>(edges_.width()) +
           static_cast<std::size_t>(p.x);
  }
  [[nodiscard]] std::int8_t label(Point p) const { return in_image(p) ? labels_[index(p)] : 0; }
  void set_label(Point p, std::int8_t v) {
    std::int8_t& slot = labels_[index(p)];
    if (slot == 0 && v != 0) touched_.push_back(static_cast<std::uint32_t>(index(p)));
    slot = v;
  }

  // First non-zero cell at or after x, skipping empty runs eight at a time.
  static int next_set(const std::uint8_t* row, int x, int w) {
    while (x + 8 <= w) {
      std::uint64_t word = 0;
      std::memcpy(&word, row + x, sizeof word);
      if (word) break;
      x += 8;
    }
    while (x < w && !row[x]) ++x;
    return x;
  }

  // Label buffer reused across calls on the same thread; only the entries a
  // call touched are reset afterwards.
  static std::vector<std::int8_t>& scratch() {
    thread_local std::vector<std::int8_t> buffer;
    return buffer;
  }

  struct Step {
    Point to;
    int dir = -1;  // -1: isolated pixel
  };

  // Clockwise search from `dir` for the next border pixel, marking the
  // background pixels passed over.
  Step tracer(Point p, int dir) {
    for (int i = 0; i < 8; ++i) {
      const int d = (dir + i) % 8;
      const Point q{p.x + kStep[static_cast<std::size_t>(d)].x,
                    p.y + kStep[static_cast<std::size_t>(d)].y};
      if (black(q)) return {q, d};
      if (in_image(q)) set_label(q, kMarked);
    }
    return {p, -1};
  }

  Contour follow(Point start, int first_dir) {
    set_label(start, kLabeled);
    Contour chain{start};
    const Step second = tracer(start, first_dir);
    if (second.dir < 0) return chain;
    Point cur = second.to;
    int dir = second.dir;
    for (;;) {
      // Resume two positions clockwise past the previous point.
      const Step next = tracer(cur, (dir + 6) % 8);
      if (cur == start && next.to == second.to) break;
      set_label(cur, kLabeled);
      chain.push_back(cur);
      cur = next.to;
      dir = next.dir;
    }
    return chain;
  }

  const EdgeMap& edges_;
  std::vector<std::int8_t>& labels_;
  std::vector<std::uint32_t> touched_;
};

}  // namespace

std::vector<Contour> trace(const EdgeMap& edges) { return BorderFollower(edges).run(); }

BBox bounding_box(std::span<const Point> chain) {
  if (chain.empty()) throw std::invalid_argument("bounding_box of an empty chain");
  BBox b{std::numeric_limits<double>::max(), std::numeric_limits<double>::max(),
         std::numeric_limits<double>::lowest(), std::numeric_limits<double>::lowest()};
  for (const Point& p : chain) {
    b.left = std::min(b.left, static_cast<double>(p.x));
    b.top = std::min(b.top, static_cast<double>(p.y));
    b.right = std::max(b.right, static_cast<double>(p.x));
    b.bottom = std::max(b.bottom, static_cast<double>(p.y));
  }
  return b;
}

std::vector<Candidate> filter(std::vector<Candidate> cands, const FilterOptions& opts) {
  if (!(opts.dedup_tol >= 0.0)) throw std::invalid_argument("dedup_tol must be >= 0");
  std::vector<Candidate> out;
  out.reserve(cands.size());

  // Survivors bucketed by (left, top) on a dedup_tol grid: any near-duplicate
  // lies in an adjacent cell.
  std::unordered_map<std::uint64_t, std::vector<std::size_t>> grid;
  const double tol = opts.dedup_tol;
  auto cell = [tol](double v) { return static_cast<std::int64_t>(std::floor(v / tol)); };
  auto key = [](std::int64_t cx, std::int64_t cy) {
    return (static_cast<std::uint64_t>(cx) << 32) ^ static_cast<std::uint64_t>(cy & 0xffffffff);
  };
  auto near = [tol](const BBox& a, const BBox& b) {
    return std::abs(a.left - b.left) < tol && std::abs(a.top - b.top) < tol &&
           std::abs(a.right - b.right) < tol && std::abs(a.bottom - b.bottom) < tol;
  };

  for (Candidate& c : cands) {
    if (c.contour.size() < opts.min_points) continue;
    if (c.bbox.width() < opts.min_side || c.bbox.height() < opts.min_side) continue;
    if (tol > 0.0) {
      const std::int64_t cx = cell(c.bbox.left);
      const std::int64_t cy = cell(c.bbox.top);
      bool duplicate = false;
      for (std::int64_t dx = -1; dx <= 1 && !duplicate; ++dx) {
        for (std::int64_t dy = -1; dy <= 1 && !duplicate; ++dy) {
          const auto it = grid.find(key(cx + dx, cy + dy));
          if (it == grid.end()) continue;
          for (const std::size_t s : it->second) {
            if (near(out[s].bbox, c.bbox)) {
              duplicate = true;
              break;
            }
          }
        }
      }
      if (duplicate) continue;
      grid[key(cx, cy)].push_back(out.size());
    }
    out.push_back(std::move(c));
  }
  return out;
}

}  // namespace bdet
