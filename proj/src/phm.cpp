#include "bdet/phm.hpp"

#include <json.hpp>

#include <cmath>
#include <map>
#include <stdexcept>
#include <tuple>

namespace bdet {

double heuristic(const ClassScores& s) {
  const double a = s.pos;
  const double b = 1.0 - s.neg;
  const double denom = a + b;
  if (denom <= 0.0) return 0.0;
  return 2.0 * a * b / denom;
}

int step_size(const BBox& b, double rate) {
  if (!(rate > 0.0)) throw std::invalid_argument("permutation rate must be positive");
  const double d = rate * (b.height() + b.width()) / 2.0;
  return std::max(1, static_cast<int>(std::floor(d + 0.5)));
}

const std::vector<Permutation>& all_permutations() {
  static const std::vector<Permutation> perms = [] {
    std::vector<Permutation> out;
    out.reserve(81);
    for (int t = -1; t <= 1; ++t)
      for (int b = -1; b <= 1; ++b)
        for (int l = -1; l <= 1; ++l)
          for (int r = -1; r <= 1; ++r) out.push_back({{t, b, l, r}});
    return out;
  }();
  return perms;
}

BBox apply(const BBox& b, const Permutation& p, int d) {
  return {b.left + p.deltas[2] * d, b.top + p.deltas[0] * d, b.right + p.deltas[3] * d,
          b.bottom + p.deltas[1] * d};
}

std::vector<BBox> neighbors(const BBox& b, int d,
                            const std::function<bool(const BBox&)>& admissible) {
  if (d < 1) throw std::invalid_argument("permutation step must be >= 1");
  std::vector<BBox> out;
  out.reserve(81);
  for (const Permutation& p : all_permutations()) {
    const BBox nb = apply(b, p, d);
    if (nb.valid() && admissible(nb)) out.push_back(nb);
  }
  return out;
}

std::vector<BBox> neighbors(const BBox& b, int d, int image_width, int image_height) {
  return neighbors(b, d, [&](const BBox& nb) {
    return nb.left >= 0.0 && nb.top >= 0.0 && nb.right <= image_width - 1 &&
           nb.bottom <= image_height - 1;
  });
}

SearchTrace greedy_search(const GrayImage& img, const Frame& start, const Classifier& model,
                          const FeatureBank& bank, const SearchOptions& opts) {
  if (model.bank_id() != bank.id()) {
    throw BankMismatchError("model bank " + model.bank_id() + " differs from " + bank.id());
  }
  ChipOptions chip = opts.chip;
  chip.size = bank.chip_size();
  const double angle = start.angle;
  const double w = img.width();
  const double h = img.height();
  auto inside = [&](const BBox& b) {
    for (const PointD& p : frame_corners(Frame{angle, b})) {
      constexpr double eps = 1e-9;
      if (p.x < -eps || p.y < -eps || p.x > w - 1 + eps || p.y > h - 1 + eps) return false;
    }
    return true;
  };

  using Key = std::tuple<double, double, double, double>;
  std::map<Key, SearchStep> memo;
  auto evaluate = [&](const BBox& b) -> const SearchStep& {
    const Key key{b.left, b.top, b.right, b.bottom};
    auto it = memo.find(key);
    if (it != memo.end()) return it->second;
    const Chip c = extract_chip(img, Frame{angle, b}, chip);
    const ClassScores s = score(model, feature_vector(c.pixels, bank), bank.id());
    return memo.emplace(key, SearchStep{b, heuristic(s), s}).first->second;
  };
  auto better = [](const SearchStep& a, const SearchStep& b) {
    if (a.h != b.h) return a.h > b.h;
    return a.scores.margin > b.scores.margin;
  };

  SearchTrace trace;
  trace.angle = angle;
  SearchStep current;
  bool have_current = false;
  if (start.box.valid() && inside(start.box)) {
    current = evaluate(start.box);
    have_current = true;
  }
  const int d = step_size(start.box, opts.rate);
  bool converged = false;

  while (trace.iterations < opts.max_iterations) {
    const BBox from = have_current ? current.box : start.box;
    const auto candidates = neighbors(from, d, inside);
    if (candidates.empty()) {
      throw std::invalid_argument("no permuted box fits inside the image");
    }
    ++trace.iterations;
    const SearchStep* best = nullptr;
    for (const BBox& b : candidates) {
      const SearchStep& s = evaluate(b);
      if (!best || better(s, *best)) best = &s;
    }
    if (!have_current) {
      current = *best;
      have_current = true;
      trace.visited.push_back(current);
      continue;
    }
    if (trace.visited.empty()) trace.visited.push_back(current);
    if (!better(*best, current)) {
      converged = true;
      break;
    }
    current = *best;
    trace.visited.push_back(current);
  }
  trace.hit_cap = !converged;
  if (trace.visited.empty()) trace.visited.push_back(current);
  trace.terminal = current.box;
  return trace;
}

std::string traces_to_json(const std::vector<SearchTrace>& traces) {
  using nlohmann::json;
  auto box = [](const BBox& b) { return json::array({b.left, b.top, b.right, b.bottom}); };
  json out = json::array();
  for (const SearchTrace& t : traces) {
    json steps = json::array();
    for (const SearchStep& s : t.visited) {
      steps.push_back({{"box", box(s.box)}, {"h", s.h}, {"pos", s.scores.pos},
                       {"neg", s.scores.neg}, {"margin", s.scores.margin}});
    }
    out.push_back({{"angle", t.angle},
                   {"iterations", t.iterations},
                   {"hit_cap", t.hit_cap},
                   {"terminal", box(t.terminal)},
                   {"visited", steps}});
  }
  return out.dump(2);
}

}  // namespace bdet
