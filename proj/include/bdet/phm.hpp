#pragma once

#include <functional>
#include <string>
#include <vector>

#include "bdet/alignment.hpp"
#include "bdet/geometry.hpp"
#include "bdet/haar.hpp"
#include "bdet/learn.hpp"

namespace bdet {

/// Harmonic mean of pos and (1 - neg); 0 when both terms are 0.
double heuristic(const ClassScores& s);

/// d = rate * (height + width) / 2, rounded half-up, at least 1.
/// Throws std::invalid_argument unless rate > 0.
int step_size(const BBox& b, double rate);

/// Edge offsets (top, bottom, left, right), each in {-1, 0, +1}.
struct Permutation {
  std::array<int, 4> deltas{};
};

/// All 81 permutations in lexicographic order over (top, bottom, left,
/// right) with -1 < 0 < +1. The identity is at index 40.
const std::vector<Permutation>& all_permutations();

BBox apply(const BBox& b, const Permutation& p, int d);

/// Permuted boxes that stay well-formed and pass `admissible`, in
/// permutation order; the identity is kept whenever it is admissible.
std::vector<BBox> neighbors(const BBox& b, int d, const std::function<bool(const BBox&)>& admissible);

/// Axis-aligned form: boxes must lie inside [0, width - 1] x [0, height - 1].
std::vector<BBox> neighbors(const BBox& b, int d, int image_width, int image_height);

struct SearchStep {
  BBox box;       // in the frame's rotated coordinates
  double h = 0.0;
  ClassScores scores;
};

struct SearchTrace {
  double angle = 0.0;             // frame angle shared by every visited box
  std::vector<SearchStep> visited;  // accepted path, starting with the input
  BBox terminal;
  int iterations = 0;
  bool hit_cap = false;
};

struct SearchOptions {
  double rate = 0.01;
  int max_iterations = 100;
  ChipOptions chip{0.05, 200, BoundsMode::Clamp};
};

/// Greedy ascent over the permutation mesh around `start`. Each iteration
/// scores every admissible neighbor (chip re-extracted at the frame's angle)
/// and moves to the best one if it beats the current box; H ties are broken
/// by the classifier margin, and a full tie keeps the current box.
/// Throws std::invalid_argument if no neighbor (not even the start) fits in
/// the image, and BankMismatchError if model and bank disagree.
SearchTrace greedy_search(const GrayImage& img, const Frame& start, const Classifier& model,
                          const FeatureBank& bank, const SearchOptions& opts = {});

/// JSON array of traces for inspection.
std::string traces_to_json(const std::vector<SearchTrace>& traces);

}  // namespace bdet
