#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "bdet/alignment.hpp"
#include "bdet/contours.hpp"
#include "bdet/edges.hpp"
#include "bdet/haar.hpp"
#include "bdet/imagery.hpp"
#include "bdet/learn.hpp"
#include "bdet/phm.hpp"

namespace bdet {

/// Raised for malformed configuration or inputs; the CLI maps it to exit 2.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct RunConfig {
  double grid_step = 0.05;
  bool cartesian_grid = false;
  std::optional<ThresholdPair> single_pair;  // replaces the grid when set
  FilterOptions filter;
  double pad = 0.05;
  int chip_size = 200;
  double sigma = 1.0;
  int angle_span = 16;      // chord length (in chain points) for segment angles
  bool align = true;
  std::string classifier = "adaboost";
  int epochs = 10;
  double iou_pos = 0.7;     // training label threshold
  double match_iou = 0.5;   // evaluation and candidate-recall threshold
  double decision_threshold = 0.5;
  double nms_iou = 0.3;     // 0 disables suppression
  std::optional<double> phm_rate;
  double phm_min_pos = 0.5;   // candidates below this pos are not searched
  int phm_max_iterations = 100;
  int threads = 0;            // 0 = hardware concurrency
  std::uint64_t seed = 0;

  /// Throws ValidationError naming the offending field.
  void validate() const;
};

/// Parses a JSON object; missing keys keep their defaults, unknown keys are
/// rejected. The result is validated.
RunConfig config_from_json(std::string_view text);
std::string config_to_json(const RunConfig& cfg);

std::vector<ThresholdPair> threshold_pairs(const RunConfig& cfg);

/// Sample-and-merge: canny -> trace -> bounding box for every threshold pair,
/// concatenated in grid order, then filtered. Angles are left at 0.
std::vector<Candidate> generate_candidates(const GrayImage& img, const RunConfig& cfg);

double estimate_angle(std::span<const Point> chain, const RunConfig& cfg);
/// Sets every candidate's angle (0 when alignment is off).
void align_candidates(std::vector<Candidate>& cands, const RunConfig& cfg);

struct Detection {
  BBox bbox;      // axis-aligned bound of the frame
  Frame frame;
  double angle = 0.0;
  ClassScores score;
  double h = 0.0;
  ThresholdPair source;
};

/// Candidates -> alignment -> chips -> features -> scores. Keeps pos >= the
/// decision threshold; with a PHM rate, candidates with pos >= phm_min_pos
/// are refined and kept when their final H reaches the threshold. Overlapping
/// detections are suppressed (highest H first). Output is sorted by
/// descending H. Throws BankMismatchError.
std::vector<Detection> detect(const GrayImage& img, const Classifier& model, const FeatureBank& bank,
                              const RunConfig& cfg, std::vector<SearchTrace>* traces = nullptr);

std::vector<Detection> non_max_suppression(std::vector<Detection> dets, double iou_threshold);

/// Greedy one-to-one matching, highest H first (ties broken by box
/// coordinates); each detection takes the unmatched ground-truth box of
/// highest IoU if it reaches `iou`.
Metrics evaluate(std::span<const Detection> dets, std::span<const BBox> gt, double iou);

/// Fraction of ground-truth boxes hit by at least one candidate bbox at
/// IoU >= iou. Empty ground truth gives 1.
double candidate_recall(std::span<const Candidate> cands, std::span<const BBox> gt, double iou);
std::size_t candidates_matched(std::span<const Candidate> cands, std::span<const BBox> gt, double iou);

struct LabeledImage {
  std::string name;
  GrayImage image;
  std::vector<BBox> gt;
};

/// Candidates from every image, aligned per cfg, labeled and featurized.
/// Not balanced.
LabeledSet build_training_set(std::span<const LabeledImage> images, const FeatureBank& bank,
                              const RunConfig& cfg);

struct SweepRow {
  std::string label;  // "grid" or "single"
  double step = 0.0;  // 0 for the single-pair row
  double low = 0.0;
  double high = 0.0;
  std::size_t pairs = 0;
  std::size_t candidates = 0;
  std::size_t gt = 0;
  std::size_t matched = 0;
  double recall = 0.0;
};

/// One row per step (in the given order), optionally followed by the
/// single-pair (0.2, 0.4) baseline. Throws ValidationError on no scenes.
std::vector<SweepRow> recall_sweep(std::span<const LabeledImage> scenes, std::span<const double> steps,
                                   const RunConfig& cfg, bool single_pair_baseline = true);

/// Copy of `img` with every detection frame stroked in yellow.
RgbImage render_overlay(const RgbImage& img, std::span<const Detection> dets);
void render_overlay(const RgbImage& img, std::span<const Detection> dets,
                    const std::filesystem::path& path);

struct BenchRow {
  int width = 0;
  int height = 0;
  std::size_t pixels = 0;
  std::string stage;
  double seconds = 0.0;
  std::size_t candidates = 0;
  std::size_t detections = 0;
};

inline constexpr std::array<std::string_view, 5> kBenchStages{
    "contours", "contours+alignment", "contours+alignment+haar", "ml", "ml+phm"};

/// Times each stage on a synthetic scene per size. Each stage runs at least
/// `repeats` times and until `min_seconds` have elapsed; the best run is kept.
/// Sizes must double in pixel count and tile by the first; at least three
/// are required. Scenes repeat one tile layout so content scales exactly with area.
std::vector<BenchRow> benchmark(std::span<const std::pair<int, int>> sizes, const Classifier& model,
                                const FeatureBank& bank, const RunConfig& cfg, std::uint64_t seed,
                                int repeats = 1, double min_seconds = 0.5);

/// Runs fn(0..n-1) on up to `threads` workers (0 = hardware concurrency).
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn);

}  // namespace bdet
