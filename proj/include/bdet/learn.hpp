#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "bdet/alignment.hpp"
#include "bdet/contours.hpp"
#include "bdet/geometry.hpp"
#include "bdet/haar.hpp"

namespace bdet {

enum class Label : std::uint8_t { NotBuilding = 0, Building = 1 };

struct LabeledExample {
  FeatureVector features;
  Label label = Label::NotBuilding;
  std::string origin;
};

struct LabeledSet {
  std::vector<LabeledExample> examples;
  std::string bank_id;

  [[nodiscard]] std::size_t count(Label l) const;
  [[nodiscard]] std::size_t feature_count() const {
    return examples.empty() ? 0 : examples.front().features.size();
  }
  /// Throws std::invalid_argument if feature lengths are not uniform.
  void validate() const;
};

/// L+ (building) and L- (not building) scores. They are not forced to sum to
/// one. `margin` is the underlying real-valued decision score (ensemble
/// margin or log-odds); it orders candidates whose probabilities saturate.
struct ClassScores {
  double pos = 0.0;
  double neg = 0.0;
  double margin = 0.0;
};

/// Raised when a model is applied to features from a different Haar bank.
class BankMismatchError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Trained binary classifier. Implementations are immutable and safe to
/// score from several threads.
class Classifier {
 public:
  virtual ~Classifier() = default;
  [[nodiscard]] virtual std::string_view kind() const = 0;
  [[nodiscard]] virtual const std::string& bank_id() const = 0;
  [[nodiscard]] virtual std::size_t feature_count() const = 0;
  [[nodiscard]] virtual ClassScores score(std::span<const std::int32_t> features) const = 0;
  /// Kind-specific parameters as a JSON object string.
  [[nodiscard]] virtual std::string parameters_json() const = 0;
};

using ClassifierPtr = std::shared_ptr<const Classifier>;
using Trainer = std::function<ClassifierPtr(const LabeledSet&)>;

/// Checks bank and length, then scores. Throws BankMismatchError.
ClassScores score(const Classifier& model, const FeatureVector& fv, std::string_view bank_id);

/// One-feature threshold rule: predicts building when
/// polarity * (x - threshold) > 0.
struct Stump {
  std::size_t feature = 0;
  double threshold = 0.0;
  int polarity = 1;
  double weight = 0.0;

  [[nodiscard]] int predict(std::int32_t x) const {
    return (static_cast<double>(x) > threshold ? 1 : -1) * polarity;
  }
};

class AdaBoostModel final : public Classifier {
 public:
  AdaBoostModel(std::vector<Stump> stumps, std::string bank_id, std::size_t feature_count);

  [[nodiscard]] std::string_view kind() const override { return "adaboost"; }
  [[nodiscard]] const std::string& bank_id() const override { return bank_id_; }
  [[nodiscard]] std::size_t feature_count() const override { return feature_count_; }
  /// pos = logistic(2 * margin), neg = 1 - pos, margin = sum of weighted votes.
  [[nodiscard]] ClassScores score(std::span<const std::int32_t> features) const override;
  [[nodiscard]] std::string parameters_json() const override;

  [[nodiscard]] const std::vector<Stump>& stumps() const { return stumps_; }
  [[nodiscard]] double margin(std::span<const std::int32_t> features) const;

 private:
  std::vector<Stump> stumps_;
  std::string bank_id_;
  std::size_t feature_count_ = 0;
};

/// Per-class Gaussian per feature.
class NaiveBayesModel final : public Classifier {
 public:
  static constexpr double kVarianceFloor = 1e-9;

  struct ClassStats {
    std::vector<double> mean;
    std::vector<double> variance;
    double prior = 0.0;
  };

  NaiveBayesModel(ClassStats negative, ClassStats positive, std::string bank_id);

  [[nodiscard]] std::string_view kind() const override { return "naive-bayes"; }
  [[nodiscard]] const std::string& bank_id() const override { return bank_id_; }
  [[nodiscard]] std::size_t feature_count() const override { return pos_.mean.size(); }
  /// Normalized posteriors; margin is the log posterior odds.
  [[nodiscard]] ClassScores score(std::span<const std::int32_t> features) const override;
  [[nodiscard]] std::string parameters_json() const override;

  [[nodiscard]] const ClassStats& stats(Label l) const {
    return l == Label::Building ? pos_ : neg_;
  }

 private:
  ClassStats neg_;
  ClassStats pos_;
  std::string bank_id_;
};

/// Label-blind coin flip derived from a hash of the features and a seed.
/// Baseline for checking that a balanced set scores F1 near 0.5.
class RandomModel final : public Classifier {
 public:
  RandomModel(std::uint64_t seed, std::string bank_id, std::size_t feature_count);

  [[nodiscard]] std::string_view kind() const override { return "random"; }
  [[nodiscard]] const std::string& bank_id() const override { return bank_id_; }
  [[nodiscard]] std::size_t feature_count() const override { return feature_count_; }
  [[nodiscard]] ClassScores score(std::span<const std::int32_t> features) const override;
  [[nodiscard]] std::string parameters_json() const override;

 private:
  std::uint64_t seed_;
  std::string bank_id_;
  std::size_t feature_count_;
};

/// Per-round record of AdaBoost training, for inspection and tests.
struct AdaBoostLog {
  std::vector<std::vector<double>> round_weights;  // weights entering each round
  std::vector<double> round_errors;
  std::vector<double> weight_sums;  // after each round's normalization
};

/// AdaBoost.M1 over decision stumps. Thresholds are midpoints between sorted
/// unique feature values; ties keep the first (feature, threshold, polarity)
/// in ascending order with +1 before -1. Stops early on zero or >= 0.5 error.
/// No weight pruning is applied.
std::shared_ptr<const AdaBoostModel> train_adaboost(const LabeledSet& set, int epochs = 10,
                                                    AdaBoostLog* log = nullptr);

std::shared_ptr<const NaiveBayesModel> train_naive_bayes(const LabeledSet& set);

Trainer make_trainer(std::string_view kind, int epochs = 10, std::uint64_t seed = 0);

/// Label for a candidate box: building iff IoU with some ground-truth box
/// reaches iou_pos.
Label label_for(const BBox& box, std::span<const BBox> gt, double iou_pos);

struct LabelOptions {
  double iou_pos = 0.7;
  ChipOptions chip{};  // mode is forced to Strict
};

/// Labels candidates against ground truth and extracts their features,
/// using each candidate's stored angle. Candidates whose padded chip leaves
/// the image are dropped. Throws std::invalid_argument on an empty list.
LabeledSet label_candidates(const GrayImage& img, std::span<const Candidate> cands,
                            std::span<const BBox> gt, const FeatureBank& bank,
                            const LabelOptions& opts = {}, std::string_view origin = {});

/// Oversamples the minority class with replacement until counts match.
LabeledSet balance(const LabeledSet& set, std::uint64_t seed);

struct Metrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
};

/// Empty denominators give 0.
Metrics compute_metrics(std::size_t tp, std::size_t fp, std::size_t fn);

struct CrossValidation {
  Metrics overall;              // from counts pooled over all held-out folds
  std::vector<Metrics> folds;   // per held-out fold
  std::vector<std::size_t> fold_positives;
  std::vector<std::size_t> fold_negatives;
};

/// Stratified k-fold cross-validation; a held-out example is predicted
/// building when pos >= 0.5.
CrossValidation cross_validate(const LabeledSet& set, int k, const Trainer& trainer,
                               std::uint64_t seed);

/// Versioned model file: {"format","version","kind","bank_id","feature_count",
/// "parameters","seed","training_digest"}.
struct ModelMeta {
  std::uint64_t seed = 0;
  std::string training_digest;
};
std::string model_to_json(const Classifier& model, const ModelMeta& meta = {});
ClassifierPtr model_from_json(const std::string& text, ModelMeta* meta = nullptr);

/// Hex digest of a labeled set's labels and features.
std::string training_digest(const LabeledSet& set);

}  // namespace bdet
