#include "bdet/learn.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <numeric>
#include <random>
#include <stdexcept>

namespace bdet {

using nlohmann::json;

namespace {

constexpr int kModelVersion = 1;

double logistic(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

int sign_of(Label l) { return l == Label::Building ? 1 : -1; }

void check_features(std::span<const std::int32_t> features, std::size_t expected) {
  if (features.size() != expected) {
    throw BankMismatchError("feature vector has " + std::to_string(features.size()) +
                            " values, model expects " + std::to_string(expected));
  }
}

std::uint64_t mix(std::uint64_t h, std::uint64_t v) {
  h ^= v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
  return h;
}

}  // namespace

std::size_t LabeledSet::count(Label l) const {
  return static_cast<std::size_t>(std::count_if(
      examples.begin(), examples.end(), [l](const LabeledExample& e) { return e.label == l; }));
}

void LabeledSet::validate() const {
  const std::size_t n = feature_count();
  for (const LabeledExample& e : examples) {
    if (e.features.size() != n) throw std::invalid_argument("non-uniform feature lengths in set");
  }
}

ClassScores score(const Classifier& model, const FeatureVector& fv, std::string_view bank_id) {
  if (model.bank_id() != bank_id) {
    throw BankMismatchError("model was trained on bank " + model.bank_id() + ", features are from " +
                            std::string(bank_id));
  }
  return model.score(fv);
}

// --- AdaBoost -------------------------------------------------------------

AdaBoostModel::AdaBoostModel(std::vector<Stump> stumps, std::string bank_id,
                             std::size_t feature_count)
    : stumps_(std::move(stumps)), bank_id_(std::move(bank_id)), feature_count_(feature_count) {
  if (stumps_.empty()) throw std::invalid_argument("AdaBoost model needs at least one stump");
  for (const Stump& s : stumps_) {
    if (!std::isfinite(s.weight)) throw std::invalid_argument("non-finite stump weight");
    if (s.feature >= feature_count_) throw std::invalid_argument("stump feature out of range");
  }
}

double AdaBoostModel::margin(std::span<const std::int32_t> features) const {
  double m = 0.0;
  for (const Stump& s : stumps_) m += s.weight * s.predict(features[s.feature]);
  return m;
}

ClassScores AdaBoostModel::score(std::span<const std::int32_t> features) const {
  check_features(features, feature_count_);
  const double m = margin(features);
  const double pos = logistic(2.0 * m);
  return {pos, 1.0 - pos, m};
}

std::string AdaBoostModel::parameters_json() const {
  json stumps = json::array();
  for (const Stump& s : stumps_) {
    stumps.push_back({{"feature", s.feature},
                      {"threshold", s.threshold},
                      {"polarity", s.polarity},
                      {"weight", s.weight}});
  }
  return json{{"stumps", stumps}}.dump();
}

std::shared_ptr<const AdaBoostModel> train_adaboost(const LabeledSet& set, int epochs,
                                                    AdaBoostLog* log) {
  set.validate();
  if (epochs < 1) throw std::invalid_argument("epochs must be >= 1");
  if (set.count(Label::Building) == 0 || set.count(Label::NotBuilding) == 0) {
    throw std::invalid_argument("AdaBoost needs examples of both classes");
  }
  const std::size_t n = set.examples.size();
  const std::size_t dims = set.feature_count();

  // Per-feature ascending order, computed once.
  std::vector<std::uint32_t> order(n * dims);
  std::vector<std::uint32_t> idx(n);
  bool any_split = false;
  for (std::size_t j = 0; j < dims; ++j) {
    std::iota(idx.begin(), idx.end(), 0u);
    std::stable_sort(idx.begin(), idx.end(), [&](std::uint32_t a, std::uint32_t b) {
      return set.examples[a].features[j] < set.examples[b].features[j];
    });
    std::copy(idx.begin(), idx.end(), order.begin() + static_cast<std::ptrdiff_t>(j * n));
    if (set.examples[idx.front()].features[j] != set.examples[idx.back()].features[j]) {
      any_split = true;
    }
  }
  if (!any_split) {
    throw std::invalid_argument("degenerate training set: every feature is constant");
  }

  std::vector<int> y(n);
  for (std::size_t i = 0; i < n; ++i) y[i] = sign_of(set.examples[i].label);
  std::vector<double> w(n, 1.0 / static_cast<double>(n));
  std::vector<Stump> stumps;

  for (int round = 0; round < epochs; ++round) {
    if (log) log->round_weights.push_back(w);
    double wp_total = 0.0;
    double wn_total = 0.0;
    for (std::size_t i = 0; i < n; ++i) (y[i] > 0 ? wp_total : wn_total) += w[i];

    Stump best;
    double best_err = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < dims; ++j) {
      const std::uint32_t* ord = &order[j * n];
      double wp_le = 0.0;
      double wn_le = 0.0;
      for (std::size_t k = 0; k + 1 < n; ++k) {
        const std::uint32_t i = ord[k];
        (y[i] > 0 ? wp_le : wn_le) += w[i];
        const std::int32_t v = set.examples[i].features[j];
        const std::int32_t next = set.examples[ord[k + 1]].features[j];
        if (v == next) continue;
        // +1: building above the threshold; -1: building below it.
        const double err_pos = wp_le + (wn_total - wn_le);
        const double err_neg = wn_le + (wp_total - wp_le);
        const double thr = (static_cast<double>(v) + static_cast<double>(next)) / 2.0;
        // Running sums carry rounding noise; errors this close are ties and
        // the earlier stump is kept.
        constexpr double kTie = 1e-12;
        if (err_pos < best_err - kTie) {
          best_err = err_pos;
          best = {j, thr, 1, 0.0};
        }
        if (err_neg < best_err - kTie) {
          best_err = err_neg;
          best = {j, thr, -1, 0.0};
        }
      }
    }

    // Recompute the chosen stump's error directly so rounding in the running
    // sums does not leak into the ensemble weight.
    double err = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (best.predict(set.examples[i].features[best.feature]) != y[i]) err += w[i];
    }
    if (log) log->round_errors.push_back(err);

    if (err >= 0.5) {
      if (stumps.empty()) stumps.push_back(best);  // weight 0: uninformative
      break;
    }
    constexpr double kMinError = 1e-10;
    const double e = std::max(err, kMinError);
    best.weight = 0.5 * std::log((1.0 - e) / e);
    stumps.push_back(best);
    if (err <= 0.0) {
      if (log) log->weight_sums.push_back(std::accumulate(w.begin(), w.end(), 0.0));
      break;
    }

    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      w[i] *= std::exp(-best.weight * y[i] * best.predict(set.examples[i].features[best.feature]));
      total += w[i];
    }
    for (double& wi : w) wi /= total;
    if (log) log->weight_sums.push_back(std::accumulate(w.begin(), w.end(), 0.0));
  }
  return std::make_shared<const AdaBoostModel>(std::move(stumps), set.bank_id, dims);
}

// --- Naive Bayes ----------------------------------------------------------

NaiveBayesModel::NaiveBayesModel(ClassStats negative, ClassStats positive, std::string bank_id)
    : neg_(std::move(negative)), pos_(std::move(positive)), bank_id_(std::move(bank_id)) {
  if (neg_.mean.size() != pos_.mean.size() || neg_.variance.size() != neg_.mean.size() ||
      pos_.variance.size() != pos_.mean.size()) {
    throw std::invalid_argument("naive Bayes class statistics have mismatched lengths");
  }
  for (ClassStats* c : {&neg_, &pos_}) {
    for (double& v : c->variance) v = std::max(v, kVarianceFloor);
  }
}

ClassScores NaiveBayesModel::score(std::span<const std::int32_t> features) const {
  check_features(features, pos_.mean.size());
  auto log_joint = [&](const ClassStats& c) {
    double acc = std::log(c.prior);
    for (std::size_t j = 0; j < features.size(); ++j) {
      const double d = static_cast<double>(features[j]) - c.mean[j];
      acc += -0.5 * std::log(2.0 * std::numbers::pi * c.variance[j]) - d * d / (2.0 * c.variance[j]);
    }
    return acc;
  };
  const double lp = log_joint(pos_);
  const double ln = log_joint(neg_);
  const double odds = lp - ln;
  const double pos = logistic(odds);
  return {pos, logistic(-odds), odds};
}

std::string NaiveBayesModel::parameters_json() const {
  auto stats = [](const ClassStats& c) {
    return json{{"prior", c.prior}, {"mean", c.mean}, {"variance", c.variance}};
  };
  return json{{"negative", stats(neg_)}, {"positive", stats(pos_)}}.dump();
}

std::shared_ptr<const NaiveBayesModel> train_naive_bayes(const LabeledSet& set) {
  set.validate();
  const std::size_t dims = set.feature_count();
  const std::size_t n = set.examples.size();
  NaiveBayesModel::ClassStats stats[2];
  std::size_t counts[2] = {0, 0};
  for (auto& s : stats) {
    s.mean.assign(dims, 0.0);
    s.variance.assign(dims, 0.0);
  }
  for (const LabeledExample& e : set.examples) {
    const auto c = static_cast<std::size_t>(e.label);
    ++counts[c];
    for (std::size_t j = 0; j < dims; ++j) stats[c].mean[j] += e.features[j];
  }
  if (counts[0] == 0 || counts[1] == 0) {
    throw std::invalid_argument("naive Bayes needs examples of both classes");
  }
  for (std::size_t c = 0; c < 2; ++c) {
    for (double& m : stats[c].mean) m /= static_cast<double>(counts[c]);
  }
  for (const LabeledExample& e : set.examples) {
    const auto c = static_cast<std::size_t>(e.label);
    for (std::size_t j = 0; j < dims; ++j) {
      const double d = e.features[j] - stats[c].mean[j];
      stats[c].variance[j] += d * d;
    }
  }
  for (std::size_t c = 0; c < 2; ++c) {
    for (double& v : stats[c].variance) v /= static_cast<double>(counts[c]);
    stats[c].prior = static_cast<double>(counts[c]) / static_cast<double>(n);
  }
  return std::make_shared<const NaiveBayesModel>(std::move(stats[0]), std::move(stats[1]),
                                                 set.bank_id);
}

// --- Random baseline ------------------------------------------------------

RandomModel::RandomModel(std::uint64_t seed, std::string bank_id, std::size_t feature_count)
    : seed_(seed), bank_id_(std::move(bank_id)), feature_count_(feature_count) {}

ClassScores RandomModel::score(std::span<const std::int32_t> features) const {
  check_features(features, feature_count_);
  std::uint64_t h = seed_;
  for (const std::int32_t v : features) h = mix(h, static_cast<std::uint32_t>(v));
  std::mt19937_64 rng(h);
  const double pos = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  return {pos, 1.0 - pos, pos - 0.5};
}

std::string RandomModel::parameters_json() const { return json{{"seed", seed_}}.dump(); }

Trainer make_trainer(std::string_view kind, int epochs, std::uint64_t seed) {
  if (kind == "adaboost") {
    return [epochs](const LabeledSet& s) -> ClassifierPtr { return train_adaboost(s, epochs); };
  }
  if (kind == "naive-bayes") {
    return [](const LabeledSet& s) -> ClassifierPtr { return train_naive_bayes(s); };
  }
  if (kind == "random") {
    return [seed](const LabeledSet& s) -> ClassifierPtr {
      return std::make_shared<const RandomModel>(seed, s.bank_id, s.feature_count());
    };
  }
  throw std::invalid_argument("unknown classifier kind: " + std::string(kind));
}

// --- Training-set construction ----------------------------------------------

Label label_for(const BBox& box, std::span<const BBox> gt, double iou_pos) {
  if (!(iou_pos > 0.0 && iou_pos <= 1.0)) throw std::invalid_argument("iou_pos must be in (0, 1]");
  for (const BBox& g : gt) {
    if (iou(box, g) >= iou_pos) return Label::Building;
  }
  return Label::NotBuilding;
}

LabeledSet label_candidates(const GrayImage& img, std::span<const Candidate> cands,
                            std::span<const BBox> gt, const FeatureBank& bank,
                            const LabelOptions& opts, std::string_view origin) {
  if (cands.empty()) throw std::invalid_argument("label_candidates: empty candidate list");
  ChipOptions chip = opts.chip;
  chip.mode = BoundsMode::Strict;
  chip.size = bank.chip_size();
  LabeledSet out;
  out.bank_id = bank.id();
  for (std::size_t i = 0; i < cands.size(); ++i) {
    const Label label = label_for(cands[i].bbox, gt, opts.iou_pos);
    Chip c;
    try {
      c = extract_chip(img, cands[i], chip);
    } catch (const OutOfBoundsError&) {
      continue;
    }
    out.examples.push_back({feature_vector(c.pixels, bank), label,
                            std::string(origin) + "#" + std::to_string(i)});
  }
  return out;
}

LabeledSet balance(const LabeledSet& set, std::uint64_t seed) {
  std::vector<std::size_t> by_class[2];
  for (std::size_t i = 0; i < set.examples.size(); ++i) {
    by_class[static_cast<std::size_t>(set.examples[i].label)].push_back(i);
  }
  if (by_class[0].empty() || by_class[1].empty()) {
    throw std::invalid_argument("balance needs at least one example of each class");
  }
  LabeledSet out = set;
  const std::size_t minority = by_class[1].size() <= by_class[0].size() ? 1 : 0;
  const auto& pool = by_class[minority];
  const std::size_t deficit = by_class[1 - minority].size() - pool.size();
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
  for (std::size_t k = 0; k < deficit; ++k) out.examples.push_back(set.examples[pool[pick(rng)]]);
  return out;
}

// --- Evaluation -----------------------------------------------------------

Metrics compute_metrics(std::size_t tp, std::size_t fp, std::size_t fn) {
  Metrics m;
  m.tp = tp;
  m.fp = fp;
  m.fn = fn;
  m.precision = tp + fp > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
  m.recall = tp + fn > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
  m.f1 = m.precision + m.recall > 0.0
             ? 2.0 * m.precision * m.recall / (m.precision + m.recall)
             : 0.0;
  return m;
}

CrossValidation cross_validate(const LabeledSet& set, int k, const Trainer& trainer,
                               std::uint64_t seed) {
  if (k < 2) throw std::invalid_argument("cross-validation needs k >= 2");
  std::vector<std::size_t> by_class[2];
  for (std::size_t i = 0; i < set.examples.size(); ++i) {
    by_class[static_cast<std::size_t>(set.examples[i].label)].push_back(i);
  }
  const std::size_t kk = static_cast<std::size_t>(k);
  if (by_class[0].size() < kk || by_class[1].size() < kk) {
    throw std::invalid_argument("k = " + std::to_string(k) + " exceeds the smaller class size");
  }
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> fold_of(set.examples.size());
  for (auto& members : by_class) {
    std::shuffle(members.begin(), members.end(), rng);
    for (std::size_t r = 0; r < members.size(); ++r) fold_of[members[r]] = r % kk;
  }

  CrossValidation cv;
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  for (std::size_t fold = 0; fold < kk; ++fold) {
    LabeledSet train;
    train.bank_id = set.bank_id;
    std::vector<std::size_t> held;
    for (std::size_t i = 0; i < set.examples.size(); ++i) {
      if (fold_of[i] == fold) {
        held.push_back(i);
      } else {
        train.examples.push_back(set.examples[i]);
      }
    }
    const ClassifierPtr model = trainer(train);
    std::size_t ftp = 0;
    std::size_t ffp = 0;
    std::size_t ffn = 0;
    std::size_t npos = 0;
    for (const std::size_t i : held) {
      const bool truth = set.examples[i].label == Label::Building;
      const bool predicted = model->score(set.examples[i].features).pos >= 0.5;
      npos += truth ? 1 : 0;
      if (predicted && truth) ++ftp;
      if (predicted && !truth) ++ffp;
      if (!predicted && truth) ++ffn;
    }
    cv.folds.push_back(compute_metrics(ftp, ffp, ffn));
    cv.fold_positives.push_back(npos);
    cv.fold_negatives.push_back(held.size() - npos);
    tp += ftp;
    fp += ffp;
    fn += ffn;
  }
  cv.overall = compute_metrics(tp, fp, fn);
  return cv;
}

// --- Serialization --------------------------------------------------------

std::string training_digest(const LabeledSet& set) {
  std::uint64_t h = 1469598103934665603ULL;
  for (const LabeledExample& e : set.examples) {
    h = mix(h, static_cast<std::uint64_t>(e.label));
    for (const std::int32_t v : e.features) h = mix(h, static_cast<std::uint32_t>(v));
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string model_to_json(const Classifier& model, const ModelMeta& meta) {
  json j;
  j["format"] = "bdet-model";
  j["version"] = kModelVersion;
  j["kind"] = std::string(model.kind());
  j["bank_id"] = model.bank_id();
  j["feature_count"] = model.feature_count();
  j["parameters"] = json::parse(model.parameters_json());
  j["seed"] = meta.seed;
  j["training_digest"] = meta.training_digest;
  return j.dump(2);
}

namespace {

ClassifierPtr parse_model(const json& j, ModelMeta* meta) {
  if (j.value("format", "") != "bdet-model" || j.value("version", 0) != kModelVersion) {
    throw std::invalid_argument("not a version-1 model file");
  }
  const std::string kind = j.at("kind");
  const std::string bank_id = j.at("bank_id");
  const std::size_t dims = j.at("feature_count");
  const json& p = j.at("parameters");
  if (meta) {
    meta->seed = j.value("seed", std::uint64_t{0});
    meta->training_digest = j.value("training_digest", "");
  }
  if (kind == "adaboost") {
    std::vector<Stump> stumps;
    for (const json& s : p.at("stumps")) {
      stumps.push_back({s.at("feature"), s.at("threshold"), s.at("polarity"), s.at("weight")});
    }
    return std::make_shared<const AdaBoostModel>(std::move(stumps), bank_id, dims);
  }
  if (kind == "naive-bayes") {
    auto stats = [](const json& c) {
      return NaiveBayesModel::ClassStats{c.at("mean").get<std::vector<double>>(),
                                         c.at("variance").get<std::vector<double>>(),
                                         c.at("prior").get<double>()};
    };
    return std::make_shared<const NaiveBayesModel>(stats(p.at("negative")), stats(p.at("positive")),
                                                   bank_id);
  }
  if (kind == "random") {
    return std::make_shared<const RandomModel>(p.at("seed").get<std::uint64_t>(), bank_id, dims);
  }
  throw std::invalid_argument("unknown model kind: " + kind);
}

}  // namespace

ClassifierPtr model_from_json(const std::string& text, ModelMeta* meta) {
  try {
    return parse_model(json::parse(text), meta);
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("malformed model file: ") + e.what());
  }
}

}  // namespace bdet
