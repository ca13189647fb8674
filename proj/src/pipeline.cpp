#include "bdet/pipeline.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <mutex>
#include <numeric>
#include <thread>

#include "bdet/synth.hpp"

namespace bdet {

using nlohmann::json;

void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn) {
  std::size_t workers = threads > 0 ? static_cast<std::size_t>(threads)
                                    : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min(workers, n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto work = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        next = n;
      }
    }
  };
  std::vector<std::jthread> pool;
  pool.reserve(workers - 1);
  for (std::size_t t = 1; t < workers; ++t) pool.emplace_back(work);
  work();
  pool.clear();
  if (error) std::rethrow_exception(error);
}

// ---------------------------------------------------------------- config

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw ValidationError("invalid config: " + what);
}

bool is_fraction(double v) { return v > 0.0 && v <= 1.0; }

}  // namespace

void RunConfig::validate() const {
  require(is_fraction(grid_step), "grid_step must lie in (0, 1]");
  try {
    (void)threshold_grid(grid_step);
  } catch (const std::invalid_argument& e) {
    throw ValidationError(std::string("invalid config: grid_step: ") + e.what());
  }
  if (single_pair) {
    try {
      single_pair->validate();
    } catch (const std::invalid_argument& e) {
      throw ValidationError(std::string("invalid config: single_pair: ") + e.what());
    }
  }
  require(filter.min_points >= 3, "min_points must be >= 3");
  require(filter.min_side >= 0.0, "min_side must be >= 0");
  require(filter.dedup_tol >= 0.0, "dedup_tol must be >= 0");
  require(pad >= 0.0 && pad <= 1.0, "pad must lie in [0, 1]");
  require(chip_size >= 100 && chip_size <= 1000, "chip_size must lie in [100, 1000]");
  require(sigma > 0.0 && sigma <= 90.0, "sigma must lie in (0, 90]");
  require(angle_span >= 1 && angle_span <= 1000, "angle_span must lie in [1, 1000]");
  require(classifier == "adaboost" || classifier == "naive-bayes" || classifier == "random",
          "classifier must be adaboost, naive-bayes or random");
  require(epochs >= 1 && epochs <= 10000, "epochs must lie in [1, 10000]");
  require(is_fraction(iou_pos), "iou_pos must lie in (0, 1]");
  require(is_fraction(match_iou), "match_iou must lie in (0, 1]");
  require(decision_threshold >= 0.0 && decision_threshold <= 1.0,
          "decision_threshold must lie in [0, 1]");
  require(nms_iou >= 0.0 && nms_iou <= 1.0, "nms_iou must lie in [0, 1]");
  if (phm_rate) require(is_fraction(*phm_rate), "phm_rate must lie in (0, 1]");
  require(phm_min_pos >= 0.0 && phm_min_pos <= 1.0, "phm_min_pos must lie in [0, 1]");
  require(phm_max_iterations >= 1, "phm_max_iterations must be >= 1");
  require(threads >= 0, "threads must be >= 0");
}

RunConfig config_from_json(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("config is not valid JSON: ") + e.what());
  }
  require(j.is_object(), "top level must be an object");
  RunConfig cfg;
  try {
    for (const auto& [key, v] : j.items()) {
      if (key == "grid_step") cfg.grid_step = v.get<double>();
      else if (key == "cartesian_grid") cfg.cartesian_grid = v.get<bool>();
      else if (key == "single_pair") {
        if (v.is_null()) cfg.single_pair.reset();
        else {
          require(v.is_array() && v.size() == 2, "single_pair must be [low, high] or null");
          cfg.single_pair = ThresholdPair{v[0].get<double>(), v[1].get<double>()};
        }
      } else if (key == "min_points") cfg.filter.min_points = v.get<std::size_t>();
      else if (key == "min_side") cfg.filter.min_side = v.get<double>();
      else if (key == "dedup_tol") cfg.filter.dedup_tol = v.get<double>();
      else if (key == "pad") cfg.pad = v.get<double>();
      else if (key == "chip_size") cfg.chip_size = v.get<int>();
      else if (key == "sigma") cfg.sigma = v.get<double>();
      else if (key == "angle_span") cfg.angle_span = v.get<int>();
      else if (key == "align") cfg.align = v.get<bool>();
      else if (key == "classifier") cfg.classifier = v.get<std::string>();
      else if (key == "epochs") cfg.epochs = v.get<int>();
      else if (key == "iou_pos") cfg.iou_pos = v.get<double>();
      else if (key == "match_iou") cfg.match_iou = v.get<double>();
      else if (key == "decision_threshold") cfg.decision_threshold = v.get<double>();
      else if (key == "nms_iou") cfg.nms_iou = v.get<double>();
      else if (key == "phm_rate") {
        if (v.is_null()) cfg.phm_rate.reset();
        else cfg.phm_rate = v.get<double>();
      } else if (key == "phm_min_pos") cfg.phm_min_pos = v.get<double>();
      else if (key == "phm_max_iterations") cfg.phm_max_iterations = v.get<int>();
      else if (key == "threads") cfg.threads = v.get<int>();
      else if (key == "seed") cfg.seed = v.get<std::uint64_t>();
      else throw ValidationError("invalid config: unknown key '" + key + "'");
    }
  } catch (const json::exception& e) {
    throw ValidationError(std::string("invalid config: wrong value type: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

std::string config_to_json(const RunConfig& cfg) {
  json j;
  j["grid_step"] = cfg.grid_step;
  j["cartesian_grid"] = cfg.cartesian_grid;
  j["single_pair"] = cfg.single_pair ? json::array({cfg.single_pair->low, cfg.single_pair->high})
                                     : json(nullptr);
  j["min_points"] = cfg.filter.min_points;
  j["min_side"] = cfg.filter.min_side;
  j["dedup_tol"] = cfg.filter.dedup_tol;
  j["pad"] = cfg.pad;
  j["chip_size"] = cfg.chip_size;
  j["sigma"] = cfg.sigma;
  j["angle_span"] = cfg.angle_span;
  j["align"] = cfg.align;
  j["classifier"] = cfg.classifier;
  j["epochs"] = cfg.epochs;
  j["iou_pos"] = cfg.iou_pos;
  j["match_iou"] = cfg.match_iou;
  j["decision_threshold"] = cfg.decision_threshold;
  j["nms_iou"] = cfg.nms_iou;
  j["phm_rate"] = cfg.phm_rate ? json(*cfg.phm_rate) : json(nullptr);
  j["phm_min_pos"] = cfg.phm_min_pos;
  j["phm_max_iterations"] = cfg.phm_max_iterations;
  j["threads"] = cfg.threads;
  j["seed"] = cfg.seed;
  return j.dump(2);
}

std::vector<ThresholdPair> threshold_pairs(const RunConfig& cfg) {
  if (cfg.single_pair) return {*cfg.single_pair};
  return threshold_grid(cfg.grid_step, cfg.cartesian_grid ? GridMode::Cartesian : GridMode::Ordered);
}

// ---------------------------------------------------------------- candidates

std::vector<Candidate> generate_candidates(const GrayImage& img, const RunConfig& cfg) {
  if (img.width() < 3 || img.height() < 3) return {};
  const SuppressedGradient sg(img);
  const auto pairs = threshold_pairs(cfg);
  // Size limits are per-candidate, so they are applied per pair to keep the
  // merged list small; deduplication needs the whole ordered union.
  FilterOptions size_only = cfg.filter;
  size_only.dedup_tol = 0.0;
  std::vector<std::vector<Candidate>> per_pair(pairs.size());
  parallel_for(pairs.size(), cfg.threads, [&](std::size_t i) {
    std::vector<Candidate> raw;
    for (Contour& c : trace(sg.hysteresis(pairs[i]))) {
      const BBox box = bounding_box(c);
      raw.push_back({std::move(c), box, pairs[i], 0.0});
    }
    per_pair[i] = filter(std::move(raw), size_only);
  });
  std::vector<Candidate> merged;
  for (auto& v : per_pair) {
    std::move(v.begin(), v.end(), std::back_inserter(merged));
    v.clear();
    v.shrink_to_fit();
  }
  return filter(std::move(merged), cfg.filter);
}

double estimate_angle(std::span<const Point> chain, const RunConfig& cfg) {
  if (chain.size() < 2) return 0.0;
  const int span = std::max(1, std::min(cfg.angle_span, static_cast<int>(chain.size() / 4)));
  try {
    return dominant_angle_gaussian(segment_angles(chain, span), cfg.sigma);
  } catch (const std::invalid_argument&) {
    return 0.0;
  }
}

void align_candidates(std::vector<Candidate>& cands, const RunConfig& cfg) {
  parallel_for(cands.size(), cfg.threads, [&](std::size_t i) {
    cands[i].angle = cfg.align ? estimate_angle(cands[i].contour, cfg) : 0.0;
  });
}

// ---------------------------------------------------------------- detection

namespace {

bool ranks_before(const Detection& a, const Detection& b) {
  if (a.h != b.h) return a.h > b.h;
  if (a.score.margin != b.score.margin) return a.score.margin > b.score.margin;
  return std::tie(a.bbox.left, a.bbox.top, a.bbox.right, a.bbox.bottom, a.angle) <
         std::tie(b.bbox.left, b.bbox.top, b.bbox.right, b.bbox.bottom, b.angle);
}

}  // namespace

std::vector<Detection> non_max_suppression(std::vector<Detection> dets, double iou_threshold) {
  std::sort(dets.begin(), dets.end(), ranks_before);
  if (iou_threshold <= 0.0) return dets;
  std::vector<Detection> kept;
  for (Detection& d : dets) {
    const bool overlaps = std::any_of(kept.begin(), kept.end(), [&](const Detection& k) {
      return iou(k.bbox, d.bbox) > iou_threshold;
    });
    if (!overlaps) kept.push_back(std::move(d));
  }
  return kept;
}

std::vector<Detection> detect(const GrayImage& img, const Classifier& model, const FeatureBank& bank,
                              const RunConfig& cfg, std::vector<SearchTrace>* traces) {
  cfg.validate();
  if (model.bank_id() != bank.id()) {
    throw BankMismatchError("model bank " + model.bank_id() + " differs from " + bank.id());
  }
  if (bank.chip_size() != cfg.chip_size) {
    throw ValidationError("bank chip size differs from config chip_size");
  }
  std::vector<Candidate> cands = generate_candidates(img, cfg);
  align_candidates(cands, cfg);

  const ChipOptions chip_opts{cfg.pad, cfg.chip_size, BoundsMode::Clamp};
  std::vector<Detection> scored(cands.size());
  parallel_for(cands.size(), cfg.threads, [&](std::size_t i) {
    const Candidate& c = cands[i];
    const Frame frame = candidate_frame(c.contour, c.angle);
    const Chip chip = extract_chip(img, frame, chip_opts);
    const ClassScores s = score(model, feature_vector(chip.pixels, bank), bank.id());
    scored[i] = {c.bbox, frame, c.angle, s, heuristic(s), c.source};
  });

  std::vector<Detection> kept;
  if (!cfg.phm_rate) {
    for (Detection& d : scored)
      if (d.score.pos >= cfg.decision_threshold) kept.push_back(std::move(d));
  } else {
    std::vector<std::size_t> seeds;
    for (std::size_t i = 0; i < scored.size(); ++i)
      if (scored[i].score.pos >= cfg.phm_min_pos) seeds.push_back(i);
    SearchOptions so;
    so.rate = *cfg.phm_rate;
    so.max_iterations = cfg.phm_max_iterations;
    so.chip = chip_opts;
    std::vector<SearchTrace> found(seeds.size());
    parallel_for(seeds.size(), cfg.threads, [&](std::size_t k) {
      try {
        found[k] = greedy_search(img, scored[seeds[k]].frame, model, bank, so);
      } catch (const std::invalid_argument&) {
        found[k].visited.clear();  // frame does not fit the image; keep the unrefined box
      }
    });
    for (std::size_t k = 0; k < seeds.size(); ++k) {
      Detection d = scored[seeds[k]];
      if (!found[k].visited.empty()) {
        const SearchStep& last = found[k].visited.back();
        d.frame = {d.angle, last.box};
        d.score = last.scores;
        d.h = last.h;
        d.bbox = frame_bounds(d.frame);
      }
      if (d.h >= cfg.decision_threshold) kept.push_back(std::move(d));
    }
    if (traces) *traces = std::move(found);
  }
  return non_max_suppression(std::move(kept), cfg.nms_iou);
}

// ---------------------------------------------------------------- evaluation

Metrics evaluate(std::span<const Detection> dets, std::span<const BBox> gt, double iou_threshold) {
  if (!is_fraction(iou_threshold)) throw std::invalid_argument("iou must lie in (0, 1]");
  std::vector<const Detection*> order;
  order.reserve(dets.size());
  for (const Detection& d : dets) order.push_back(&d);
  std::sort(order.begin(), order.end(),
            [](const Detection* a, const Detection* b) { return ranks_before(*a, *b); });
  std::vector<bool> taken(gt.size(), false);
  std::size_t tp = 0;
  for (const Detection* d : order) {
    double best = 0.0;
    std::size_t best_j = gt.size();
    for (std::size_t j = 0; j < gt.size(); ++j) {
      if (taken[j]) continue;
      const double v = iou(d->bbox, gt[j]);
      if (v >= iou_threshold && v > best) {
        best = v;
        best_j = j;
      }
    }
    if (best_j < gt.size()) {
      taken[best_j] = true;
      ++tp;
    }
  }
  return compute_metrics(tp, dets.size() - tp, gt.size() - tp);
}

std::size_t candidates_matched(std::span<const Candidate> cands, std::span<const BBox> gt, double iou_threshold) {
  std::size_t matched = 0;
  for (const BBox& g : gt) {
    for (const Candidate& c : cands) {
      // Cheap rejection before the exact overlap test.
      if (c.bbox.right <= g.left || c.bbox.left >= g.right || c.bbox.bottom <= g.top ||
          c.bbox.top >= g.bottom)
        continue;
      if (iou(c.bbox, g) >= iou_threshold) {
        ++matched;
        break;
      }
    }
  }
  return matched;
}

double candidate_recall(std::span<const Candidate> cands, std::span<const BBox> gt, double iou_threshold) {
  if (gt.empty()) return 1.0;
  return static_cast<double>(candidates_matched(cands, gt, iou_threshold)) / gt.size();
}

LabeledSet build_training_set(std::span<const LabeledImage> images, const FeatureBank& bank,
                              const RunConfig& cfg) {
  cfg.validate();
  LabeledSet out;
  out.bank_id = bank.id();
  LabelOptions lo;
  lo.iou_pos = cfg.iou_pos;
  lo.chip = {cfg.pad, cfg.chip_size, BoundsMode::Strict};
  for (const LabeledImage& li : images) {
    std::vector<Candidate> cands = generate_candidates(li.image, cfg);
    if (cands.empty()) continue;
    align_candidates(cands, cfg);
    LabeledSet part = label_candidates(li.image, cands, li.gt, bank, lo, li.name);
    std::move(part.examples.begin(), part.examples.end(), std::back_inserter(out.examples));
  }
  return out;
}

std::vector<SweepRow> recall_sweep(std::span<const LabeledImage> scenes, std::span<const double> steps,
                                   const RunConfig& cfg, bool single_pair_baseline) {
  if (scenes.empty()) throw ValidationError("recall sweep needs at least one scene");
  std::vector<RunConfig> runs;
  std::vector<SweepRow> rows;
  for (double s : steps) {
    RunConfig c = cfg;
    c.single_pair.reset();
    c.grid_step = s;
    c.validate();
    runs.push_back(c);
    rows.push_back({"grid", s, 0.0, 0.0, threshold_pairs(c).size(), 0, 0, 0, 0.0});
  }
  if (single_pair_baseline) {
    RunConfig c = cfg;
    c.single_pair = ThresholdPair{0.2, 0.4};
    runs.push_back(c);
    rows.push_back({"single", 0.0, 0.2, 0.4, 1, 0, 0, 0, 0.0});
  }
  for (std::size_t r = 0; r < runs.size(); ++r) {
    for (const LabeledImage& li : scenes) {
      const auto cands = generate_candidates(li.image, runs[r]);
      rows[r].candidates += cands.size();
      rows[r].gt += li.gt.size();
      rows[r].matched += candidates_matched(cands, li.gt, cfg.match_iou);
    }
    rows[r].recall = rows[r].gt == 0 ? 1.0 : static_cast<double>(rows[r].matched) / rows[r].gt;
  }
  return rows;
}

// ---------------------------------------------------------------- overlay

namespace {

void stroke(RgbImage& img, Point a, Point b, Rgb color) {
  int dx = std::abs(b.x - a.x);
  int dy = -std::abs(b.y - a.y);
  const int sx = a.x < b.x ? 1 : -1;
  const int sy = a.y < b.y ? 1 : -1;
  int err = dx + dy;
  for (;;) {
    if (a.x >= 0 && a.y >= 0 && a.x < img.width() && a.y < img.height()) img.at(a.x, a.y) = color;
    if (a == b) break;
    const int e2 = 2 * err;
    if (e2 >= dy) {
      err += dy;
      a.x += sx;
    }
    if (e2 <= dx) {
      err += dx;
      a.y += sy;
    }
  }
}

}  // namespace

RgbImage render_overlay(const RgbImage& img, std::span<const Detection> dets) {
  RgbImage out = img;
  constexpr Rgb kYellow{255, 255, 0};
  for (const Detection& d : dets) {
    const auto corners = frame_corners(d.frame);
    for (std::size_t i = 0; i < 4; ++i) {
      const PointD& p = corners[i];
      const PointD& q = corners[(i + 1) % 4];
      stroke(out, {static_cast<int>(std::lround(p.x)), static_cast<int>(std::lround(p.y))},
             {static_cast<int>(std::lround(q.x)), static_cast<int>(std::lround(q.y))}, kYellow);
    }
  }
  return out;
}

void render_overlay(const RgbImage& img, std::span<const Detection> dets,
                    const std::filesystem::path& path) {
  write_png(render_overlay(img, dets), path);
}

// ---------------------------------------------------------------- benchmark

std::vector<BenchRow> benchmark(std::span<const std::pair<int, int>> sizes, const Classifier& model,
                                const FeatureBank& bank, const RunConfig& cfg, std::uint64_t seed,
                                int repeats, double min_seconds) {
  if (sizes.size() < 3) throw ValidationError("benchmark needs at least three sizes");
  for (std::size_t i = 1; i < sizes.size(); ++i) {
    const auto prev = static_cast<std::size_t>(sizes[i - 1].first) * sizes[i - 1].second;
    const auto cur = static_cast<std::size_t>(sizes[i].first) * sizes[i].second;
    if (cur != 2 * prev) throw ValidationError("benchmark sizes must double in pixel count");
    if (sizes[i].first % sizes[0].first != 0 || sizes[i].second % sizes[0].second != 0)
      throw ValidationError("benchmark sizes must be whole multiples of the first size");
  }
  if (repeats < 1) throw ValidationError("repeats must be >= 1");
  if (!(min_seconds >= 0)) throw ValidationError("min_seconds must be >= 0");
  if (!cfg.phm_rate) throw ValidationError("benchmark needs phm_rate for the ml+phm stage");
  cfg.validate();

  RunConfig plain = cfg;
  plain.phm_rate.reset();
  const ChipOptions chip_opts{cfg.pad, cfg.chip_size, BoundsMode::Clamp};
  using Clock = std::chrono::steady_clock;

  std::vector<BenchRow> rows;
  for (const auto& [w, h] : sizes) {
    const Scene scene = synth_scene(tiled_scene_spec(w, h, sizes[0].first, sizes[0].second, seed, {}, true));
    const GrayImage gray = to_grayscale(scene.image);
    for (std::string_view stage : kBenchStages) {
      double best = std::numeric_limits<double>::infinity();
      std::size_t n_cands = 0;
      std::size_t n_dets = 0;
      double total = 0;
      for (int r = 0; r < repeats || total < min_seconds; ++r) {
        const auto t0 = Clock::now();
        if (stage == "ml" || stage == "ml+phm") {
          const auto dets = detect(gray, model, bank, stage == "ml" ? plain : cfg);
          n_dets = dets.size();
        } else {
          std::vector<Candidate> cands = generate_candidates(gray, cfg);
          n_cands = cands.size();
          if (stage != "contours") align_candidates(cands, cfg);
          if (stage == "contours+alignment+haar") {
            std::vector<std::int64_t> sink(cands.size());
            parallel_for(cands.size(), cfg.threads, [&](std::size_t i) {
              const Chip chip =
                  extract_chip(gray, candidate_frame(cands[i].contour, cands[i].angle), chip_opts);
              const FeatureVector fv = feature_vector(chip.pixels, bank);
              sink[i] = std::accumulate(fv.begin(), fv.end(), std::int64_t{0});
            });
          }
        }
        const double elapsed = std::chrono::duration<double>(Clock::now() - t0).count();
        best = std::min(best, elapsed);
        total += elapsed;
      }
      rows.push_back({w, h, static_cast<std::size_t>(w) * h, std::string(stage), best, n_cands, n_dets});
    }
  }
  return rows;
}

}  // namespace bdet
