#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "bdet/io.hpp"
#include "bdet/learn.hpp"
#include "bdet/phm.hpp"
#include "bdet/pipeline.hpp"
#include "bdet/synth.hpp"

namespace fs = std::filesystem;
using namespace bdet;

namespace {

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
};

void add_common(CLI::App* cmd, Common& c, bool out_required = true) {
  cmd->add_option("--config", c.config, "JSON run configuration")->check(CLI::ExistingFile);
  cmd->add_option("--seed", c.seed, "random seed (overrides the config)");
  auto* o = cmd->add_option("--out", c.out, "output path");
  if (out_required) o->required();
}

RunConfig load_config(const Common& c) {
  RunConfig cfg = c.config.empty() ? RunConfig{} : config_from_json(read_text(c.config));
  if (c.seed) cfg.seed = *c.seed;
  cfg.validate();
  return cfg;
}

std::vector<double> parse_steps(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ValidationError("bad step value '" + item + "'");
    }
  }
  if (out.empty()) throw ValidationError("no steps given");
  return out;
}

std::vector<std::pair<int, int>> parse_sizes(const std::string& text) {
  std::vector<std::pair<int, int>> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    int w = 0, h = 0;
    char x = 0, extra = 0;
    if (std::sscanf(item.c_str(), "%d%c%d%c", &w, &x, &h, &extra) != 3 || x != 'x' || w < 16 || h < 16)
      throw ValidationError("bad size '" + item + "', expected WIDTHxHEIGHT");
    out.emplace_back(w, h);
  }
  return out;
}

std::string scene_name(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "scene_%03zu.png", i);
  return buf;
}

/// Images named in the ground truth, resolved against `dir`.
std::vector<LabeledImage> load_labeled(const fs::path& dir, const GroundTruth& gt) {
  std::vector<LabeledImage> out;
  for (const auto& [name, boxes] : gt) {
    out.push_back({name, to_grayscale(load_image(dir / name)), boxes});
  }
  return out;
}

std::vector<LabeledImage> synthetic_suite(std::size_t count, int width, int height, std::uint64_t seed) {
  std::vector<LabeledImage> out;
  for (std::size_t i = 0; i < count; ++i) {
    const Scene s = synth_scene(random_scene_spec(width, height, seed + i));
    out.push_back({scene_name(i), to_grayscale(s.image), s.gt});
  }
  return out;
}

FeatureBank bank_for(const RunConfig& cfg) { return default_bank(cfg.chip_size); }

ClassifierPtr load_model(const std::string& path, const FeatureBank& bank) {
  ClassifierPtr model = model_from_json(read_text(path));
  if (model->bank_id() != bank.id()) {
    throw BankMismatchError("model was trained on bank " + model->bank_id() + ", config gives " +
                            bank.id());
  }
  return model;
}

void ensure_dir(const fs::path& p) {
  std::error_code ec;
  fs::create_directories(p, ec);
  if (ec) throw std::runtime_error("cannot create " + p.string() + ": " + ec.message());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Building detection from overhead imagery"};
  app.require_subcommand(1);

  // synth
  Common synth_c;
  std::size_t synth_count = 10;
  int synth_w = 480, synth_h = 480;
  auto* synth = app.add_subcommand("synth", "render synthetic scenes with ground truth");
  add_common(synth, synth_c);
  synth->add_option("--count", synth_count, "number of scenes")->check(CLI::Range(1, 100000));
  synth->add_option("--width", synth_w, "scene width")->check(CLI::Range(16, 100000));
  synth->add_option("--height", synth_h, "scene height")->check(CLI::Range(16, 100000));

  // candidates
  Common cand_c;
  std::vector<std::string> cand_images;
  bool cand_edges = false;
  auto* cands = app.add_subcommand("candidates", "generate candidates by sample-and-merge");
  add_common(cands, cand_c);
  cands->add_option("images", cand_images, "input images")->required()->check(CLI::ExistingFile);
  cands->add_flag("--dump-edges", cand_edges, "write one edge-map PGM per threshold pair");

  // train
  Common train_c;
  std::string train_images, train_gt, train_metrics;
  int train_folds = 0;
  auto* train = app.add_subcommand("train", "train a classifier on labeled candidates");
  add_common(train, train_c);
  train->add_option("--images", train_images, "directory holding the images")->required()->check(CLI::ExistingDirectory);
  train->add_option("--gt", train_gt, "ground-truth CSV")->required()->check(CLI::ExistingFile);
  train->add_option("--cv", train_folds, "also run k-fold cross-validation")->check(CLI::Range(2, 1000));
  train->add_option("--metrics", train_metrics, "cross-validation metrics CSV");

  // detect
  Common det_c;
  std::string det_model;
  std::vector<std::string> det_images;
  std::optional<double> det_phm;
  bool det_overlay = false;
  auto* det = app.add_subcommand("detect", "detect buildings with a trained model");
  add_common(det, det_c);
  det->add_option("--model", det_model, "model JSON")->required()->check(CLI::ExistingFile);
  det->add_option("images", det_images, "input images")->required()->check(CLI::ExistingFile);
  det->add_option("--phm-rate", det_phm, "enable box refinement with this permutation rate");
  det->add_flag("--overlay", det_overlay, "write PNG overlays with detections in yellow");

  // evaluate
  Common eval_c;
  std::string eval_model, eval_images, eval_gt, eval_dataset = "dataset";
  std::optional<double> eval_phm;
  auto* eval = app.add_subcommand("evaluate", "detect and score against ground truth");
  add_common(eval, eval_c);
  eval->add_option("--model", eval_model, "model JSON")->required()->check(CLI::ExistingFile);
  eval->add_option("--images", eval_images, "directory holding the images")->required()->check(CLI::ExistingDirectory);
  eval->add_option("--gt", eval_gt, "ground-truth CSV")->required()->check(CLI::ExistingFile);
  eval->add_option("--dataset", eval_dataset, "dataset label for the metrics table");
  eval->add_option("--phm-rate", eval_phm, "enable box refinement with this permutation rate");

  // sweep
  Common sweep_c;
  std::string sweep_images, sweep_gt, sweep_steps = "0.2,0.1,0.05";
  std::size_t sweep_synthetic = 0;
  bool sweep_cartesian = false;
  auto* sweep = app.add_subcommand("sweep", "candidate recall versus threshold-grid step");
  add_common(sweep, sweep_c);
  sweep->add_option("--images", sweep_images, "directory holding the images")->check(CLI::ExistingDirectory);
  sweep->add_option("--gt", sweep_gt, "ground-truth CSV")->check(CLI::ExistingFile);
  sweep->add_option("--synthetic", sweep_synthetic, "use this many 480x480 synthetic scenes instead");
  sweep->add_option("--steps", sweep_steps, "comma-separated grid steps");
  sweep->add_flag("--cartesian", sweep_cartesian, "use every (low, high) combination");

  // bench
  Common bench_c;
  std::string bench_model;
  int bench_repeats = 1;
  std::string bench_sizes = "500x500,1000x500,1000x1000,2000x1000,2000x2000";
  auto* bench = app.add_subcommand("bench", "per-stage timing over doubling scene sizes");
  add_common(bench, bench_c);
  bench->add_option("--model", bench_model, "model JSON")->required()->check(CLI::ExistingFile);
  bench->add_option("--repeats", bench_repeats, "best-of repeats")->check(CLI::Range(1, 100));
  bench->add_option("--sizes", bench_sizes, "comma-separated WIDTHxHEIGHT list, doubling in pixels");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*synth) {
      const RunConfig cfg = load_config(synth_c);
      const fs::path out = synth_c.out;
      ensure_dir(out);
      GroundTruth gt;
      for (std::size_t i = 0; i < synth_count; ++i) {
        const Scene s = synth_scene(random_scene_spec(synth_w, synth_h, cfg.seed + i));
        write_png(s.image, out / scene_name(i));
        gt[scene_name(i)] = s.gt;
      }
      std::ofstream f(out / "gt.csv");
      write_ground_truth(gt, f);
    } else if (*cands) {
      const RunConfig cfg = load_config(cand_c);
      const fs::path out = cand_c.out;
      ensure_dir(out);
      std::ofstream table(out / "candidates.csv");
      std::ofstream chains(out / "contours.csv");
      bool header = true;
      std::vector<Candidate> all;
      for (const std::string& p : cand_images) {
        const GrayImage img = to_grayscale(load_image(p));
        std::vector<Candidate> c = generate_candidates(img, cfg);
        align_candidates(c, cfg);
        write_candidates_csv(table, fs::path(p).filename().string(), c, header);
        header = false;
        std::move(c.begin(), c.end(), std::back_inserter(all));
        if (cand_edges && img.width() >= 3 && img.height() >= 3) {
          const SuppressedGradient sg(img);
          for (const ThresholdPair& t : threshold_pairs(cfg)) {
            char name[96];
            std::snprintf(name, sizeof name, "%s_edges_%.2f_%.2f.pgm",
                          fs::path(p).stem().string().c_str(), t.low, t.high);
            write_pgm(sg.hysteresis(t).to_image(), out / name);
          }
        }
      }
      write_contours_csv(chains, all);
    } else if (*train) {
      const RunConfig cfg = load_config(train_c);
      const FeatureBank bank = bank_for(cfg);
      const auto images = load_labeled(train_images, read_ground_truth(fs::path(train_gt)));
      const LabeledSet raw = build_training_set(images, bank, cfg);
      const LabeledSet set = balance(raw, cfg.seed);
      const Trainer trainer = make_trainer(cfg.classifier, cfg.epochs, cfg.seed);
      const ClassifierPtr model = trainer(set);
      write_text(train_c.out, model_to_json(*model, {cfg.seed, training_digest(set)}));
      std::cerr << "trained " << cfg.classifier << " on " << set.count(Label::Building)
                << " positives and " << set.count(Label::NotBuilding) << " negatives (balanced)\n";
      if (train_folds > 0) {
        const CrossValidation cv = cross_validate(set, train_folds, trainer, cfg.seed);
        const MetricsRow row{fs::path(train_gt).stem().string(), cfg.classifier, cfg.align, cv.overall};
        if (train_metrics.empty()) write_metrics_csv(std::cout, std::span(&row, 1));
        else {
          std::ofstream f(train_metrics);
          write_metrics_csv(f, std::span(&row, 1));
        }
      }
    } else if (*det) {
      RunConfig cfg = load_config(det_c);
      if (det_phm) cfg.phm_rate = *det_phm;
      cfg.validate();
      const FeatureBank bank = bank_for(cfg);
      const ClassifierPtr model = load_model(det_model, bank);
      const fs::path out = det_c.out;
      ensure_dir(out);
      std::ofstream table(out / "detections.csv");
      std::vector<SearchTrace> all_traces;
      bool header = true;
      for (const std::string& p : det_images) {
        const RgbImage rgb = load_image(p);
        std::vector<SearchTrace> traces;
        const auto dets = detect(to_grayscale(rgb), *model, bank, cfg, &traces);
        write_detections_csv(table, fs::path(p).filename().string(), dets, header);
        header = false;
        if (det_overlay) render_overlay(rgb, dets, out / (fs::path(p).stem().string() + "_overlay.png"));
        std::move(traces.begin(), traces.end(), std::back_inserter(all_traces));
      }
      if (cfg.phm_rate) write_text(out / "traces.json", traces_to_json(all_traces));
    } else if (*eval) {
      RunConfig cfg = load_config(eval_c);
      if (eval_phm) cfg.phm_rate = *eval_phm;
      cfg.validate();
      const FeatureBank bank = bank_for(cfg);
      const ClassifierPtr model = load_model(eval_model, bank);
      const auto images = load_labeled(eval_images, read_ground_truth(fs::path(eval_gt)));
      std::size_t tp = 0, fp = 0, fn = 0;
      for (const LabeledImage& li : images) {
        const auto dets = detect(li.image, *model, bank, cfg);
        const Metrics m = evaluate(dets, li.gt, cfg.match_iou);
        tp += m.tp;
        fp += m.fp;
        fn += m.fn;
      }
      const MetricsRow row{eval_dataset, std::string(model->kind()), cfg.align, compute_metrics(tp, fp, fn)};
      std::ofstream f(eval_c.out);
      write_metrics_csv(f, std::span(&row, 1));
    } else if (*sweep) {
      RunConfig cfg = load_config(sweep_c);
      if (sweep_cartesian) cfg.cartesian_grid = true;
      std::vector<LabeledImage> scenes;
      if (sweep_synthetic > 0) {
        scenes = synthetic_suite(sweep_synthetic, 480, 480, cfg.seed);
      } else {
        if (sweep_images.empty() || sweep_gt.empty())
          throw ValidationError("sweep needs --images and --gt, or --synthetic");
        scenes = load_labeled(sweep_images, read_ground_truth(fs::path(sweep_gt)));
      }
      const auto steps = parse_steps(sweep_steps);
      const auto rows = recall_sweep(scenes, steps, cfg);
      std::ofstream f(sweep_c.out);
      write_sweep_csv(f, rows);
    } else if (*bench) {
      RunConfig cfg = load_config(bench_c);
      if (!cfg.phm_rate) cfg.phm_rate = 0.01;
      const FeatureBank bank = bank_for(cfg);
      const ClassifierPtr model = load_model(bench_model, bank);
      const auto sizes = parse_sizes(bench_sizes);
      const auto rows = benchmark(sizes, *model, bank, cfg, cfg.seed, bench_repeats);
      std::ofstream f(bench_c.out);
      write_bench_csv(f, rows);
    }
  } catch (const std::invalid_argument& e) {  // includes ValidationError
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const DecodeError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const BankMismatchError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
