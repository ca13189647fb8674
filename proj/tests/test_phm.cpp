#include <doctest.h>

#include <json.hpp>
#include <random>

#include "bdet/phm.hpp"

using namespace bdet;

namespace {

// Scores every chip the same.
class ConstantModel final : public Classifier {
 public:
  ConstantModel(std::string bank, std::size_t n) : bank_(std::move(bank)), n_(n) {}
  std::string_view kind() const override { return "constant"; }
  const std::string& bank_id() const override { return bank_; }
  std::size_t feature_count() const override { return n_; }
  ClassScores score(std::span<const std::int32_t>) const override { return {0.6, 0.4, 0.2}; }
  std::string parameters_json() const override { return "{}"; }

 private:
  std::string bank_;
  std::size_t n_;
};

// On an image whose value equals x, the full-chip left-minus-right feature is
// -10000 * (padded frame width), so the score can peak at a chosen width.
class WidthModel final : public Classifier {
 public:
  WidthModel(std::string bank, double target) : bank_(std::move(bank)), target_(target) {}
  std::string_view kind() const override { return "width"; }
  const std::string& bank_id() const override { return bank_; }
  std::size_t feature_count() const override { return 2; }
  ClassScores score(std::span<const std::int32_t> f) const override {
    const double padded = -double(f[1]) / 10000.0;
    const double z = (padded - target_) / 20.0;
    const double pos = std::exp(-z * z);
    return {pos, 1.0 - pos, pos};
  }
  std::string parameters_json() const override { return "{}"; }

 private:
  std::string bank_;
  double target_;
};

GrayImage ramp() {
  GrayImage img(256, 100);
  for (int y = 0; y < 100; ++y)
    for (int x = 0; x < 256; ++x) img.at(x, y) = std::uint8_t(x);
  return img;
}

}  // namespace

TEST_CASE("heuristic") {
  CHECK(heuristic({1.0, 0.0, 0}) == 1.0);
  CHECK(heuristic({0.8, 0.4, 0}) == doctest::Approx(2 * 0.8 * 0.6 / 1.4));
  CHECK(heuristic({0.8, 0.4, 0}) == doctest::Approx(0.685714285714));
  CHECK(heuristic({0.0, 0.3, 0}) == 0.0);
  CHECK(heuristic({0.0, 1.0, 0}) == 0.0);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0, 1);
  for (int i = 0; i < 1000; ++i) {
    const double p = u(rng);
    CHECK(std::abs(heuristic({p, 1 - p, 0}) - p) <= 1e-12);
  }
}

TEST_CASE("step size") {
  CHECK(step_size({0, 0, 100, 100}, 0.01) == 1);
  CHECK(step_size({0, 0, 30, 50}, 0.1) == 4);
  CHECK(step_size({0, 0, 10, 10}, 0.01) == 1);   // floor of 0.1 lifted to 1
  CHECK(step_size({0, 0, 30, 40}, 0.1) == 4);    // 3.5 rounds up
  CHECK(step_size({0, 0, 100, 100}, 0.5) == 50);
  CHECK_THROWS_AS(step_size({0, 0, 100, 100}, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(step_size({0, 0, 100, 100}, -0.1), std::invalid_argument);
}

TEST_CASE("permutations") {
  const auto& p = all_permutations();
  REQUIRE(p.size() == 81);
  CHECK(p[0].deltas == std::array<int, 4>{-1, -1, -1, -1});
  CHECK(p[1].deltas == std::array<int, 4>{-1, -1, -1, 0});
  CHECK(p[40].deltas == std::array<int, 4>{0, 0, 0, 0});
  CHECK(p[80].deltas == std::array<int, 4>{1, 1, 1, 1});
  CHECK(apply({10, 20, 30, 40}, p[80], 2) == BBox{12, 22, 32, 42});
  CHECK(apply({10, 20, 30, 40}, {{-1, 1, 0, 0}}, 3) == BBox{10, 17, 30, 43});
}

TEST_CASE("neighbors") {
  CHECK(neighbors({20, 20, 60, 60}, 2, 200, 200).size() == 81);
  const auto flush = neighbors({0, 20, 40, 60}, 2, 200, 200);
  CHECK(flush.size() == 54);
  for (const BBox& b : flush) CHECK(b.left >= 0);
  // height 2 with d = 2: moving top down and bottom up collapses the box
  const auto thin = neighbors({20, 20, 60, 22}, 2, 200, 200);
  CHECK(thin.size() < 81);
  for (const BBox& b : thin) CHECK(b.valid());
  CHECK(std::find(thin.begin(), thin.end(), BBox{20, 20, 60, 22}) != thin.end());
  CHECK_THROWS_AS(neighbors({20, 20, 60, 60}, 0, 200, 200), std::invalid_argument);
}

TEST_CASE("search stops at once on a flat score") {
  const FeatureBank bank(200, {{200, 200}});
  const ConstantModel model(bank.id(), bank.size());
  const Frame start{0.0, {100, 30, 140, 70}};
  const SearchTrace t = greedy_search(ramp(), start, model, bank);
  CHECK(t.iterations == 1);
  CHECK_FALSE(t.hit_cap);
  CHECK(t.terminal == start.box);
  REQUIRE(t.visited.size() == 1);
  CHECK(t.visited[0].h == doctest::Approx(heuristic({0.6, 0.4, 0.2})));
}

TEST_CASE("search climbs toward the best-scoring width") {
  const FeatureBank bank(200, {{200, 200}});
  const WidthModel model(bank.id(), 61 * 1.1);  // frame width 60 with 5% padding
  SearchOptions opts;
  opts.rate = 0.05;
  const Frame start{0.0, {100, 30, 140, 70}};
  const SearchTrace t = greedy_search(ramp(), start, model, bank, opts);
  CHECK_FALSE(t.hit_cap);
  CHECK(t.terminal.width() >= 58);
  CHECK(t.terminal.width() <= 62);
  REQUIRE(t.visited.size() >= 2);
  CHECK(t.visited.front().box == start.box);
  for (std::size_t i = 1; i < t.visited.size(); ++i) CHECK(t.visited[i].h >= t.visited[i - 1].h);
  CHECK(t.visited.back().h > t.visited.front().h);
  CHECK(t.terminal == t.visited.back().box);

  opts.max_iterations = 2;
  const SearchTrace capped = greedy_search(ramp(), start, model, bank, opts);
  CHECK(capped.hit_cap);
  CHECK(capped.iterations == 2);

  const auto json = nlohmann::json::parse(traces_to_json({t, capped}));
  REQUIRE(json.size() == 2);
  CHECK(json[1]["hit_cap"] == true);
  CHECK(json[0]["visited"].size() == t.visited.size());
}

TEST_CASE("search errors") {
  const FeatureBank bank(200, {{200, 200}});
  const ConstantModel other("another-bank", 2);
  CHECK_THROWS_AS(greedy_search(ramp(), {0.0, {100, 30, 140, 70}}, other, bank), BankMismatchError);
  const ConstantModel model(bank.id(), bank.size());
  CHECK_THROWS_AS(greedy_search(ramp(), {0.0, {-50, -50, 400, 300}}, model, bank), std::invalid_argument);
}
