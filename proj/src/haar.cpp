#include "bdet/haar.hpp"

#include <json.hpp>

#include <cstdio>
#include <stdexcept>

namespace bdet {

namespace {

constexpr int kBankVersion = 1;

std::uint64_t fnv1a(const std::string& text) {
  std::uint64_t h = 1469598103934665603ULL;
  for (const unsigned char ch : text) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  return h;
}

// Bank geometry is validated at construction, so per-feature bounds checks
// are skipped on the hot path.
struct TrustedSums {
  const IntegralImage& ii;
  [[nodiscard]] std::int64_t rect_sum(const Rect& r) const { return ii.rect_sum_unchecked(r); }
};

nlohmann::json layout_json(int chip_size, const std::vector<WindowSpec>& windows) {
  nlohmann::json w = nlohmann::json::array();
  for (const WindowSpec& s : windows) w.push_back({{"width", s.width}, {"step", s.step}});
  return {{"chip_size", chip_size}, {"windows", w}};
}

}  // namespace

std::vector<HaarFeature> enumerate_features(int chip_size, std::span<const WindowSpec> windows) {
  std::vector<HaarFeature> out;
  for (const WindowSpec& spec : windows) {
    if (spec.width <= 0 || spec.step <= 0 || spec.width % 2 != 0 || spec.width > chip_size) {
      throw std::invalid_argument("invalid Haar window spec (width " + std::to_string(spec.width) +
                                  ", step " + std::to_string(spec.step) + ")");
    }
    for (int y = 0; y + spec.width <= chip_size; y += spec.step) {
      for (int x = 0; x + spec.width <= chip_size; x += spec.step) {
        out.push_back({x, y, spec.width, Split::Horizontal});
        out.push_back({x, y, spec.width, Split::Vertical});
      }
    }
  }
  return out;
}

FeatureBank::FeatureBank(int chip_size, std::vector<WindowSpec> windows)
    : chip_size_(chip_size), windows_(std::move(windows)) {
  features_ = enumerate_features(chip_size_, windows_);
  const std::string layout = layout_json(chip_size_, windows_).dump();
  char hash[17];
  std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(fnv1a(layout)));
  id_ = "haar-v" + std::to_string(kBankVersion) + "-" + std::to_string(chip_size_) + "-" +
        std::to_string(features_.size()) + "-" + std::string(hash, 8);
}

std::string FeatureBank::descriptor_json() const {
  nlohmann::json j = layout_json(chip_size_, windows_);
  j["format"] = "bdet-haar-bank";
  j["version"] = kBankVersion;
  j["id"] = id_;
  j["feature_count"] = features_.size();
  j["order"] = "window spec, then row-major position, then horizontal before vertical split";
  j["sign"] = "horizontal: top - bottom; vertical: left - right";
  return j.dump(2);
}

FeatureBank FeatureBank::from_descriptor_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  if (j.value("format", "") != "bdet-haar-bank" || j.value("version", 0) != kBankVersion) {
    throw std::invalid_argument("not a version-1 Haar bank descriptor");
  }
  std::vector<WindowSpec> windows;
  for (const auto& w : j.at("windows")) windows.push_back({w.at("width"), w.at("step")});
  FeatureBank bank(j.at("chip_size").get<int>(), std::move(windows));
  if (j.contains("id") && j["id"].get<std::string>() != bank.id()) {
    throw std::invalid_argument("bank descriptor id does not match its layout");
  }
  return bank;
}

FeatureBank default_bank(int chip_size) {
  return FeatureBank(chip_size, {kDefaultWindows.begin(), kDefaultWindows.end()});
}

FeatureVector feature_vector(const GrayImage& chip, const FeatureBank& bank) {
  if (chip.width() != bank.chip_size() || chip.height() != bank.chip_size()) {
    throw std::invalid_argument("chip is " + std::to_string(chip.width()) + "x" +
                                std::to_string(chip.height()) + ", bank expects " +
                                std::to_string(bank.chip_size()));
  }
  const IntegralImage ii(chip);
  return feature_vector(TrustedSums{ii}, bank);
}

}  // namespace bdet
