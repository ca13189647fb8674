#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "bdet/imagery.hpp"

namespace bdet {

enum class Split : std::uint8_t {
  Horizontal,  // top half minus bottom half
  Vertical,    // left half minus right half
};

/// Square two-rectangle Haar window on the chip.
struct HaarFeature {
  int x = 0;
  int y = 0;
  int w = 0;
  Split split = Split::Horizontal;

  friend constexpr bool operator==(const HaarFeature&, const HaarFeature&) = default;
};

/// Window side and placement stride.
struct WindowSpec {
  int width = 0;
  int step = 0;

  friend constexpr bool operator==(const WindowSpec&, const WindowSpec&) = default;
};

inline constexpr std::array<WindowSpec, 4> kDefaultWindows = {{{40, 10}, {80, 10}, {100, 10}, {20, 5}}};

using FeatureVector = std::vector<std::int32_t>;

/// Fixed, ordered set of Haar features. Immutable once built.
class FeatureBank {
 public:
  FeatureBank() = default;
  FeatureBank(int chip_size, std::vector<WindowSpec> windows);

  [[nodiscard]] int chip_size() const { return chip_size_; }
  [[nodiscard]] const std::vector<WindowSpec>& windows() const { return windows_; }
  [[nodiscard]] const std::vector<HaarFeature>& features() const { return features_; }
  [[nodiscard]] std::size_t size() const { return features_.size(); }

  /// Stable identifier derived from the layout, e.g. "haar-v1-200-3896-<hash>".
  [[nodiscard]] const std::string& id() const { return id_; }

  /// Versioned JSON descriptor: {"format": "bdet-haar-bank", "version": 1, ...}.
  [[nodiscard]] std::string descriptor_json() const;
  static FeatureBank from_descriptor_json(const std::string& text);

 private:
  int chip_size_ = 0;
  std::vector<WindowSpec> windows_;
  std::vector<HaarFeature> features_;
  std::string id_;
};

/// For each window spec in order, every position x, y in {0, s, ..., size - w}
/// row-major, each emitted as horizontal then vertical split.
std::vector<HaarFeature> enumerate_features(int chip_size = 200,
                                            std::span<const WindowSpec> windows = kDefaultWindows);

FeatureBank default_bank(int chip_size = 200);

template <RectSummer S>
std::int64_t evaluate_feature(const S& sums, const HaarFeature& f) {
  const int half = f.w / 2;
  if (f.split == Split::Vertical) {
    return static_cast<std::int64_t>(sums.rect_sum(Rect{f.x, f.y, f.x + half, f.y + f.w})) -
           static_cast<std::int64_t>(sums.rect_sum(Rect{f.x + half, f.y, f.x + f.w, f.y + f.w}));
  }
  return static_cast<std::int64_t>(sums.rect_sum(Rect{f.x, f.y, f.x + f.w, f.y + half})) -
         static_cast<std::int64_t>(sums.rect_sum(Rect{f.x, f.y + half, f.x + f.w, f.y + f.w}));
}

template <RectSummer S>
FeatureVector feature_vector(const S& sums, const FeatureBank& bank) {
  FeatureVector out;
  out.reserve(bank.size());
  for (const HaarFeature& f : bank.features()) {
    out.push_back(static_cast<std::int32_t>(evaluate_feature(sums, f)));
  }
  return out;
}

/// One integral pass over the chip, then two rectangle sums per feature.
/// Throws std::invalid_argument when the chip size does not match the bank.
FeatureVector feature_vector(const GrayImage& chip, const FeatureBank& bank);

}  // namespace bdet
