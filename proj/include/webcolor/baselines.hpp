#pragma once

#include <array>
#include <map>
#include <span>
#include <string>

#include "webcolor/models.hpp"
#include "webcolor/page.hpp"

namespace webcolor {

enum class StyleProperty { kText = 0, kBackground = 1 };

// Discrete-color frequencies per (HTML tag, CSS property) pair collected
// from a training set, plus the global per-property totals used as the
// fallback for unseen pairs.
class FrequencyTable {
 public:
  using Counts = std::map<QuantizedColor, long>;

  static FrequencyTable fit(std::span<const PageTree> train_pages);

  const Counts& counts(const std::string& tag, StyleProperty prop) const;
  const Counts& global(StyleProperty prop) const;
  bool has_pair(const std::string& tag, StyleProperty prop) const;

  // Count-maximal color for the pair, falling back to the global table;
  // ties break toward the smallest (rgb_index, alpha_index).
  QuantizedColor mode(const std::string& tag, StyleProperty prop) const;
  // Frequency-weighted draw for the pair (global fallback).
  QuantizedColor sample(const std::string& tag, StyleProperty prop,
                        Rng& rng) const;

  // Canonical JSON: {"tags": {tag: {"text": [[rgb, alpha, count], ...],
  // "background": [...]}}}, tags and entries sorted. Globals are rebuilt
  // on load.
  std::string to_json() const;
  static FrequencyTable from_json(const std::string& text);
  void save(const std::string& path) const;
  static FrequencyTable load(const std::string& path);

 private:
  std::map<std::string, std::array<Counts, 2>> per_tag_;
  std::array<Counts, 2> global_;
};

// Every element gets the mode color of its (tag, property) pairs; text
// only for text elements.
std::vector<QuantizedStyle> colorize_mode(const FrequencyTable& table,
                                          const PageTree& page);

// One seeded draw per distinct (tag, property) pair present on the page,
// reused for every matching element.
std::vector<QuantizedStyle> colorize_sampling(const FrequencyTable& table,
                                              const PageTree& page,
                                              std::uint64_t seed);

}  // namespace webcolor
