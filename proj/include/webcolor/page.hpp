#pragma once

#include <array>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "webcolor/color.hpp"

namespace webcolor {

inline constexpr int kMaxElements = 200;
inline constexpr int kMaxDepth = 30;
inline constexpr int kTextFeatureCount = 12;
inline constexpr int kImageFeatureCount = 13;
inline constexpr int kMaxOrderEmbedding = 63;  // sibling orders clamp here

// Full-resolution color style of one element. text is absent iff the
// element has no text content.
struct ColorStyle {
  std::optional<RgbaColor> text;
  RgbaColor background;

  bool operator==(const ColorStyle&) const = default;
};

// Per-element content information. text_feats layout: lines, words, nine
// literal indicators (see text_features_from_string), pseudo-element flag.
// image_feats / bg_image_feats layout: width, height, channels, aspect
// ratio, mean RGBA (4), std RGBA (4), is-SVG flag.
struct ContentFeatures {
  int order = 0;  // position within siblings
  std::string tag;
  std::optional<std::array<double, kTextFeatureCount>> text_feats;
  std::optional<std::array<double, kImageFeatureCount>> image_feats;
  std::optional<std::array<double, kImageFeatureCount>> bg_image_feats;

  bool has_text() const { return text_feats.has_value(); }
  bool operator==(const ContentFeatures&) const = default;
};

struct PageElement {
  std::optional<int> parent;  // absent for the root
  ContentFeatures content;
  std::optional<ColorStyle> style;

  bool operator==(const PageElement&) const = default;
};

// An ordered tree of elements stored in pre-order. Treated as immutable
// after construction; safe to share read-only across threads.
struct PageTree {
  std::string id;
  std::vector<PageElement> elements;

  int size() const { return static_cast<int>(elements.size()); }
  bool operator==(const PageTree&) const = default;
};

struct Violation {
  int element = -1;  // -1 for page-level rules
  std::string rule;
};

// Empty iff all PageTree invariants hold: 1..200 elements, depth <= 30,
// one root, parent index < element index, sibling orders 0,1,2,...,
// text style present iff text content present.
std::vector<Violation> validate(const PageTree& tree);

// Throws ValidationError when validate(tree) is non-empty.
void require_valid(const PageTree& tree);

// Pre-order traversal indices. For a valid tree this is the identity
// permutation (the storage contract), computed from the structure.
std::vector<int> preorder(const PageTree& tree);

// Children of each element, derived from parent indices.
std::vector<std::vector<int>> child_lists(const PageTree& tree);

// Depth of the deepest element (single node -> 1).
int depth(const PageTree& tree);

// Fixed 64-tag vocabulary plus "UNK". tag_id maps unseen tags to the UNK
// slot (index 64).
std::span<const std::string> tag_vocabulary();
int tag_id(const std::string& tag);
inline constexpr int kTagVocabularySize = 65;  // 64 tags + UNK

// The nine literal indicators used in text_feats, computed from raw text:
// all-uppercase, starts-capitalized, contains-digit, all-digits,
// contains-currency-symbol, contains-punctuation, single-word,
// length > 50 chars, contains-URL.
std::array<double, kTextFeatureCount> text_features_from_string(
    const std::string& text, int lines, bool pseudo_element);

// Canonical JSON serialization: keys in fixed order, floats with up to six
// significant digits, LF line endings, trailing newline. write(read(x)) is
// byte-identical for canonical input.
std::string write_page(const PageTree& tree);
PageTree read_page(const std::string& json_text);

void write_page_file(const PageTree& tree, const std::string& path);
PageTree read_page_file(const std::string& path);

// Canonical number formatting shared by every JSON writer in the project.
std::string format_number(double v);

}  // namespace webcolor
