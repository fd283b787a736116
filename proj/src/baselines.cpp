#include "webcolor/baselines.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"
#include "webcolor/errors.hpp"

namespace webcolor {

namespace {

const FrequencyTable::Counts kEmptyCounts;

constexpr const char* property_name(StyleProperty p) {
  return p == StyleProperty::kText ? "text" : "background";
}

}  // namespace

FrequencyTable FrequencyTable::fit(std::span<const PageTree> train_pages) {
  FrequencyTable table;
  for (const PageTree& page : train_pages) {
    for (int i = 0; i < page.size(); ++i) {
      const auto& el = page.elements[static_cast<std::size_t>(i)];
      if (!el.style)
        throw ContractError("fit: page '" + page.id + "' element " +
                            std::to_string(i) + " has no style");
      auto bump = [&](StyleProperty prop, const RgbaColor& color) {
        QuantizedColor q = quantize(color);
        const auto pi = static_cast<std::size_t>(prop);
        ++table.per_tag_[el.content.tag][pi][q];
        ++table.global_[pi][q];
      };
      bump(StyleProperty::kBackground, el.style->background);
      if (el.style->text) bump(StyleProperty::kText, *el.style->text);
    }
  }
  return table;
}

const FrequencyTable::Counts& FrequencyTable::counts(const std::string& tag,
                                                     StyleProperty prop) const {
  auto it = per_tag_.find(tag);
  if (it == per_tag_.end()) return kEmptyCounts;
  return it->second[static_cast<std::size_t>(prop)];
}

const FrequencyTable::Counts& FrequencyTable::global(StyleProperty prop) const {
  return global_[static_cast<std::size_t>(prop)];
}

bool FrequencyTable::has_pair(const std::string& tag,
                              StyleProperty prop) const {
  return !counts(tag, prop).empty();
}

QuantizedColor FrequencyTable::mode(const std::string& tag,
                                    StyleProperty prop) const {
  const Counts& c = has_pair(tag, prop) ? counts(tag, prop) : global(prop);
  if (c.empty())
    throw ContractError(std::string("mode: no frequencies for property '") +
                        property_name(prop) + "' (empty global table)");
  // Map iteration is index-sorted, so keeping strict maxima breaks ties
  // toward the smallest (rgb_index, alpha_index).
  auto best = c.begin();
  for (auto it = c.begin(); it != c.end(); ++it)
    if (it->second > best->second) best = it;
  return best->first;
}

QuantizedColor FrequencyTable::sample(const std::string& tag,
                                      StyleProperty prop, Rng& rng) const {
  const Counts& c = has_pair(tag, prop) ? counts(tag, prop) : global(prop);
  if (c.empty())
    throw ContractError(std::string("sample: no frequencies for property '") +
                        property_name(prop) + "' (empty global table)");
  long total = 0;
  for (const auto& [color, count] : c) total += count;
  auto pick = static_cast<long>(rng.below(static_cast<std::uint64_t>(total)));
  for (const auto& [color, count] : c) {
    pick -= count;
    if (pick < 0) return color;
  }
  return c.rbegin()->first;
}

std::string FrequencyTable::to_json() const {
  std::string out = "{\n  \"tags\": {";
  bool first_tag = true;
  for (const auto& [tag, props] : per_tag_) {
    out += first_tag ? "\n" : ",\n";
    first_tag = false;
    out += "    \"" + tag + "\": {";
    for (int p = 0; p < 2; ++p) {
      out += p == 0 ? "\"text\": [" : ", \"background\": [";
      bool first = true;
      for (const auto& [color, count] : props[static_cast<std::size_t>(p)]) {
        if (!first) out += ", ";
        first = false;
        out += "[" + std::to_string(color.rgb_index) + ", " +
               std::to_string(color.alpha_index) + ", " +
               std::to_string(count) + "]";
      }
      out += "]";
    }
    out += "}";
  }
  out += per_tag_.empty() ? "}\n}\n" : "\n  }\n}\n";
  return out;
}

FrequencyTable FrequencyTable::from_json(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("frequency table: malformed JSON: ") +
                     e.what());
  }
  FrequencyTable table;
  if (!doc.is_object() || !doc.contains("tags") || !doc["tags"].is_object())
    throw ParseError("frequency table: missing 'tags' object");
  for (const auto& [tag, props] : doc["tags"].items()) {
    for (int p = 0; p < 2; ++p) {
      const char* key = p == 0 ? "text" : "background";
      if (!props.contains(key) || !props[key].is_array())
        throw ParseError("frequency table: tag '" + tag + "' missing '" +
                         key + "' list");
      for (const auto& entry : props[key]) {
        if (!entry.is_array() || entry.size() != 3)
          throw ParseError("frequency table: entries must be [rgb, alpha, count]");
        QuantizedColor q{entry[0].get<int>(), entry[1].get<int>()};
        long count = entry[2].get<long>();
        if (q.rgb_index < 1 || q.rgb_index > kRgbClasses || q.alpha_index < 1 ||
            q.alpha_index > kAlphaClasses || count < 0)
          throw ParseError("frequency table: entry out of range");
        table.per_tag_[tag][static_cast<std::size_t>(p)][q] = count;
        table.global_[static_cast<std::size_t>(p)][q] += count;
      }
    }
  }
  return table;
}

void FrequencyTable::save(const std::string& path) const {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open '" + path + "' for writing");
  f << to_json();
  if (!f) throw IoError("failed writing '" + path + "'");
}

FrequencyTable FrequencyTable::load(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open '" + path + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  return from_json(ss.str());
}

std::vector<QuantizedStyle> colorize_mode(const FrequencyTable& table,
                                          const PageTree& page) {
  std::vector<QuantizedStyle> out(page.elements.size());
  for (std::size_t i = 0; i < page.elements.size(); ++i) {
    const auto& el = page.elements[i];
    out[i].background = table.mode(el.content.tag, StyleProperty::kBackground);
    if (el.content.has_text())
      out[i].text = table.mode(el.content.tag, StyleProperty::kText);
  }
  return out;
}

std::vector<QuantizedStyle> colorize_sampling(const FrequencyTable& table,
                                              const PageTree& page,
                                              std::uint64_t seed) {
  // One draw per distinct (tag, property) pair, applied page-wide for
  // consistent styling. Draw order is the sorted pair order.
  std::map<std::pair<std::string, StyleProperty>, QuantizedColor> drawn;
  for (const auto& el : page.elements) {
    drawn.emplace(std::pair{el.content.tag, StyleProperty::kBackground},
                  QuantizedColor{});
    if (el.content.has_text())
      drawn.emplace(std::pair{el.content.tag, StyleProperty::kText},
                    QuantizedColor{});
  }
  Rng rng(seed);
  for (auto& [pair, color] : drawn)
    color = table.sample(pair.first, pair.second, rng);

  std::vector<QuantizedStyle> out(page.elements.size());
  for (std::size_t i = 0; i < page.elements.size(); ++i) {
    const auto& el = page.elements[i];
    out[i].background =
        drawn.at({el.content.tag, StyleProperty::kBackground});
    if (el.content.has_text())
      out[i].text = drawn.at({el.content.tag, StyleProperty::kText});
  }
  return out;
}

}  // namespace webcolor
