#include "webcolor/page.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include "json.hpp"
#include "webcolor/errors.hpp"

namespace webcolor {

namespace {

const std::array<std::string, 64> kTagList = {
    "html",    "body",   "div",        "span",    "a",       "img",
    "p",       "button", "ul",         "ol",      "li",      "h1",
    "h2",      "h3",     "h4",         "h5",      "h6",      "header",
    "footer",  "nav",    "section",    "article", "aside",   "main",
    "input",   "form",   "label",      "select",  "option",  "textarea",
    "svg",     "path",   "picture",    "figure",  "figcaption", "table",
    "thead",   "tbody",  "tr",         "td",      "th",      "strong",
    "em",      "b",      "i",          "u",       "small",   "br",
    "hr",      "iframe", "video",      "audio",   "canvas",  "dl",
    "dt",      "dd",     "blockquote", "pre",     "code",    "sup",
    "sub",     "mark",   "time",       "address"};

const std::unordered_map<std::string, int>& tag_index_map() {
  static const std::unordered_map<std::string, int> map = [] {
    std::unordered_map<std::string, int> m;
    for (std::size_t i = 0; i < kTagList.size(); ++i)
      m.emplace(kTagList[i], static_cast<int>(i));
    return m;
  }();
  return map;
}

}  // namespace

std::span<const std::string> tag_vocabulary() {
  return {kTagList.data(), kTagList.size()};
}

int tag_id(const std::string& tag) {
  auto it = tag_index_map().find(tag);
  return it == tag_index_map().end() ? static_cast<int>(kTagList.size())
                                     : it->second;
}

std::vector<Violation> validate(const PageTree& tree) {
  std::vector<Violation> out;
  const int n = tree.size();
  if (n < 1) {
    out.push_back({-1, "size: page must have at least one element"});
    return out;
  }
  if (n > kMaxElements)
    out.push_back({-1, "size: " + std::to_string(n) + " elements exceeds " +
                           std::to_string(kMaxElements)});

  int roots = 0;
  std::vector<int> node_depth(static_cast<std::size_t>(n), 0);
  bool structure_ok = true;
  for (int i = 0; i < n; ++i) {
    const auto& el = tree.elements[static_cast<std::size_t>(i)];
    if (!el.parent) {
      ++roots;
      node_depth[static_cast<std::size_t>(i)] = 1;
      if (i != 0) {
        out.push_back({i, "root: non-first element has no parent"});
        structure_ok = false;
      }
      continue;
    }
    int p = *el.parent;
    if (p < 0 || p >= i) {
      out.push_back({i, "pre-order: parent index " + std::to_string(p) +
                            " is not < " + std::to_string(i)});
      structure_ok = false;
      continue;
    }
    node_depth[static_cast<std::size_t>(i)] =
        node_depth[static_cast<std::size_t>(p)] + 1;
  }
  if (roots != 1)
    out.push_back(
        {-1, "root: expected exactly one root, found " + std::to_string(roots)});

  if (structure_ok && roots == 1) {
    int max_depth = *std::max_element(node_depth.begin(), node_depth.end());
    if (max_depth > kMaxDepth)
      out.push_back({-1, "depth: " + std::to_string(max_depth) + " exceeds " +
                             std::to_string(kMaxDepth)});

    // Sibling order must follow storage sequence 0,1,2,... per parent.
    std::vector<int> next_order(static_cast<std::size_t>(n), 0);
    for (int i = 0; i < n; ++i) {
      const auto& el = tree.elements[static_cast<std::size_t>(i)];
      int expected = el.parent
                         ? next_order[static_cast<std::size_t>(*el.parent)]++
                         : 0;
      if (el.content.order != expected)
        out.push_back({i, "sibling-order: order " +
                              std::to_string(el.content.order) + ", expected " +
                              std::to_string(expected)});
    }
  }

  for (int i = 0; i < n; ++i) {
    const auto& el = tree.elements[static_cast<std::size_t>(i)];
    if (el.style && el.style->text.has_value() != el.content.has_text())
      out.push_back({i, el.content.has_text()
                            ? "text-style: text element lacks a text color"
                            : "text-style: no-text element has a text color"});
  }
  return out;
}

void require_valid(const PageTree& tree) {
  auto violations = validate(tree);
  if (violations.empty()) return;
  std::string msg = "invalid page '" + tree.id + "':";
  for (const auto& v : violations) {
    msg += " [";
    if (v.element >= 0) msg += "element " + std::to_string(v.element) + ": ";
    msg += v.rule + "]";
  }
  throw ValidationError(msg);
}

std::vector<std::vector<int>> child_lists(const PageTree& tree) {
  std::vector<std::vector<int>> children(tree.elements.size());
  for (int i = 0; i < tree.size(); ++i) {
    const auto& el = tree.elements[static_cast<std::size_t>(i)];
    if (el.parent) children[static_cast<std::size_t>(*el.parent)].push_back(i);
  }
  return children;
}

std::vector<int> preorder(const PageTree& tree) {
  require_valid(tree);
  auto children = child_lists(tree);
  std::vector<int> order;
  order.reserve(tree.elements.size());
  std::vector<int> stack{0};
  while (!stack.empty()) {
    int node = stack.back();
    stack.pop_back();
    order.push_back(node);
    const auto& kids = children[static_cast<std::size_t>(node)];
    for (auto it = kids.rbegin(); it != kids.rend(); ++it) stack.push_back(*it);
  }
  return order;
}

int depth(const PageTree& tree) {
  int max_depth = 0;
  std::vector<int> node_depth(tree.elements.size(), 0);
  for (int i = 0; i < tree.size(); ++i) {
    const auto& el = tree.elements[static_cast<std::size_t>(i)];
    int d = el.parent ? node_depth[static_cast<std::size_t>(*el.parent)] + 1 : 1;
    node_depth[static_cast<std::size_t>(i)] = d;
    max_depth = std::max(max_depth, d);
  }
  return max_depth;
}

std::array<double, kTextFeatureCount> text_features_from_string(
    const std::string& text, int lines, bool pseudo_element) {
  int words = 0;
  bool in_word = false;
  for (char c : text) {
    bool space = std::isspace(static_cast<unsigned char>(c)) != 0;
    if (!space && !in_word) ++words;
    in_word = !space;
  }

  bool any_upper = false, any_lower = false, any_digit = false;
  bool all_digits = !text.empty();
  for (char c : text) {
    unsigned char u = static_cast<unsigned char>(c);
    if (std::isupper(u)) any_upper = true;
    if (std::islower(u)) any_lower = true;
    if (std::isdigit(u))
      any_digit = true;
    else
      all_digits = false;
  }
  bool starts_cap = false;
  for (char c : text) {
    unsigned char u = static_cast<unsigned char>(c);
    if (std::isalpha(u)) {
      starts_cap = std::isupper(u) != 0;
      break;
    }
  }
  auto contains_any = [&](std::initializer_list<const char*> needles) {
    for (const char* s : needles)
      if (text.find(s) != std::string::npos) return true;
    return false;
  };
  bool currency = contains_any({"$", "€", "£", "¥"});
  bool punct = text.find_first_of(".,;:!?'\"()-") != std::string::npos;
  bool url = contains_any({"http://", "https://", "www."});

  return {static_cast<double>(lines),
          static_cast<double>(words),
          any_upper && !any_lower ? 1.0 : 0.0,
          starts_cap ? 1.0 : 0.0,
          any_digit ? 1.0 : 0.0,
          all_digits ? 1.0 : 0.0,
          currency ? 1.0 : 0.0,
          punct ? 1.0 : 0.0,
          words == 1 ? 1.0 : 0.0,
          text.size() > 50 ? 1.0 : 0.0,
          url ? 1.0 : 0.0,
          pseudo_element ? 1.0 : 0.0};
}

std::string format_number(double v) {
  if (!std::isfinite(v)) throw NumericError("format_number: non-finite value");
  if (v == std::floor(v) && std::abs(v) < 1e15) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.0f", v);
    // Avoid the "-0" spelling.
    if (buf[0] == '-' && buf[1] == '0' && buf[2] == '\0') return "0";
    return buf;
  }
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

namespace {

void append_escaped(std::string& out, const std::string& s) {
  out += '"';
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      case '\t': out += "\\t"; break;
      default:
        if (static_cast<unsigned char>(c) < 0x20) {
          char buf[8];
          std::snprintf(buf, sizeof(buf), "\\u%04x", c);
          out += buf;
        } else {
          out += c;
        }
    }
  }
  out += '"';
}

template <std::size_t N>
void append_feats(std::string& out,
                  const std::optional<std::array<double, N>>& feats) {
  if (!feats) {
    out += "null";
    return;
  }
  out += '[';
  for (std::size_t i = 0; i < N; ++i) {
    if (i) out += ", ";
    out += format_number((*feats)[i]);
  }
  out += ']';
}

void append_color(std::string& out, const RgbaColor& c) {
  out += '[';
  out += std::to_string(c.r) + ", " + std::to_string(c.g) + ", " +
         std::to_string(c.b) + ", " + std::to_string(c.a);
  out += ']';
}

using Json = nlohmann::json;

[[noreturn]] void field_error(int element, const std::string& field,
                              const std::string& what) {
  throw ParseError("element " + std::to_string(element) + ", field '" + field +
                   "': " + what);
}

const Json& require_field(const Json& obj, int element,
                          const std::string& field) {
  auto it = obj.find(field);
  if (it == obj.end()) field_error(element, field, "missing");
  return *it;
}

template <std::size_t N>
std::optional<std::array<double, N>> parse_feats(const Json& j, int element,
                                                 const std::string& field) {
  if (j.is_null()) return std::nullopt;
  if (!j.is_array())
    field_error(element, field, "expected an array or null");
  if (j.size() != N)
    field_error(element, field,
                "arity " + std::to_string(j.size()) + ", expected " +
                    std::to_string(N));
  std::array<double, N> out{};
  for (std::size_t i = 0; i < N; ++i) {
    if (!j[i].is_number())
      field_error(element, field, "entry " + std::to_string(i) +
                                      " is not a number");
    out[i] = j[i].get<double>();
  }
  return out;
}

RgbaColor parse_color(const Json& j, int element, const std::string& field) {
  if (!j.is_array() || j.size() != 4)
    field_error(element, field, "expected [r, g, b, a]");
  std::array<std::uint8_t, 4> ch{};
  for (std::size_t i = 0; i < 4; ++i) {
    if (!j[i].is_number_integer())
      field_error(element, field, "channel " + std::to_string(i) +
                                      " is not an integer");
    auto v = j[i].get<long long>();
    if (v < 0 || v > 255)
      field_error(element, field, "channel value " + std::to_string(v) +
                                      " outside 0..255");
    ch[i] = static_cast<std::uint8_t>(v);
  }
  return {ch[0], ch[1], ch[2], ch[3]};
}

}  // namespace

std::string write_page(const PageTree& tree) {
  std::string out;
  out.reserve(128 * tree.elements.size() + 64);
  out += "{\n  \"id\": ";
  append_escaped(out, tree.id);
  out += ",\n  \"elements\": [";
  for (std::size_t i = 0; i < tree.elements.size(); ++i) {
    const auto& el = tree.elements[i];
    out += i ? ",\n    " : "\n    ";
    out += "{\"parent\": ";
    out += el.parent ? std::to_string(*el.parent) : "null";
    out += ", \"order\": " + std::to_string(el.content.order);
    out += ", \"tag\": ";
    append_escaped(out, el.content.tag);
    out += ", \"text_feats\": ";
    append_feats(out, el.content.text_feats);
    out += ", \"image_feats\": ";
    append_feats(out, el.content.image_feats);
    out += ", \"bg_image_feats\": ";
    append_feats(out, el.content.bg_image_feats);
    out += ", \"style\": ";
    if (!el.style) {
      out += "null";
    } else {
      out += "{\"text\": ";
      if (el.style->text)
        append_color(out, *el.style->text);
      else
        out += "null";
      out += ", \"background\": ";
      append_color(out, el.style->background);
      out += '}';
    }
    out += '}';
  }
  out += tree.elements.empty() ? "]\n}\n" : "\n  ]\n}\n";
  return out;
}

PageTree read_page(const std::string& json_text) {
  Json doc;
  try {
    doc = Json::parse(json_text);
  } catch (const Json::parse_error& e) {
    throw ParseError(std::string("malformed JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ParseError("top level is not an object");
  if (!doc.contains("id") || !doc["id"].is_string())
    throw ParseError("field 'id': missing or not a string");
  if (!doc.contains("elements") || !doc["elements"].is_array())
    throw ParseError("field 'elements': missing or not an array");

  PageTree tree;
  tree.id = doc["id"].get<std::string>();
  const auto& elements = doc["elements"];
  tree.elements.reserve(elements.size());
  for (int i = 0; i < static_cast<int>(elements.size()); ++i) {
    const Json& j = elements[static_cast<std::size_t>(i)];
    if (!j.is_object()) field_error(i, "<element>", "expected an object");
    PageElement el;

    const Json& parent = require_field(j, i, "parent");
    if (parent.is_null()) {
      el.parent = std::nullopt;
    } else if (parent.is_number_integer()) {
      el.parent = parent.get<int>();
    } else {
      field_error(i, "parent", "expected an integer or null");
    }

    const Json& order = require_field(j, i, "order");
    if (!order.is_number_integer() || order.get<long long>() < 0)
      field_error(i, "order", "expected a non-negative integer");
    el.content.order = order.get<int>();

    const Json& tag = require_field(j, i, "tag");
    if (!tag.is_string()) field_error(i, "tag", "expected a string");
    el.content.tag = tag.get<std::string>();

    el.content.text_feats = parse_feats<kTextFeatureCount>(
        require_field(j, i, "text_feats"), i, "text_feats");
    el.content.image_feats = parse_feats<kImageFeatureCount>(
        require_field(j, i, "image_feats"), i, "image_feats");
    el.content.bg_image_feats = parse_feats<kImageFeatureCount>(
        require_field(j, i, "bg_image_feats"), i, "bg_image_feats");

    const Json& style = require_field(j, i, "style");
    if (!style.is_null()) {
      if (!style.is_object()) field_error(i, "style", "expected an object");
      ColorStyle cs;
      const Json& text = require_field(style, i, "text");
      if (!text.is_null()) cs.text = parse_color(text, i, "style.text");
      cs.background = parse_color(require_field(style, i, "background"), i,
                                  "style.background");
      el.style = cs;
    }
    tree.elements.push_back(std::move(el));
  }
  return tree;
}

void write_page_file(const PageTree& tree, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open '" + path + "' for writing");
  f << write_page(tree);
  if (!f) throw IoError("failed writing '" + path + "'");
}

PageTree read_page_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open '" + path + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  try {
    return read_page(ss.str());
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what());
  }
}

}  // namespace webcolor
