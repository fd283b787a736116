#include "webcolor/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "json.hpp"
#include "webcolor/color.hpp"
#include "webcolor/errors.hpp"
#include "webcolor/rng.hpp"

namespace fs = std::filesystem;

namespace webcolor {

namespace {

const std::vector<std::string> kContainerTags = {
    "div", "section", "ul", "header", "footer",
    "nav", "main",    "article", "form", "figure"};
const std::vector<std::string> kLeafTags = {"span", "a",  "img",   "p",
                                            "button", "h1", "h2",    "h3",
                                            "li",     "label", "input", "td"};

bool is_texty(const std::string& tag) {
  return tag != "img" && tag != "input" &&
         std::find(kLeafTags.begin(), kLeafTags.end(), tag) != kLeafTags.end();
}

// All tags the generator can emit; palette domain.
std::vector<std::string> tag_universe() {
  std::vector<std::string> tags{"html", "body"};
  tags.insert(tags.end(), kContainerTags.begin(), kContainerTags.end());
  tags.insert(tags.end(), kLeafTags.begin(), kLeafTags.end());
  return tags;
}

struct Palette {
  std::map<std::string, QuantizedColor> text;
  std::map<std::string, QuantizedColor> background;
  std::map<std::string, QuantizedColor> parent_background;
};

QuantizedColor random_color(Rng& rng, double opaque_prob) {
  QuantizedColor q;
  q.rgb_index = 1 + static_cast<int>(rng.below(kRgbClasses));
  q.alpha_index = rng.uniform() < opaque_prob
                      ? kAlphaClasses
                      : 1 + static_cast<int>(rng.below(kAlphaClasses));
  return q;
}

Palette build_palette(std::uint64_t seed, int palette_size) {
  Rng rng = Rng(seed).fork(0xC0102);
  std::vector<QuantizedColor> pool;
  if (palette_size > 0) {
    for (int i = 0; i < palette_size; ++i) pool.push_back(random_color(rng, 0.85));
  }
  auto draw = [&](double opaque_prob) {
    if (pool.empty()) return random_color(rng, opaque_prob);
    return pool[rng.below(pool.size())];
  };
  Palette palette;
  for (const std::string& tag : tag_universe()) {
    palette.text[tag] = draw(0.9);
    palette.background[tag] = draw(0.8);
    palette.parent_background[tag] = draw(0.8);
  }
  return palette;
}

// A value exactly representable in <= 6 significant decimal digits (and in
// binary), so canonical serialization round-trips bit-exactly.
double dyadic(Rng& rng, double max_value) {
  auto steps = static_cast<std::uint64_t>(max_value * 32.0);
  return static_cast<double>(rng.below(steps + 1)) / 32.0;
}

std::array<double, kImageFeatureCount> random_image_feats(Rng& rng) {
  double w = static_cast<double>(16 + rng.below(497));
  double h = static_cast<double>(16 + rng.below(497));
  double aspect = std::floor(w / h * 32.0 + 0.5) / 32.0;
  aspect = std::min(8.0, std::max(0.03125, aspect));
  std::array<double, kImageFeatureCount> f{};
  f[0] = w;
  f[1] = h;
  f[2] = rng.uniform() < 0.7 ? 3.0 : 4.0;
  f[3] = aspect;
  for (int i = 0; i < 4; ++i) f[4 + static_cast<std::size_t>(i)] = dyadic(rng, 1.0);
  for (int i = 0; i < 4; ++i) f[8 + static_cast<std::size_t>(i)] = dyadic(rng, 0.5);
  f[12] = rng.uniform() < 0.1 ? 1.0 : 0.0;
  return f;
}

std::array<double, kTextFeatureCount> random_text_feats(Rng& rng) {
  std::array<double, kTextFeatureCount> f{};
  f[0] = static_cast<double>(1 + rng.below(3));  // lines
  f[1] = static_cast<double>(1 + rng.below(8));  // words
  for (int i = 2; i < 11; ++i)
    f[static_cast<std::size_t>(i)] = rng.below(2) ? 1.0 : 0.0;
  f[11] = rng.uniform() < 0.05 ? 1.0 : 0.0;  // pseudo element
  return f;
}

struct TreeBuilder {
  const CorpusConfig& config;
  Rng& rng;
  PageTree& tree;
  int budget;

  void grow(int parent_index, int depth) {
    int kids = 0;
    while (budget > 0 && kids < 4 && depth < config.max_depth) {
      double p_more = std::max(0.15, (kids == 0 ? 0.9 : 0.6) - 0.08 * depth);
      if (rng.uniform() >= p_more) break;
      bool container = depth + 1 < config.max_depth && rng.uniform() < 0.35;
      const auto& pool = container ? kContainerTags : kLeafTags;
      PageElement el;
      el.parent = parent_index;
      el.content.order = kids;
      el.content.tag = pool[rng.below(pool.size())];
      tree.elements.push_back(std::move(el));
      --budget;
      ++kids;
      int child_index = tree.size() - 1;
      grow(child_index, depth + 1);
    }
  }
};

RgbaColor materialize(const QuantizedColor& q, BinAnchor anchor, Rng& rng) {
  auto bins = rgb_bins(q.rgb_index);
  std::array<int, 4> all_bins{bins[0], bins[1], bins[2], q.alpha_index - 1};
  std::array<std::uint8_t, 4> out{};
  for (std::size_t i = 0; i < 4; ++i) {
    int lo = bin_bounds(all_bins[i]).first;
    int offset = 0;
    switch (anchor) {
      case BinAnchor::kFloor: offset = 0; break;
      case BinAnchor::kCenter: offset = kBinWidth / 2; break;
      case BinAnchor::kRandom: offset = static_cast<int>(rng.below(kBinWidth)); break;
    }
    out[i] = static_cast<std::uint8_t>(lo + offset);
  }
  return {out[0], out[1], out[2], out[3]};
}

void assign_styles(PageTree& tree, const CorpusConfig& config,
                   const Palette& palette, Rng& rng) {
  const bool parent_conditional = config.grammar == "parent_conditional";
  const bool noisy = config.grammar == "noisy";
  for (int i = 0; i < tree.size(); ++i) {
    auto& el = tree.elements[static_cast<std::size_t>(i)];
    QuantizedColor bg;
    if (parent_conditional) {
      bg = el.parent
               ? palette.parent_background.at(
                     tree.elements[static_cast<std::size_t>(*el.parent)]
                         .content.tag)
               : palette.background.at(el.content.tag);
    } else {
      bg = palette.background.at(el.content.tag);
    }
    QuantizedColor text = palette.text.at(el.content.tag);
    if (noisy) {
      if (rng.uniform() < config.noise_p) bg = random_color(rng, 0.5);
      if (rng.uniform() < config.noise_p) text = random_color(rng, 0.5);
    }
    ColorStyle style;
    style.background = materialize(bg, config.anchor, rng);
    if (el.content.has_text())
      style.text = materialize(text, config.anchor, rng);
    el.style = style;
  }
}

void check_config(const CorpusConfig& config) {
  if (config.pages < 1)
    throw ValidationError("corpus: pages must be positive");
  if (config.max_elements < 4 || config.max_elements > kMaxElements)
    throw ValidationError("corpus: max_elements must be in 4.." +
                          std::to_string(kMaxElements));
  if (config.max_depth < 3 || config.max_depth > kMaxDepth)
    throw ValidationError("corpus: max_depth must be in 3.." +
                          std::to_string(kMaxDepth));
  if (config.grammar != "tag_deterministic" &&
      config.grammar != "parent_conditional" && config.grammar != "noisy")
    throw ValidationError("corpus: unknown grammar '" + config.grammar + "'");
  if (config.noise_p < 0.0 || config.noise_p > 1.0)
    throw ValidationError("corpus: noise_p must be in [0, 1]");
}

}  // namespace

std::vector<PageTree> generate_corpus(const CorpusConfig& config) {
  check_config(config);
  Palette palette = build_palette(config.seed);
  Rng base(config.seed);
  std::vector<PageTree> pages;
  pages.reserve(static_cast<std::size_t>(config.pages));
  for (int p = 0; p < config.pages; ++p) {
    Rng rng = base.fork(static_cast<std::uint64_t>(p) + 1);
    PageTree tree;
    char id[32];
    std::snprintf(id, sizeof(id), "page-%05d", p);
    tree.id = id;

    PageElement html;
    html.content.order = 0;
    html.content.tag = "html";
    tree.elements.push_back(std::move(html));
    PageElement body;
    body.parent = 0;
    body.content.order = 0;
    body.content.tag = "body";
    tree.elements.push_back(std::move(body));

    int target = 4 + static_cast<int>(rng.below(
                         static_cast<std::uint64_t>(config.max_elements - 3)));
    TreeBuilder builder{config, rng, tree, target - 2};
    builder.grow(1, 2);

    for (auto& el : tree.elements) {
      if (el.content.tag == "img") el.content.image_feats = random_image_feats(rng);
      double text_prob = is_texty(el.content.tag) ? 0.85 : 0.15;
      if (el.content.tag == "html" || el.content.tag == "img" ||
          el.content.tag == "input")
        text_prob = 0.0;
      if (rng.uniform() < text_prob) el.content.text_feats = random_text_feats(rng);
      if (!el.parent.has_value()) continue;
      if (rng.uniform() < 0.05) el.content.bg_image_feats = random_image_feats(rng);
    }
    assign_styles(tree, config, palette, rng);
    require_valid(tree);
    pages.push_back(std::move(tree));
  }
  return pages;
}

std::vector<std::vector<PageTree>> split_pages(std::vector<PageTree> pages,
                                               const std::vector<double>& ratios,
                                               std::uint64_t seed) {
  if (ratios.empty() || ratios.size() > 3)
    throw ValidationError("split: expected 1..3 ratios");
  double sum = 0.0;
  for (double r : ratios) {
    if (r < 0.0) throw ValidationError("split: negative ratio");
    sum += r;
  }
  if (std::abs(sum - 1.0) > 1e-9)
    throw ValidationError("split: ratios must sum to 1");

  const std::size_t n = pages.size();
  std::vector<std::size_t> counts(ratios.size(), 0);
  std::vector<std::pair<double, std::size_t>> fractions;
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < ratios.size(); ++i) {
    double exact = ratios[i] * static_cast<double>(n);
    counts[i] = static_cast<std::size_t>(std::floor(exact));
    assigned += counts[i];
    fractions.emplace_back(exact - std::floor(exact), i);
  }
  std::stable_sort(fractions.begin(), fractions.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t k = 0; assigned < n; ++k, ++assigned)
    ++counts[fractions[k % fractions.size()].second];
  for (std::size_t i = 0; i < ratios.size(); ++i)
    if (ratios[i] > 0.0 && counts[i] == 0)
      throw ValidationError("split: ratio " + std::to_string(ratios[i]) +
                            " receives zero pages");

  Rng rng = Rng(seed).fork(0x511717);
  auto perm = rng.permutation(n);
  std::vector<std::vector<PageTree>> out(ratios.size());
  std::size_t cursor = 0;
  for (std::size_t i = 0; i < ratios.size(); ++i) {
    out[i].reserve(counts[i]);
    for (std::size_t k = 0; k < counts[i]; ++k)
      out[i].push_back(std::move(pages[perm[cursor++]]));
  }
  return out;
}

std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::uint64_t hash_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open '" + path + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  return fnv1a(ss.str());
}

std::uint64_t hash_directory(const std::string& dir) {
  std::vector<std::string> files;
  for (const auto& entry : fs::recursive_directory_iterator(dir))
    if (entry.is_regular_file())
      files.push_back(fs::relative(entry.path(), dir).generic_string());
  std::sort(files.begin(), files.end());
  std::string acc;
  for (const std::string& rel : files) {
    acc += rel;
    acc += ':';
    acc += std::to_string(hash_file((fs::path(dir) / rel).string()));
    acc += '\n';
  }
  return fnv1a(acc);
}

BinAnchor parse_anchor(const std::string& name) {
  if (name == "floor") return BinAnchor::kFloor;
  if (name == "center") return BinAnchor::kCenter;
  if (name == "random") return BinAnchor::kRandom;
  throw ValidationError("unknown bin anchor '" + name + "'");
}

void write_corpus(const CorpusConfig& config, const std::string& dir) {
  auto pages = generate_corpus(config);
  double mean_elements = 0.0, mean_depth = 0.0;
  for (const PageTree& p : pages) {
    mean_elements += p.size();
    mean_depth += depth(p);
  }
  mean_elements /= static_cast<double>(pages.size());
  mean_depth /= static_cast<double>(pages.size());

  auto splits = split_pages(std::move(pages), config.ratios, config.seed);
  const std::array<const char*, 3> names{"train", "val", "test"};

  fs::create_directories(dir);
  nlohmann::ordered_json manifest;
  manifest["pages"] = config.pages;
  manifest["max_elements"] = config.max_elements;
  manifest["max_depth"] = config.max_depth;
  manifest["grammar"] = config.grammar;
  manifest["noise_p"] = config.noise_p;
  manifest["anchor"] = config.anchor == BinAnchor::kFloor    ? "floor"
                       : config.anchor == BinAnchor::kCenter ? "center"
                                                             : "random";
  manifest["seed"] = config.seed;
  manifest["ratios"] = config.ratios;
  manifest["mean_elements"] = mean_elements;
  manifest["mean_depth"] = mean_depth;

  nlohmann::ordered_json counts, hashes;
  for (std::size_t i = 0; i < splits.size(); ++i) {
    fs::path split_dir = fs::path(dir) / names[i];
    fs::create_directories(split_dir);
    for (const PageTree& page : splits[i])
      write_page_file(page, (split_dir / (page.id + ".json")).string());
    counts[names[i]] = splits[i].size();
    char hex[32];
    std::snprintf(hex, sizeof(hex), "%016llx",
                  static_cast<unsigned long long>(hash_directory(split_dir.string())));
    hashes[names[i]] = hex;
  }
  manifest["counts"] = std::move(counts);
  manifest["split_hashes"] = std::move(hashes);

  std::ofstream f(fs::path(dir) / "manifest.json", std::ios::binary);
  if (!f) throw IoError("cannot write manifest in '" + dir + "'");
  f << manifest.dump(2) << "\n";
}

std::vector<PageTree> load_pages(const std::string& dir) {
  if (!fs::is_directory(dir)) throw IoError("'" + dir + "' is not a directory");
  std::vector<std::string> files;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == ".json" &&
        entry.path().filename() != "manifest.json")
      files.push_back(entry.path().string());
  std::sort(files.begin(), files.end());
  std::vector<PageTree> pages;
  pages.reserve(files.size());
  for (const std::string& path : files) pages.push_back(read_page_file(path));
  return pages;
}

}  // namespace webcolor
