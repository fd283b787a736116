#include <filesystem>
#include <map>
#include <set>

#include "doctest.h"
#include "testutil.hpp"
#include "webcolor/baselines.hpp"
#include "webcolor/corpus.hpp"
#include "webcolor/errors.hpp"
#include "webcolor/metrics.hpp"

using namespace webcolor;
using namespace webcolor::testutil;

TEST_CASE("generation is seed-deterministic and structurally valid") {
  CorpusConfig config;
  config.pages = 25;
  config.max_elements = 30;
  config.max_depth = 7;
  config.seed = 5;
  auto a = generate_corpus(config);
  auto b = generate_corpus(config);
  CHECK(a == b);

  for (const PageTree& page : a) {
    CHECK(validate(page).empty());
    CHECK(page.size() <= config.max_elements);
    CHECK(depth(page) <= config.max_depth);
    for (const auto& el : page.elements) {
      REQUIRE(el.style.has_value());
      CHECK(el.style->text.has_value() == el.content.has_text());
    }
  }

  CorpusConfig other = config;
  other.seed = 6;
  CHECK(generate_corpus(other) != a);
}

TEST_CASE("config caps are enforced") {
  CorpusConfig config;
  config.max_elements = 500;
  CHECK_THROWS_AS(generate_corpus(config), ValidationError);
  config.max_elements = 40;
  config.max_depth = 64;
  CHECK_THROWS_AS(generate_corpus(config), ValidationError);
  config.max_depth = 8;
  config.grammar = "something_else";
  CHECK_THROWS_AS(generate_corpus(config), ValidationError);
}

TEST_CASE("tag_deterministic corpus: mode baseline reproduces it exactly") {
  CorpusConfig config;
  config.pages = 30;
  config.seed = 17;
  config.grammar = "tag_deterministic";
  auto pages = generate_corpus(config);
  FrequencyTable table = FrequencyTable::fit(pages);
  for (const PageTree& page : pages) {
    auto styles = colorize_mode(table, page);
    auto truth = quantized_styles(page);
    CHECK(styles == truth);
  }
}

TEST_CASE("parent_conditional corpus carries information in the hierarchy") {
  CorpusConfig config;
  config.pages = 60;
  config.seed = 23;
  config.grammar = "parent_conditional";
  auto pages = generate_corpus(config);

  // count tables: child background given parent tag must be deterministic,
  // and at least two parent tags must produce different backgrounds
  // (positive conditional mutual information between bg and parent tag).
  std::map<std::string, std::set<int>> bg_by_parent;
  for (const PageTree& page : pages)
    for (const auto& el : page.elements) {
      if (!el.parent) continue;
      const auto& parent_tag =
          page.elements[static_cast<std::size_t>(*el.parent)].content.tag;
      bg_by_parent[parent_tag].insert(
          quantize(el.style->background).rgb_index);
    }
  std::set<int> distinct;
  for (const auto& [tag, bgs] : bg_by_parent) {
    CHECK(bgs.size() == 1);  // deterministic given the parent tag
    distinct.insert(*bgs.begin());
  }
  CHECK(distinct.size() >= 2);
}

TEST_CASE("noisy grammar flips roughly noise_p of the colors") {
  CorpusConfig clean_config;
  clean_config.pages = 40;
  clean_config.seed = 29;
  clean_config.grammar = "tag_deterministic";
  clean_config.anchor = BinAnchor::kFloor;
  auto clean = generate_corpus(clean_config);

  CorpusConfig noisy_config = clean_config;
  noisy_config.grammar = "noisy";
  noisy_config.noise_p = 0.3;
  auto noisy = generate_corpus(noisy_config);

  // same skeletons (structure generation ignores the grammar)
  REQUIRE(clean.size() == noisy.size());
  long total = 0, flipped = 0;
  for (std::size_t p = 0; p < clean.size(); ++p) {
    REQUIRE(clean[p].size() == noisy[p].size());
    for (int i = 0; i < clean[p].size(); ++i) {
      const auto& a = clean[p].elements[static_cast<std::size_t>(i)];
      const auto& b = noisy[p].elements[static_cast<std::size_t>(i)];
      CHECK(a.content == b.content);
      ++total;
      if (quantize(a.style->background) != quantize(b.style->background))
        ++flipped;
    }
  }
  double rate = static_cast<double>(flipped) / static_cast<double>(total);
  CHECK(rate > 0.15);
  CHECK(rate < 0.45);
}

TEST_CASE("bin anchors place channel values inside the right bins") {
  for (BinAnchor anchor : {BinAnchor::kFloor, BinAnchor::kCenter, BinAnchor::kRandom}) {
    CorpusConfig config;
    config.pages = 5;
    config.seed = 31;
    config.anchor = anchor;
    for (const PageTree& page : generate_corpus(config))
      for (const auto& el : page.elements) {
        const RgbaColor& bg = el.style->background;
        if (anchor == BinAnchor::kFloor) {
          CHECK(bg.r % 32 == 0);
          CHECK(bg.a % 32 == 0);
        } else if (anchor == BinAnchor::kCenter) {
          CHECK(bg.r % 32 == 16);
        }
      }
  }
  CHECK(parse_anchor("floor") == BinAnchor::kFloor);
  CHECK_THROWS_AS(parse_anchor("middle"), ValidationError);
}

TEST_CASE("split honors ratios, disjointness and exhaustiveness") {
  CorpusConfig config;
  config.pages = 100;
  config.seed = 37;
  auto pages = generate_corpus(config);

  auto splits = split_pages(pages, {0.9, 0.1}, 1);
  REQUIRE(splits.size() == 2);
  CHECK(splits[0].size() == 90);
  CHECK(splits[1].size() == 10);

  std::set<std::string> seen;
  for (const auto& part : splits)
    for (const PageTree& page : part) CHECK(seen.insert(page.id).second);
  CHECK(seen.size() == 100);

  // same seed, same split
  auto again = split_pages(pages, {0.9, 0.1}, 1);
  CHECK(again[0] == splits[0]);

  CHECK_THROWS_AS(split_pages(pages, {0.5, 0.6}, 1), ValidationError);
  std::vector<PageTree> three(pages.begin(), pages.begin() + 3);
  CHECK_THROWS_AS(split_pages(three, {0.9, 0.1}, 1), ValidationError);
}

TEST_CASE("write_corpus lays out splits with a manifest") {
  TempDir dir("corpus");
  CorpusConfig config;
  config.pages = 20;
  config.seed = 41;
  config.ratios = {0.7, 0.15, 0.15};
  write_corpus(config, dir.path());

  namespace fs = std::filesystem;
  CHECK(fs::is_directory(dir.sub("train")));
  CHECK(fs::is_directory(dir.sub("val")));
  CHECK(fs::is_directory(dir.sub("test")));
  CHECK(fs::exists(dir.sub("manifest.json")));

  auto train = load_pages(dir.sub("train"));
  auto val = load_pages(dir.sub("val"));
  auto test = load_pages(dir.sub("test"));
  CHECK(train.size() == 14);
  CHECK(val.size() == 3);
  CHECK(test.size() == 3);
  for (const PageTree& page : train) CHECK(validate(page).empty());

  // written corpora are deterministic
  TempDir dir2("corpus_again");
  write_corpus(config, dir2.path());
  CHECK(hash_directory(dir.path()) == hash_directory(dir2.path()));
}

TEST_CASE("mean statistics stay within configured bounds") {
  CorpusConfig config;
  config.pages = 50;
  config.max_elements = 24;
  config.max_depth = 6;
  config.seed = 43;
  auto pages = generate_corpus(config);
  double mean_elements = 0.0;
  for (const PageTree& page : pages) mean_elements += page.size();
  mean_elements /= static_cast<double>(pages.size());
  CHECK(mean_elements > 4.0);
  CHECK(mean_elements <= 24.0);
}
