#include <cmath>
#include <map>

#include "doctest.h"
#include "testutil.hpp"
#include "webcolor/baselines.hpp"
#include "webcolor/errors.hpp"

using namespace webcolor;
using namespace webcolor::testutil;

namespace {

// One-element page with the given tag and optional text.
PageTree tagged_page(const std::string& id, const std::string& tag, bool text,
                     const RgbaColor& bg) {
  PageTree tree;
  tree.id = id;
  tree.elements.push_back(element(std::nullopt, 0, tag, text));
  ColorStyle style;
  style.background = bg;
  if (text) style.text = RgbaColor{0, 0, 0, 255};
  tree.elements[0].style = style;
  return tree;
}

// rgb_index 5 corresponds to bins (0,0,4): color (0,0,128).
RgbaColor color_of(int rgb_index, int alpha_index) {
  return reconstruct({rgb_index, alpha_index}, {0, 0, 0, 0});
}

}  // namespace

TEST_CASE("fit tallies quantized colors per (tag, property)") {
  std::vector<PageTree> pages;
  for (int i = 0; i < 3; ++i)
    pages.push_back(tagged_page("b" + std::to_string(i), "button", false,
                                color_of(5, 8)));
  pages.push_back(tagged_page("b3", "button", false, color_of(9, 8)));
  FrequencyTable table = FrequencyTable::fit(pages);

  const auto& counts = table.counts("button", StyleProperty::kBackground);
  CHECK(counts.at({5, 8}) == 3);
  CHECK(counts.at({9, 8}) == 1);
  CHECK(table.counts("button", StyleProperty::kText).empty());

  // global equals the sum over tags by construction
  CHECK(table.global(StyleProperty::kBackground).at({5, 8}) == 3);

  // unstyled page -> error naming the page
  std::vector<PageTree> bad{small_page("unstyled-page")};
  try {
    FrequencyTable::fit(bad);
    FAIL("expected ContractError");
  } catch (const ContractError& e) {
    CHECK(std::string(e.what()).find("unstyled-page") != std::string::npos);
  }
}

TEST_CASE("empty corpus produces an empty table") {
  FrequencyTable table = FrequencyTable::fit({});
  CHECK(table.global(StyleProperty::kBackground).empty());
  PageTree page = tagged_page("x", "div", false, color_of(1, 8));
  CHECK_THROWS_AS(colorize_mode(table, page), ContractError);
}

TEST_CASE("mode picks the count-maximal color with smallest-index ties") {
  std::vector<PageTree> pages;
  pages.push_back(tagged_page("a", "button", false, color_of(5, 8)));
  pages.push_back(tagged_page("b", "button", false, color_of(5, 8)));
  pages.push_back(tagged_page("c", "button", false, color_of(9, 8)));
  FrequencyTable table = FrequencyTable::fit(pages);
  CHECK(table.mode("button", StyleProperty::kBackground) ==
        QuantizedColor{5, 8});

  // tie: equal counts -> smaller (rgb, alpha)
  std::vector<PageTree> tie;
  tie.push_back(tagged_page("a", "a", false, color_of(200, 3)));
  tie.push_back(tagged_page("b", "a", false, color_of(7, 5)));
  FrequencyTable tie_table = FrequencyTable::fit(tie);
  CHECK(tie_table.mode("a", StyleProperty::kBackground) ==
        QuantizedColor{7, 5});
}

TEST_CASE("mode falls back to the global table for unseen tags") {
  std::vector<PageTree> pages;
  pages.push_back(tagged_page("a", "button", false, color_of(5, 8)));
  pages.push_back(tagged_page("b", "button", false, color_of(5, 8)));
  pages.push_back(tagged_page("c", "div", false, color_of(9, 8)));
  FrequencyTable table = FrequencyTable::fit(pages);

  PageTree video = tagged_page("v", "video", false, color_of(1, 1));
  auto styles = colorize_mode(table, video);
  CHECK(styles[0].background == QuantizedColor{5, 8});  // global mode

  // deterministic across calls
  CHECK(colorize_mode(table, video) == colorize_mode(table, video));
}

TEST_CASE("colorize_mode assigns text colors only to text elements") {
  std::vector<PageTree> pages;
  pages.push_back(tagged_page("a", "span", true, color_of(5, 8)));
  FrequencyTable table = FrequencyTable::fit(pages);
  PageTree page;
  page.id = "mixed";
  page.elements.push_back(element(std::nullopt, 0, "html", false));
  page.elements.push_back(element(0, 0, "span", true));
  page.elements[0].style = ColorStyle{std::nullopt, color_of(1, 8)};
  page.elements[1].style = ColorStyle{RgbaColor{0, 0, 0, 255}, color_of(1, 8)};
  auto styles = colorize_mode(table, page);
  CHECK(!styles[0].text.has_value());
  CHECK(styles[1].text.has_value());
}

TEST_CASE("sampling reuses one draw per (tag, property) pair on a page") {
  std::vector<PageTree> train;
  for (int i = 0; i < 50; ++i) {
    train.push_back(tagged_page("p" + std::to_string(i), "a", true,
                                color_of(1 + (i % 30), 8)));
  }
  FrequencyTable table = FrequencyTable::fit(train);

  PageTree page;
  page.id = "two-links";
  page.elements.push_back(element(std::nullopt, 0, "html", false));
  page.elements.push_back(element(0, 0, "a", true));
  page.elements.push_back(element(0, 1, "a", true));
  page.elements[0].style = ColorStyle{std::nullopt, color_of(1, 8)};
  for (int i = 1; i < 3; ++i)
    page.elements[static_cast<std::size_t>(i)].style =
        ColorStyle{RgbaColor{0, 0, 0, 255}, color_of(1, 8)};

  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    auto styles = colorize_sampling(table, page, seed);
    CHECK(styles[1].background == styles[2].background);
    CHECK(*styles[1].text == *styles[2].text);
  }
  // fixed seed deterministic
  CHECK(colorize_sampling(table, page, 5) == colorize_sampling(table, page, 5));
}

TEST_CASE("single-entry tables sample that color with probability 1") {
  std::vector<PageTree> train{tagged_page("only", "div", false, color_of(77, 4))};
  FrequencyTable table = FrequencyTable::fit(train);
  PageTree page = tagged_page("q", "div", false, color_of(1, 1));
  for (std::uint64_t seed = 0; seed < 20; ++seed)
    CHECK(colorize_sampling(table, page, seed)[0].background ==
          QuantizedColor{77, 4});
}

TEST_CASE("empirical sampling frequencies match table proportions within 3 sigma") {
  // counts 7:3 over two colors
  std::vector<PageTree> train;
  for (int i = 0; i < 7; ++i)
    train.push_back(tagged_page("a" + std::to_string(i), "div", false,
                                color_of(10, 8)));
  for (int i = 0; i < 3; ++i)
    train.push_back(tagged_page("b" + std::to_string(i), "div", false,
                                color_of(20, 8)));
  FrequencyTable table = FrequencyTable::fit(train);
  PageTree page = tagged_page("q", "div", false, color_of(1, 1));

  const int draws = 10000;
  int hits = 0;
  for (int seed = 0; seed < draws; ++seed) {
    auto styles = colorize_sampling(table, page, static_cast<std::uint64_t>(seed));
    if (styles[0].background == QuantizedColor{10, 8}) ++hits;
  }
  double freq = static_cast<double>(hits) / draws;
  double sigma = std::sqrt(0.7 * 0.3 / draws);
  CHECK(std::abs(freq - 0.7) <= 3.0 * sigma);
}

TEST_CASE("table JSON round trips canonically") {
  std::vector<PageTree> pages;
  pages.push_back(tagged_page("a", "button", true, color_of(5, 8)));
  pages.push_back(tagged_page("b", "div", false, color_of(9, 2)));
  FrequencyTable table = FrequencyTable::fit(pages);
  std::string json = table.to_json();
  FrequencyTable back = FrequencyTable::from_json(json);
  CHECK(back.to_json() == json);
  CHECK(back.counts("button", StyleProperty::kBackground).at({5, 8}) == 1);
  CHECK(back.global(StyleProperty::kBackground).at({9, 2}) == 1);

  TempDir dir("freq_table");
  table.save(dir.sub("table.json"));
  CHECK(FrequencyTable::load(dir.sub("table.json")).to_json() == json);
  CHECK_THROWS_AS(FrequencyTable::from_json("{"), ParseError);
  CHECK_THROWS_AS(FrequencyTable::from_json("{\"tags\": 3}"), ParseError);
}

TEST_CASE("mode output depends only on tags and text presence") {
  std::vector<PageTree> train;
  train.push_back(tagged_page("a", "span", true, color_of(42, 8)));
  FrequencyTable table = FrequencyTable::fit(train);

  PageTree page1 = tagged_page("x", "span", true, color_of(1, 1));
  PageTree page2 = tagged_page("y", "span", true, color_of(400, 3));
  page2.elements[0].content.text_feats =
      text_features_from_string("TOTALLY DIFFERENT $5 text", 2, true);
  CHECK(colorize_mode(table, page1) == colorize_mode(table, page2));
}
