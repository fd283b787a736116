#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "testutil.hpp"
#include "webcolor/cli.hpp"
#include "webcolor/corpus.hpp"

using namespace webcolor;
using namespace webcolor::testutil;
namespace fs = std::filesystem;

namespace {

int cli(std::initializer_list<std::string> args) {
  return run_cli(std::vector<std::string>(args));
}

std::string slurp(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  REQUIRE(f.good());
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST_CASE("usage errors exit with code 1, data errors with 2") {
  CHECK(cli({"no-such-command"}) == 1);
  CHECK(cli({"train", "--model", "nar"}) == 1);  // missing required flags
  TempDir dir("cli_err");
  CHECK(cli({"render", "--pages", dir.sub("nowhere"), "--out",
             dir.sub("out")}) == 2);
}

TEST_CASE("full toy pipeline: corpus, train, generate, evaluate, render, audit") {
  TempDir dir("cli_pipe");
  std::string corpus = dir.sub("corpus");
  CHECK(cli({"gen-corpus", "--out", corpus, "--pages", "24", "--max-elements",
             "14", "--max-depth", "5", "--grammar", "tag_deterministic",
             "--seed", "3"}) == 0);
  CHECK(fs::exists(corpus + "/manifest.json"));

  std::string ckpt = dir.sub("nar.ckpt");
  CHECK(cli({"train", "--model", "nar", "--corpus", corpus, "--out", ckpt,
             "--iters", "3", "--batch", "4", "--preset", "toy", "--seed", "1",
             "--log-every", "0"}) == 0);
  CHECK(fs::exists(ckpt));

  std::string pred = dir.sub("pred");
  CHECK(cli({"generate", "--ckpt", ckpt, "--pages", corpus + "/test", "--out",
             pred, "--strategy", "greedy", "--seed", "9"}) == 0);
  auto pred_pages = load_pages(pred);
  auto gt_pages = load_pages(corpus + "/test");
  CHECK(pred_pages.size() == gt_pages.size());

  std::string report = dir.sub("report.json");
  CHECK(cli({"evaluate", "--pred-dir", pred, "--gt-dir", corpus + "/test",
             "--out", report, "--metrics", "accuracy,contrast", "--seed",
             "2"}) == 0);
  std::string json = slurp(report);
  CHECK(json.find("\"accuracy\"") != std::string::npos);
  CHECK(json.find("\"contrast\"") != std::string::npos);
  CHECK(json.find("\"fcd\"") == std::string::npos);  // not requested

  std::string pngs = dir.sub("pngs");
  CHECK(cli({"render", "--pages", pred, "--out", pngs}) == 0);
  CHECK(fs::exists(pngs + "/" + pred_pages[0].id + ".png"));

  std::string audit = dir.sub("audit.json");
  CHECK(cli({"audit", "--pages", pred, "--out", audit}) == 0);
  CHECK(slurp(audit).find("\"pct_pages\"") != std::string::npos);
}

TEST_CASE("stats subcommand fits, modes and samples") {
  TempDir dir("cli_stats");
  std::string corpus = dir.sub("corpus");
  REQUIRE(cli({"gen-corpus", "--out", corpus, "--pages", "16", "--seed",
               "7"}) == 0);

  std::string table = dir.sub("table.json");
  CHECK(cli({"stats", "--fit", "--corpus", corpus, "--out", table}) == 0);
  CHECK(fs::exists(table));

  std::string mode_out = dir.sub("mode");
  CHECK(cli({"stats", "--mode", "--table", table, "--pages", corpus + "/test",
             "--out", mode_out}) == 0);
  CHECK(!load_pages(mode_out).empty());

  std::string sample_out = dir.sub("sample");
  CHECK(cli({"stats", "--sample", "--table", table, "--pages",
             corpus + "/test", "--out", sample_out, "--seed", "5"}) == 0);
  CHECK(!load_pages(sample_out).empty());

  CHECK(cli({"stats", "--fit", "--mode", "--corpus", corpus, "--out",
             dir.sub("x.json")}) == 2);
}

TEST_CASE("generate with variations writes the selected count per page") {
  TempDir dir("cli_var");
  std::string corpus = dir.sub("corpus");
  REQUIRE(cli({"gen-corpus", "--out", corpus, "--pages", "12", "--max-elements",
               "10", "--seed", "11"}) == 0);
  std::string ckpt = dir.sub("cvae.ckpt");
  REQUIRE(cli({"train", "--model", "cvae", "--corpus", corpus, "--out", ckpt,
               "--iters", "2", "--batch", "4", "--preset", "toy", "--seed",
               "1", "--log-every", "0"}) == 0);

  std::string out = dir.sub("vars");
  CHECK(cli({"generate", "--ckpt", ckpt, "--pages", corpus + "/test", "--out",
             out, "--strategy", "prior", "--variations", "5", "--select", "3",
             "--seed", "13"}) == 0);
  auto gt_pages = load_pages(corpus + "/test");
  for (const PageTree& page : gt_pages) {
    int files = 0;
    for (int v = 0; v < 5; ++v)
      if (fs::exists(out + "/" + page.id + ".v" + std::to_string(v) + ".json"))
        ++files;
    CHECK(files == 3);
  }
}

TEST_CASE("WEBCOLOR_SEED overrides the seed flag") {
  TempDir dir("cli_env");
  std::string a = dir.sub("a");
  std::string b = dir.sub("b");
  std::string c = dir.sub("c");
  REQUIRE(cli({"gen-corpus", "--out", a, "--pages", "10", "--seed", "1"}) == 0);

  setenv("WEBCOLOR_SEED", "1", 1);
  // flag says 999 but the env pins 1: output must match corpus a
  REQUIRE(cli({"gen-corpus", "--out", b, "--pages", "10", "--seed", "999"}) == 0);
  unsetenv("WEBCOLOR_SEED");
  REQUIRE(cli({"gen-corpus", "--out", c, "--pages", "10", "--seed", "999"}) == 0);

  CHECK(hash_directory(a) == hash_directory(b));
  CHECK(hash_directory(a) != hash_directory(c));
}

TEST_CASE("gen-corpus and train are bit-deterministic across runs") {
  TempDir dir("cli_det");
  auto corpus_hash = [&](const std::string& name) {
    std::string out = dir.sub(name);
    REQUIRE(cli({"gen-corpus", "--out", out, "--pages", "10", "--seed",
                 "21"}) == 0);
    return hash_directory(out);
  };
  CHECK(corpus_hash("c1") == corpus_hash("c2"));

  auto train_hash = [&](const std::string& name) {
    std::string ckpt = dir.sub(name);
    REQUIRE(cli({"train", "--model", "nar", "--corpus", dir.sub("c1"),
                 "--out", ckpt, "--iters", "2", "--batch", "2", "--preset",
                 "toy", "--seed", "4", "--log-every", "0"}) == 0);
    return hash_file(ckpt);
  };
  CHECK(train_hash("m1.ckpt") == train_hash("m2.ckpt"));
}
