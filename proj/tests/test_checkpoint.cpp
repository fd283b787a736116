#include <fstream>

#include "doctest.h"
#include "testutil.hpp"
#include "webcolor/checkpoint.hpp"
#include "webcolor/errors.hpp"
#include "webcolor/upsampler.hpp"

using namespace webcolor;
using namespace webcolor::testutil;

namespace {

ModelConfig toy_config(const std::string& kind) {
  ModelConfig config;
  config.kind = kind;
  config.d_model = 8;
  config.n_heads = 2;
  config.n_layers = 1;
  config.d_ffn = 16;
  config.lambda = 0.25;
  return config;
}

std::string read_bytes(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  REQUIRE(f.good());
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST_CASE("checkpoint round trip restores parameters bit-exactly") {
  TempDir dir("ckpt");
  CoreModel model(toy_config("cvae"), 7);
  auto params = model.params();
  std::string path = dir.sub("model.ckpt");
  save_checkpoint(path, model.config(), 7, 123, params);

  std::string bytes = read_bytes(path);
  CHECK(bytes.substr(0, 7) == "WCKPT1\n");

  Checkpoint ckpt = load_checkpoint(path);
  CHECK(ckpt.config.kind == "cvae");
  CHECK(ckpt.config.lambda == 0.25);
  CHECK(ckpt.seed == 7);
  CHECK(ckpt.step == 123);
  REQUIRE(ckpt.params.size() == params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    CHECK(ckpt.params[i].name == params[i]->name);
    CHECK(ckpt.params[i].values == params[i]->value);
  }

  // load_core_model rebuilds an identical model (different init seed would
  // otherwise change every value)
  auto restored = load_core_model(path);
  auto restored_params = restored->params();
  for (std::size_t i = 0; i < params.size(); ++i)
    CHECK(restored_params[i]->value == params[i]->value);

  // saving the restored model reproduces the file bytes
  std::string path2 = dir.sub("model2.ckpt");
  save_checkpoint(path2, restored->config(), 7, 123, restored_params);
  CHECK(read_bytes(path2) == bytes);
}

TEST_CASE("upsampler checkpoints round trip and kind is enforced") {
  TempDir dir("ckpt_ups");
  Upsampler model(toy_config("upsampler"), 9);
  auto params = model.params();
  std::string path = dir.sub("ups.ckpt");
  save_checkpoint(path, model.config(), 9, 10, params);
  auto restored = load_upsampler(path);
  auto restored_params = restored->params();
  for (std::size_t i = 0; i < params.size(); ++i)
    CHECK(restored_params[i]->value == params[i]->value);

  CHECK_THROWS_AS(load_core_model(path), ContractError);

  CoreModel nar(toy_config("nar"), 1);
  auto nar_params = nar.params();
  std::string nar_path = dir.sub("nar.ckpt");
  save_checkpoint(nar_path, nar.config(), 1, 0, nar_params);
  CHECK_THROWS_AS(load_upsampler(nar_path), ContractError);
}

TEST_CASE("corrupted checkpoints fail with parse errors") {
  TempDir dir("ckpt_bad");
  std::string path = dir.sub("bad.ckpt");
  {
    std::ofstream f(path, std::ios::binary);
    f << "NOTACKPT";
  }
  CHECK_THROWS_AS(load_checkpoint(path), ParseError);

  CoreModel model(toy_config("nar"), 3);
  auto params = model.params();
  std::string good = dir.sub("good.ckpt");
  save_checkpoint(good, model.config(), 3, 1, params);
  std::string bytes = read_bytes(good);
  {
    std::ofstream f(dir.sub("trunc.ckpt"), std::ios::binary);
    f.write(bytes.data(), static_cast<std::streamsize>(bytes.size() / 2));
  }
  CHECK_THROWS_AS(load_checkpoint(dir.sub("trunc.ckpt")), ParseError);
  CHECK_THROWS_AS(load_checkpoint(dir.sub("missing.ckpt")), IoError);
}
