#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "webcolor/models.hpp"

namespace webcolor {

// Binary container: magic "WCKPT1\n", little-endian u64 header length, a
// JSON header (kind, architecture config, parameter names and shapes, rng
// seed, step count), then raw little-endian f64 blobs in header order.
void save_checkpoint(const std::string& path, const ModelConfig& config,
                     std::uint64_t seed, long step,
                     std::span<Param* const> params);

struct LoadedParam {
  std::string name;
  Shape shape;
  std::vector<double> values;
};

struct Checkpoint {
  ModelConfig config;
  std::uint64_t seed = 0;
  long step = 0;
  std::vector<LoadedParam> params;
};

Checkpoint load_checkpoint(const std::string& path);

// Copies loaded values into the model's parameters, matching by name.
// Throws ParseError on missing, extra, or shape-mismatched entries.
void restore_params(const Checkpoint& ckpt, std::span<Param* const> params);

// Convenience loaders: rebuild the module from the stored config and fill
// its parameters.
std::unique_ptr<CoreModel> load_core_model(const std::string& path);

class Upsampler;
std::unique_ptr<Upsampler> load_upsampler(const std::string& path);

}  // namespace webcolor
