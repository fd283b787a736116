#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "webcolor/page.hpp"

namespace webcolor {

// Where full-resolution channel values sit inside their quantization bin.
enum class BinAnchor { kFloor, kCenter, kRandom };

struct CorpusConfig {
  int pages = 100;
  int max_elements = 40;   // hard cap 200
  int max_depth = 8;       // hard cap 30
  // tag_deterministic: colors are a fixed function of the element's tag.
  // parent_conditional: backgrounds depend on the parent's tag (text on
  // the own tag), which an element cannot resolve without hierarchy.
  // noisy: tag_deterministic with each color slot flipped to a uniform
  // random color with probability noise_p.
  std::string grammar = "tag_deterministic";
  double noise_p = 0.1;
  // Distinct colors the tag palettes draw from (0 = unconstrained). Small
  // pools make corpora easier to model at desk scale.
  int palette_size = 12;
  BinAnchor anchor = BinAnchor::kRandom;
  std::uint64_t seed = 0;
  std::vector<double> ratios = {0.8, 0.1, 0.1};
};

// Seeded, deterministic page generation; every page passes validate().
std::vector<PageTree> generate_corpus(const CorpusConfig& config);

// Seeded shuffle then contiguous partition; disjoint and exhaustive.
// Throws ValidationError when a positive ratio receives zero pages.
std::vector<std::vector<PageTree>> split_pages(std::vector<PageTree> pages,
                                               const std::vector<double>& ratios,
                                               std::uint64_t seed);

// Writes corpus/{train,val,test}/<page-id>.json plus manifest.json (config
// echo, counts, per-split content hashes, element/depth statistics).
void write_corpus(const CorpusConfig& config, const std::string& dir);

// Reads every *.json page in a directory, sorted by filename.
std::vector<PageTree> load_pages(const std::string& dir);

// FNV-1a over file bytes; used for manifest hashes and determinism checks.
std::uint64_t fnv1a(const std::string& bytes);
std::uint64_t hash_file(const std::string& path);
// Hash of (filename, content hash) pairs over every regular file under
// the directory, sorted by relative path.
std::uint64_t hash_directory(const std::string& dir);

BinAnchor parse_anchor(const std::string& name);

}  // namespace webcolor
