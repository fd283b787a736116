#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "webcolor/models.hpp"
#include "webcolor/upsampler.hpp"

namespace webcolor {

struct TrainOptions {
  std::string model = "nar";  // ar | nar | cvae | upsampler
  std::string corpus_dir;     // expects <dir>/train/*.json
  std::string out_path;       // checkpoint file
  int iters = 500;
  int batch = 32;
  double lr = 1e-4;
  int d_model = 256;
  int n_heads = 8;
  int n_layers = 4;
  int d_ffn = 512;
  bool no_message_passing = false;
  bool no_residual = false;
  double lambda = 0.1;
  std::uint64_t seed = 0;
  int log_every = 50;  // 0 silences progress lines
};

// Per-iteration batch means; recon/kl only meaningful for the CVAE.
struct TrainHistory {
  std::vector<double> loss;
  std::vector<double> recon;
  std::vector<double> kl;
};

ModelConfig model_config_of(const TrainOptions& options);

// Seeded AdamW training on pages sampled with replacement. Batches build
// one tape; the loss is the batch mean.
TrainHistory train_core(CoreModel& model, std::span<const PageTree> pages,
                        const TrainOptions& options);
TrainHistory train_upsampler(Upsampler& model, std::span<const PageTree> pages,
                             const TrainOptions& options);

// Loads <corpus>/train, builds the model, trains, writes the checkpoint.
TrainHistory train_model(const TrainOptions& options);

// Greedy (NAR/AR) accuracy-style evaluation helper: generated quantized
// styles for every page.
std::vector<std::vector<QuantizedStyle>> generate_all(
    CoreModel& model, std::span<const PageTree> pages,
    const DecodeOptions& options, std::uint64_t seed);

// Styled copies of pages: stored styles replaced by the given quantized
// styles materialized at bin floors (full resolution comes from the
// upsampler).
PageTree with_styles(const PageTree& page,
                     const std::vector<QuantizedStyle>& styles);
PageTree with_styles(const PageTree& page,
                     const std::vector<ColorStyle>& styles);

}  // namespace webcolor
