#include "webcolor/train.hpp"

#include <cstdio>
#include <filesystem>

#include "webcolor/checkpoint.hpp"
#include "webcolor/corpus.hpp"
#include "webcolor/errors.hpp"

namespace webcolor {

ModelConfig model_config_of(const TrainOptions& options) {
  ModelConfig config;
  config.kind = options.model;
  config.d_model = options.d_model;
  config.n_heads = options.n_heads;
  config.n_layers = options.n_layers;
  config.d_ffn = options.d_ffn;
  config.no_message_passing = options.no_message_passing;
  config.no_residual = options.no_residual;
  config.lambda = options.lambda;
  return config;
}

namespace {

void log_progress(const TrainOptions& options, int iter, double loss) {
  if (options.log_every <= 0) return;
  if ((iter + 1) % options.log_every != 0 && iter + 1 != options.iters) return;
  std::printf("[%s] iter %d/%d loss %.6f\n", options.model.c_str(), iter + 1,
              options.iters, loss);
  std::fflush(stdout);
}

template <typename LossFn>
TrainHistory run_training(std::span<const PageTree> pages,
                          const TrainOptions& options,
                          std::span<Param* const> params, LossFn&& page_loss) {
  if (pages.empty()) throw ContractError("train: empty training set");
  if (options.batch < 1 || options.iters < 0)
    throw ContractError("train: batch and iters must be positive");
  AdamW optimizer(options.lr);
  Rng batch_rng = Rng(options.seed).fork(0xBA7C4);
  Rng noise_rng = Rng(options.seed).fork(0x9015E);
  TrainHistory history;
  for (int iter = 0; iter < options.iters; ++iter) {
    Tape tape;
    Tensor total;
    double recon_sum = 0.0, kl_sum = 0.0;
    for (int b = 0; b < options.batch; ++b) {
      const PageTree& page = pages[batch_rng.below(pages.size())];
      LossParts parts = page_loss(tape, page, noise_rng);
      recon_sum += parts.recon.item();
      if (parts.kl.defined()) kl_sum += parts.kl.item();
      total = b == 0 ? parts.total : add(total, parts.total);
    }
    Tensor loss = scale(total, 1.0 / options.batch);
    tape.backward(loss);
    optimizer.step(params);
    history.loss.push_back(loss.item());
    history.recon.push_back(recon_sum / options.batch);
    history.kl.push_back(kl_sum / options.batch);
    log_progress(options, iter, loss.item());
  }
  return history;
}

}  // namespace

TrainHistory train_core(CoreModel& model, std::span<const PageTree> pages,
                        const TrainOptions& options) {
  auto params = model.params();
  return run_training(pages, options, params,
                      [&](Tape& tape, const PageTree& page, Rng& noise) {
                        return model.loss(tape, page, noise);
                      });
}

TrainHistory train_upsampler(Upsampler& model, std::span<const PageTree> pages,
                             const TrainOptions& options) {
  auto params = model.params();
  return run_training(pages, options, params,
                      [&](Tape& tape, const PageTree& page, Rng&) {
                        Tensor loss = model.loss(tape, page);
                        return LossParts{loss, loss, Tensor()};
                      });
}

TrainHistory train_model(const TrainOptions& options) {
  std::string train_dir = options.corpus_dir + "/train";
  if (!std::filesystem::is_directory(train_dir)) train_dir = options.corpus_dir;
  auto pages = load_pages(train_dir);
  ModelConfig config = model_config_of(options);

  TrainHistory history;
  if (config.kind == "upsampler") {
    Upsampler model(config, options.seed);
    history = train_upsampler(model, pages, options);
    auto params = model.params();
    save_checkpoint(options.out_path, config, options.seed, options.iters,
                    params);
  } else {
    CoreModel model(config, options.seed);
    history = train_core(model, pages, options);
    auto params = model.params();
    save_checkpoint(options.out_path, config, options.seed, options.iters,
                    params);
  }
  return history;
}

std::vector<std::vector<QuantizedStyle>> generate_all(
    CoreModel& model, std::span<const PageTree> pages,
    const DecodeOptions& options, std::uint64_t seed) {
  std::vector<std::vector<QuantizedStyle>> out;
  out.reserve(pages.size());
  for (std::size_t i = 0; i < pages.size(); ++i)
    out.push_back(model.generate(pages[i], options, seed + i));
  return out;
}

PageTree with_styles(const PageTree& page,
                     const std::vector<QuantizedStyle>& styles) {
  std::vector<ColorStyle> full(styles.size());
  for (std::size_t i = 0; i < styles.size(); ++i) {
    full[i].background =
        reconstruct(styles[i].background, ChannelProportions{0, 0, 0, 0});
    if (styles[i].text)
      full[i].text = reconstruct(*styles[i].text, ChannelProportions{0, 0, 0, 0});
  }
  return with_styles(page, full);
}

PageTree with_styles(const PageTree& page,
                     const std::vector<ColorStyle>& styles) {
  if (styles.size() != page.elements.size())
    throw ContractError("with_styles: style count does not match page");
  PageTree out = page;
  for (std::size_t i = 0; i < styles.size(); ++i) {
    if (out.elements[i].content.has_text() != styles[i].text.has_value())
      throw ContractError("with_styles: text presence mismatch on element " +
                          std::to_string(i));
    out.elements[i].style = styles[i];
  }
  return out;
}

}  // namespace webcolor
