#include "webcolor/cli.hpp"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "CLI11.hpp"
#include "webcolor/baselines.hpp"
#include "webcolor/checkpoint.hpp"
#include "webcolor/corpus.hpp"
#include "webcolor/errors.hpp"
#include "webcolor/metrics.hpp"
#include "webcolor/renderer.hpp"
#include "webcolor/train.hpp"

namespace fs = std::filesystem;

namespace webcolor {

namespace {

// WEBCOLOR_SEED overrides --seed everywhere when set.
std::uint64_t effective_seed(std::uint64_t flag_seed) {
  const char* env = std::getenv("WEBCOLOR_SEED");
  if (!env || !*env) return flag_seed;
  char* end = nullptr;
  unsigned long long v = std::strtoull(env, &end, 10);
  if (end == env || *end != '\0')
    throw ContractError("WEBCOLOR_SEED is not an unsigned integer");
  return static_cast<std::uint64_t>(v);
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a,
                          std::uint64_t b) {
  Rng rng = Rng(base).fork(a).fork(b);
  return rng.next_u64();
}

std::vector<PageTree> load_pages_checked(const std::string& dir) {
  auto pages = load_pages(dir);
  if (pages.empty()) throw IoError("no page files in '" + dir + "'");
  return pages;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open '" + path + "' for writing");
  f << text;
  if (!f) throw IoError("failed writing '" + path + "'");
}

struct GenCorpusArgs {
  std::string out;
  CorpusConfig config;
  std::string anchor = "random";
  std::vector<double> ratios = {0.8, 0.1, 0.1};
};

struct TrainArgs {
  TrainOptions options;
  std::string preset;
};

struct GenerateArgs {
  std::string ckpt;
  std::string pages_dir;
  std::string out;
  std::string strategy = "greedy";
  double top_p = 0.9;
  int variations = 1;
  int select = 1;
  std::uint64_t seed = 0;
};

struct StatsArgs {
  bool fit = false;
  bool mode = false;
  bool sample = false;
  std::string corpus;
  std::string table;
  std::string pages_dir;
  std::string out;
  std::uint64_t seed = 0;
};

struct EvaluateArgs {
  std::string pred_dir;
  std::string gt_dir;
  std::string out;
  std::string metrics = "all";
  double fcd_scale = 1.0;
  std::uint64_t seed = 0;
};

int cmd_gen_corpus(GenCorpusArgs& args) {
  args.config.anchor = parse_anchor(args.anchor);
  args.config.ratios = args.ratios;
  args.config.seed = effective_seed(args.config.seed);
  write_corpus(args.config, args.out);
  std::printf("corpus written to %s\n", args.out.c_str());
  return 0;
}

int cmd_train(TrainArgs& args) {
  args.options.seed = effective_seed(args.options.seed);
  TrainHistory history = train_model(args.options);
  if (!history.loss.empty())
    std::printf("final loss %.6f\n", history.loss.back());
  std::printf("checkpoint written to %s\n", args.options.out_path.c_str());
  return 0;
}

DecodeOptions decode_options(const std::string& strategy, double top_p) {
  DecodeOptions options;
  options.top_p = top_p;
  if (strategy == "greedy") {
    options.strategy = DecodeOptions::Strategy::kGreedy;
  } else if (strategy == "top-p") {
    options.strategy = DecodeOptions::Strategy::kTopP;
  } else if (strategy == "prior") {
    options.strategy = DecodeOptions::Strategy::kPrior;
  } else {
    throw ContractError("unknown strategy '" + strategy + "'");
  }
  return options;
}

std::vector<ColorStyle> floor_styles(const std::vector<QuantizedStyle>& q) {
  std::vector<ColorStyle> out(q.size());
  for (std::size_t i = 0; i < q.size(); ++i) {
    out[i].background = reconstruct(q[i].background, {0, 0, 0, 0});
    if (q[i].text) out[i].text = reconstruct(*q[i].text, {0, 0, 0, 0});
  }
  return out;
}

int cmd_generate(GenerateArgs& args) {
  if (args.variations < 1 || args.select < 1 || args.select > args.variations)
    throw ContractError("generate: need variations >= select >= 1");
  args.seed = effective_seed(args.seed);
  auto model = load_core_model(args.ckpt);
  DecodeOptions options = decode_options(args.strategy, args.top_p);
  auto pages = load_pages_checked(args.pages_dir);
  fs::create_directories(args.out);
  for (std::size_t i = 0; i < pages.size(); ++i) {
    const PageTree& page = pages[i];
    std::vector<std::vector<ColorStyle>> variations;
    variations.reserve(static_cast<std::size_t>(args.variations));
    for (int k = 0; k < args.variations; ++k)
      variations.push_back(floor_styles(
          model->generate(page, options, derive_seed(args.seed, i, static_cast<std::uint64_t>(k)))));
    if (args.variations == 1) {
      PageTree styled = with_styles(page, variations[0]);
      write_page_file(styled, (fs::path(args.out) / (page.id + ".json")).string());
      continue;
    }
    auto picked = diverse_select(page, variations, args.select,
                                 derive_seed(args.seed, i, 0x5E1Ec7));
    for (std::size_t j = 0; j < picked.size(); ++j) {
      PageTree styled =
          with_styles(page, variations[static_cast<std::size_t>(picked[j])]);
      std::string name = page.id + ".v" + std::to_string(j) + ".json";
      write_page_file(styled, (fs::path(args.out) / name).string());
    }
  }
  std::printf("styled pages written to %s\n", args.out.c_str());
  return 0;
}

int cmd_upsample(const std::string& ckpt, const std::string& pages_dir,
                 const std::string& out) {
  auto model = load_upsampler(ckpt);
  auto pages = load_pages_checked(pages_dir);
  fs::create_directories(out);
  for (const PageTree& page : pages) {
    auto q = quantized_styles(page);
    PageTree styled = with_styles(page, model->apply(page, q));
    write_page_file(styled, (fs::path(out) / (page.id + ".json")).string());
  }
  std::printf("upsampled pages written to %s\n", out.c_str());
  return 0;
}

int cmd_stats(StatsArgs& args) {
  int chosen = (args.fit ? 1 : 0) + (args.mode ? 1 : 0) + (args.sample ? 1 : 0);
  if (chosen != 1)
    throw ContractError("stats: pass exactly one of --fit, --mode, --sample");
  args.seed = effective_seed(args.seed);
  if (args.fit) {
    std::string dir = args.corpus;
    if (fs::is_directory(args.corpus + "/train")) dir = args.corpus + "/train";
    auto pages = load_pages_checked(dir);
    FrequencyTable::fit(pages).save(args.out);
    std::printf("frequency table written to %s\n", args.out.c_str());
    return 0;
  }
  FrequencyTable table = FrequencyTable::load(args.table);
  auto pages = load_pages_checked(args.pages_dir);
  fs::create_directories(args.out);
  for (std::size_t i = 0; i < pages.size(); ++i) {
    const PageTree& page = pages[i];
    auto styles = args.mode
                      ? colorize_mode(table, page)
                      : colorize_sampling(table, page,
                                          derive_seed(args.seed, i, 0x57A75));
    write_page_file(with_styles(page, styles),
                    (fs::path(args.out) / (page.id + ".json")).string());
  }
  std::printf("styled pages written to %s\n", args.out.c_str());
  return 0;
}

int cmd_evaluate(EvaluateArgs& args) {
  args.seed = effective_seed(args.seed);
  auto pred = load_pages_checked(args.pred_dir);
  auto gt = load_pages_checked(args.gt_dir);
  std::map<std::string, const PageTree*> gt_by_id;
  for (const PageTree& page : gt) gt_by_id[page.id] = &page;
  std::vector<PageTree> gt_aligned;
  for (const PageTree& page : pred) {
    auto it = gt_by_id.find(page.id);
    if (it == gt_by_id.end())
      throw ValidationError("evaluate: no ground truth for page '" + page.id +
                            "'");
    gt_aligned.push_back(*it->second);
  }

  bool want_accuracy = false, want_macro_f = false, want_fcd = false,
       want_contrast = false;
  {
    std::stringstream ss(args.metrics);
    std::string item;
    while (std::getline(ss, item, ',')) {
      if (item == "all")
        want_accuracy = want_macro_f = want_fcd = want_contrast = true;
      else if (item == "accuracy")
        want_accuracy = true;
      else if (item == "macro_f")
        want_macro_f = true;
      else if (item == "fcd")
        want_fcd = true;
      else if (item == "contrast")
        want_contrast = true;
      else
        throw ContractError("evaluate: unknown metric '" + item + "'");
    }
  }

  MetricReport report;
  std::string out = "{\n";
  bool first = true;
  auto sep = [&first, &out] {
    if (!first) out += ",\n";
    first = false;
  };
  if (want_accuracy) {
    report.accuracy = accuracy(pred, gt_aligned);
    sep();
    out += "  \"accuracy\": {\"rgb\": " + format_number(report.accuracy.rgb) +
           ", \"alpha\": " + format_number(report.accuracy.alpha) + "}";
  }
  if (want_macro_f) {
    report.macro_f = macro_f(pred, gt_aligned);
    sep();
    out += "  \"macro_f\": {\"rgb\": " + format_number(report.macro_f.rgb) +
           ", \"alpha\": " + format_number(report.macro_f.alpha) + "}";
  }
  if (want_fcd) {
    report.fcd_bg = args.fcd_scale * fcd_protocol(pred, gt_aligned,
                                                  HistogramKind::kBackground,
                                                  args.seed);
    report.fcd_text = args.fcd_scale *
                      fcd_protocol(pred, gt_aligned, HistogramKind::kText,
                                   args.seed);
    report.fcd_pixel = args.fcd_scale *
                       fcd_protocol(pred, gt_aligned, HistogramKind::kPixel,
                                    args.seed);
    sep();
    out += "  \"fcd\": {\"bg\": " + format_number(report.fcd_bg) +
           ", \"text\": " + format_number(report.fcd_text) +
           ", \"pixel\": " + format_number(report.fcd_pixel) + "}";
  }
  if (want_contrast) {
    ContrastReport contrast = aggregate_contrast(pred);
    report.contrast_pct_pages = contrast.pages_violating_fraction;
    report.contrast_mean_elements = contrast.mean_violating_elements;
    sep();
    out += "  \"contrast\": {\"pct_pages\": " +
           format_number(report.contrast_pct_pages) + ", \"mean_elements\": " +
           format_number(report.contrast_mean_elements) + "}";
  }
  out += "\n}\n";
  write_text(args.out, out);
  std::printf("report written to %s\n", args.out.c_str());
  return 0;
}

int cmd_render(const std::string& pages_dir, const std::string& out) {
  auto pages = load_pages_checked(pages_dir);
  fs::create_directories(out);
  for (const PageTree& page : pages)
    write_png(render_page(page), (fs::path(out) / (page.id + ".png")).string());
  std::printf("previews written to %s\n", out.c_str());
  return 0;
}

int cmd_audit(const std::string& pages_dir, const std::string& out) {
  auto pages = load_pages_checked(pages_dir);
  ContrastReport report = aggregate_contrast(pages);
  std::string json = "{\n  \"pct_pages\": " +
                     format_number(report.pages_violating_fraction) +
                     ",\n  \"mean_elements\": " +
                     format_number(report.mean_violating_elements) +
                     ",\n  \"pages\": {";
  for (std::size_t i = 0; i < report.per_page.size(); ++i) {
    json += i ? ",\n    " : "\n    ";
    json += "\"" + report.per_page[i].first +
            "\": " + std::to_string(report.per_page[i].second);
  }
  json += report.per_page.empty() ? "}\n}\n" : "\n  }\n}\n";
  write_text(out, json);
  std::printf("contrast report written to %s\n", out.c_str());
  return 0;
}

void apply_preset(CLI::App* cmd, TrainArgs& args) {
  if (args.preset.empty()) return;
  if (args.preset != "toy")
    throw ContractError("unknown preset '" + args.preset + "'");
  if (cmd->count("--d-model") == 0) args.options.d_model = 32;
  if (cmd->count("--heads") == 0) args.options.n_heads = 2;
  if (cmd->count("--layers") == 0) args.options.n_layers = 2;
  if (cmd->count("--ffn") == 0) args.options.d_ffn = 64;
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
  CLI::App app{"Generative colorization of tree-structured web pages"};
  app.require_subcommand(1);

  GenCorpusArgs gen_args;
  auto* gen = app.add_subcommand("gen-corpus", "Generate a synthetic corpus");
  gen->add_option("--out", gen_args.out, "Output corpus directory")->required();
  gen->add_option("--pages", gen_args.config.pages, "Number of pages");
  gen->add_option("--max-elements", gen_args.config.max_elements,
                  "Per-page element cap (<= 200)");
  gen->add_option("--max-depth", gen_args.config.max_depth,
                  "Per-page depth cap (<= 30)");
  gen->add_option("--grammar", gen_args.config.grammar,
                  "tag_deterministic | parent_conditional | noisy");
  gen->add_option("--noise-p", gen_args.config.noise_p,
                  "Flip probability for the noisy grammar");
  gen->add_option("--anchor", gen_args.anchor,
                  "Where colors sit in their bins: floor | center | random");
  gen->add_option("--ratios", gen_args.ratios,
                  "Split ratios (2 or 3 values summing to 1)")
      ->delimiter(',');
  gen->add_option("--seed", gen_args.config.seed, "Corpus seed");

  TrainArgs train_args;
  auto* train = app.add_subcommand("train", "Train a model");
  train->add_option("--model", train_args.options.model,
                    "ar | nar | cvae | upsampler")->required();
  train->add_option("--corpus", train_args.options.corpus_dir,
                    "Corpus directory (uses its train/ split)")->required();
  train->add_option("--out", train_args.options.out_path, "Checkpoint path")
      ->required();
  train->add_option("--iters", train_args.options.iters, "Training iterations");
  train->add_option("--batch", train_args.options.batch, "Batch size");
  train->add_option("--lr", train_args.options.lr, "AdamW learning rate");
  train->add_option("--d-model", train_args.options.d_model, "Model width");
  train->add_option("--heads", train_args.options.n_heads, "Attention heads");
  train->add_option("--layers", train_args.options.n_layers, "Transformer layers");
  train->add_option("--ffn", train_args.options.d_ffn, "Feed-forward width");
  train->add_option("--lambda", train_args.options.lambda, "CVAE KL weight");
  train->add_flag("--no-mp", train_args.options.no_message_passing,
                  "Disable hierarchical message passing");
  train->add_flag("--no-residual", train_args.options.no_residual,
                  "Disable the content residual connection");
  train->add_option("--seed", train_args.options.seed, "Training seed");
  train->add_option("--preset", train_args.preset,
                    "toy: d 32, heads 2, layers 2, ffn 64");
  train->add_option("--log-every", train_args.options.log_every,
                    "Progress line interval (0 = quiet)");

  GenerateArgs generate_args;
  auto* generate = app.add_subcommand("generate", "Generate color styles");
  generate->add_option("--ckpt", generate_args.ckpt, "Core model checkpoint")
      ->required();
  generate->add_option("--pages", generate_args.pages_dir,
                       "Input pages (content source)")->required();
  generate->add_option("--out", generate_args.out, "Output directory")
      ->required();
  generate->add_option("--strategy", generate_args.strategy,
                       "greedy | top-p | prior");
  generate->add_option("--p", generate_args.top_p, "Nucleus mass for top-p");
  generate->add_option("--variations", generate_args.variations,
                       "Variations per page");
  generate->add_option("--select", generate_args.select,
                       "Diverse picks per page");
  generate->add_option("--seed", generate_args.seed, "Generation seed");

  std::string ups_ckpt, ups_pages, ups_out;
  auto* upsample = app.add_subcommand("upsample",
                                      "Upsample discrete styles to full RGBA");
  upsample->add_option("--ckpt", ups_ckpt, "Upsampler checkpoint")->required();
  upsample->add_option("--pages", ups_pages, "Styled pages")->required();
  upsample->add_option("--out", ups_out, "Output directory")->required();

  StatsArgs stats_args;
  auto* stats = app.add_subcommand("stats", "Statistics-based coloring");
  stats->add_flag("--fit", stats_args.fit, "Fit a frequency table");
  stats->add_flag("--mode", stats_args.mode, "Colorize by mode selection");
  stats->add_flag("--sample", stats_args.sample,
                  "Colorize by frequency-weighted sampling");
  stats->add_option("--corpus", stats_args.corpus, "Corpus for --fit");
  stats->add_option("--table", stats_args.table, "Frequency table JSON");
  stats->add_option("--pages", stats_args.pages_dir, "Pages to colorize");
  stats->add_option("--out", stats_args.out, "Output path")->required();
  stats->add_option("--seed", stats_args.seed, "Sampling seed");

  EvaluateArgs eval_args;
  auto* evaluate = app.add_subcommand("evaluate", "Score predictions");
  evaluate->add_option("--pred-dir", eval_args.pred_dir, "Predicted pages")
      ->required();
  evaluate->add_option("--gt-dir", eval_args.gt_dir, "Ground-truth pages")
      ->required();
  evaluate->add_option("--out", eval_args.out, "Report JSON path")->required();
  evaluate->add_option("--metrics", eval_args.metrics,
                       "all or a comma list of accuracy,macro_f,fcd,contrast");
  evaluate->add_option("--fcd-scale", eval_args.fcd_scale,
                       "Multiplier applied to reported FCD values");
  evaluate->add_option("--seed", eval_args.seed, "FCD halving seed");

  std::string render_pages, render_out;
  auto* render = app.add_subcommand("render", "Rasterize page previews");
  render->add_option("--pages", render_pages, "Styled pages")->required();
  render->add_option("--out", render_out, "Output directory")->required();

  std::string audit_pages, audit_out;
  auto* audit = app.add_subcommand("audit", "WCAG contrast audit");
  audit->add_option("--pages", audit_pages, "Styled pages")->required();
  audit->add_option("--out", audit_out, "Report JSON path")->required();

  std::vector<const char*> argv;
  argv.push_back("webcolor");
  for (const std::string& a : args) argv.push_back(a.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (gen->parsed()) return cmd_gen_corpus(gen_args);
    if (train->parsed()) {
      apply_preset(train, train_args);
      return cmd_train(train_args);
    }
    if (generate->parsed()) return cmd_generate(generate_args);
    if (upsample->parsed()) return cmd_upsample(ups_ckpt, ups_pages, ups_out);
    if (stats->parsed()) return cmd_stats(stats_args);
    if (evaluate->parsed()) return cmd_evaluate(eval_args);
    if (render->parsed()) return cmd_render(render_pages, render_out);
    if (audit->parsed()) return cmd_audit(audit_pages, audit_out);
  } catch (const NumericError& e) {
    std::fprintf(stderr, "numeric error: %s\n", e.what());
    return 3;
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 1;
}

int run_cli(int argc, const char* const* argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run_cli(args);
}

}  // namespace webcolor
