#include "webcolor/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "json.hpp"
#include "webcolor/errors.hpp"
#include "webcolor/upsampler.hpp"

namespace webcolor {

namespace {

constexpr char kMagic[] = "WCKPT1\n";
constexpr std::size_t kMagicLen = 7;

void put_u64_le(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i)
    out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint64_t get_u64_le(const unsigned char* p) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
  return v;
}

void put_f64_le(std::string& out, double d) {
  put_u64_le(out, std::bit_cast<std::uint64_t>(d));
}

double get_f64_le(const unsigned char* p) {
  return std::bit_cast<double>(get_u64_le(p));
}

using Json = nlohmann::ordered_json;

Json config_to_json(const ModelConfig& c) {
  Json j;
  j["kind"] = c.kind;
  j["d_model"] = c.d_model;
  j["n_heads"] = c.n_heads;
  j["n_layers"] = c.n_layers;
  j["d_ffn"] = c.d_ffn;
  j["no_message_passing"] = c.no_message_passing;
  j["no_residual"] = c.no_residual;
  j["lambda"] = c.lambda;
  return j;
}

ModelConfig config_from_json(const Json& j) {
  ModelConfig c;
  c.kind = j.at("kind").get<std::string>();
  c.d_model = j.at("d_model").get<int>();
  c.n_heads = j.at("n_heads").get<int>();
  c.n_layers = j.at("n_layers").get<int>();
  c.d_ffn = j.at("d_ffn").get<int>();
  c.no_message_passing = j.at("no_message_passing").get<bool>();
  c.no_residual = j.at("no_residual").get<bool>();
  c.lambda = j.at("lambda").get<double>();
  return c;
}

}  // namespace

void save_checkpoint(const std::string& path, const ModelConfig& config,
                     std::uint64_t seed, long step,
                     std::span<Param* const> params) {
  Json header;
  header["format"] = "WCKPT1";
  header["config"] = config_to_json(config);
  header["seed"] = seed;
  header["step"] = step;
  Json plist = Json::array();
  for (const Param* p : params) {
    Json entry;
    entry["name"] = p->name;
    entry["shape"] = p->shape;
    plist.push_back(std::move(entry));
  }
  header["params"] = std::move(plist);
  std::string header_text = header.dump();

  std::string out;
  out.append(kMagic, kMagicLen);
  put_u64_le(out, header_text.size());
  out += header_text;
  for (const Param* p : params)
    for (double v : p->value) put_f64_le(out, v);

  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open '" + path + "' for writing");
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw IoError("failed writing '" + path + "'");
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open '" + path + "'");
  std::string bytes((std::istreambuf_iterator<char>(f)),
                    std::istreambuf_iterator<char>());
  if (bytes.size() < kMagicLen + 8 ||
      std::memcmp(bytes.data(), kMagic, kMagicLen) != 0)
    throw ParseError(path + ": not a WCKPT1 checkpoint");
  const auto* data = reinterpret_cast<const unsigned char*>(bytes.data());
  std::uint64_t header_len = get_u64_le(data + kMagicLen);
  std::size_t header_off = kMagicLen + 8;
  if (bytes.size() < header_off + header_len)
    throw ParseError(path + ": truncated header");

  Json header;
  try {
    header = Json::parse(bytes.substr(header_off, header_len));
  } catch (const Json::exception& e) {
    throw ParseError(path + ": bad header JSON: " + e.what());
  }

  Checkpoint ckpt;
  try {
    ckpt.config = config_from_json(header.at("config"));
    ckpt.seed = header.at("seed").get<std::uint64_t>();
    ckpt.step = header.at("step").get<long>();
    std::size_t off = header_off + header_len;
    for (const auto& entry : header.at("params")) {
      LoadedParam lp;
      lp.name = entry.at("name").get<std::string>();
      lp.shape = entry.at("shape").get<Shape>();
      std::size_t count = static_cast<std::size_t>(numel(lp.shape));
      if (bytes.size() < off + count * 8)
        throw ParseError(path + ": truncated blob for " + lp.name);
      lp.values.resize(count);
      for (std::size_t i = 0; i < count; ++i)
        lp.values[i] = get_f64_le(data + off + i * 8);
      off += count * 8;
      ckpt.params.push_back(std::move(lp));
    }
    if (off != bytes.size())
      throw ParseError(path + ": trailing bytes after parameter blobs");
  } catch (const Json::exception& e) {
    throw ParseError(path + ": bad header field: " + e.what());
  }
  return ckpt;
}

void restore_params(const Checkpoint& ckpt, std::span<Param* const> params) {
  if (ckpt.params.size() != params.size())
    throw ParseError("checkpoint has " + std::to_string(ckpt.params.size()) +
                     " params, model expects " + std::to_string(params.size()));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const LoadedParam& lp = ckpt.params[i];
    Param* p = params[i];
    if (lp.name != p->name)
      throw ParseError("checkpoint param '" + lp.name + "' where model has '" +
                       p->name + "'");
    if (lp.shape != p->shape)
      throw ParseError("checkpoint param '" + lp.name + "' shape " +
                       shape_str(lp.shape) + " does not match " +
                       shape_str(p->shape));
    p->value = lp.values;
    p->zero_grad();
  }
}

std::unique_ptr<CoreModel> load_core_model(const std::string& path) {
  Checkpoint ckpt = load_checkpoint(path);
  if (ckpt.config.kind == "upsampler")
    throw ContractError(path + ": upsampler checkpoint where a core model is expected");
  auto model = std::make_unique<CoreModel>(ckpt.config, ckpt.seed);
  auto params = model->params();
  restore_params(ckpt, params);
  return model;
}

std::unique_ptr<Upsampler> load_upsampler(const std::string& path) {
  Checkpoint ckpt = load_checkpoint(path);
  if (ckpt.config.kind != "upsampler")
    throw ContractError(path + ": core checkpoint where an upsampler is expected");
  auto model = std::make_unique<Upsampler>(ckpt.config, ckpt.seed);
  auto params = model->params();
  restore_params(ckpt, params);
  return model;
}

}  // namespace webcolor
