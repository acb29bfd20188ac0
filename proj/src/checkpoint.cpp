#include "lcnmt/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "json.hpp"
#include "lcnmt/error.hpp"

namespace lcnmt {

namespace {

using nlohmann::json;

constexpr char kMagic[4] = {'L', 'C', 'N', 'M'};

void put_u32(std::ostream& out, std::uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 4);
}

void put_u64(std::ostream& out, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 8);
}

void put_f64(std::ostream& out, double v) {
  put_u64(out, std::bit_cast<std::uint64_t>(v));
}

std::uint32_t get_u32(std::istream& in, const std::string& what) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4))
    throw DataError("checkpoint truncated reading " + what);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= std::uint32_t(b[i]) << (8 * i);
  return v;
}

std::uint64_t get_u64(std::istream& in, const std::string& what) {
  unsigned char b[8];
  if (!in.read(reinterpret_cast<char*>(b), 8))
    throw DataError("checkpoint truncated reading " + what);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= std::uint64_t(b[i]) << (8 * i);
  return v;
}

double get_f64(std::istream& in, const std::string& what) {
  return std::bit_cast<double>(get_u64(in, what));
}

json config_to_json(const ModelConfig& c) {
  return json{{"mode", mode_name(c.mode)},
              {"word_dim", c.word_dim},
              {"enc_hidden", c.enc_hidden},
              {"dec_hidden", c.dec_hidden},
              {"ctx_hidden", c.ctx_hidden},
              {"attn_hidden", c.attn_hidden},
              {"src_vocab", c.src_vocab},
              {"tgt_vocab", c.tgt_vocab},
              {"dropout_rate", c.dropout_rate}};
}

ModelConfig config_from_json(const json& j) {
  ModelConfig c;
  c.mode = mode_from_name(j.at("mode").get<std::string>());
  c.word_dim = j.at("word_dim").get<std::size_t>();
  c.enc_hidden = j.at("enc_hidden").get<std::size_t>();
  c.dec_hidden = j.at("dec_hidden").get<std::size_t>();
  c.ctx_hidden = j.at("ctx_hidden").get<std::size_t>();
  c.attn_hidden = j.at("attn_hidden").get<std::size_t>();
  c.src_vocab = j.at("src_vocab").get<std::size_t>();
  c.tgt_vocab = j.at("tgt_vocab").get<std::size_t>();
  c.dropout_rate = j.at("dropout_rate").get<real>();
  return c;
}

json vocab_to_json(const Vocabulary& v) {
  json arr = json::array();
  for (std::size_t i = 0; i < v.size(); ++i)
    arr.push_back(json::array({v.surface(TokenId(i)), v.count_of(TokenId(i))}));
  return arr;
}

Vocabulary vocab_from_json(const json& arr, const std::string& which) {
  if (!arr.is_array() || arr.size() < kReservedCount)
    throw DataError("checkpoint " + which + " vocabulary is malformed");
  Vocabulary v;
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const std::string surface = arr[i].at(0).get<std::string>();
    const std::uint64_t count = arr[i].at(1).get<std::uint64_t>();
    if (i < kReservedCount) {
      if (surface != reserved_surface(TokenId(i)))
        throw DataError("checkpoint " + which + " vocabulary: reserved slot " +
                        std::to_string(i) + " holds '" + surface + "'");
    } else {
      v.add(surface, count);
    }
  }
  return v;
}

}  // namespace

void save_checkpoint(const std::string& path, Checkpoint& ckpt) {
  ckpt.config.validate();

  json params_list = json::array();
  std::vector<Tensor*> order;
  ckpt.params.for_each([&](const std::string& name, Tensor& t) {
    params_list.push_back(json{{"name", name}, {"shape", t.shape}});
    order.push_back(&t);
  });

  json header;
  header["model_config"] = config_to_json(ckpt.config);
  header["run_config"] =
      ckpt.run_config_json.empty() ? json() : json::parse(ckpt.run_config_json);
  header["src_vocab"] = vocab_to_json(ckpt.src_vocab);
  header["tgt_vocab"] = vocab_to_json(ckpt.tgt_vocab);
  header["params"] = params_list;
  const std::string header_text = header.dump();

  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write checkpoint " + path);
  out.write(kMagic, 4);
  put_u32(out, kCheckpointVersion);
  put_u64(out, header_text.size());
  out.write(header_text.data(), static_cast<std::streamsize>(header_text.size()));
  for (Tensor* t : order)
    for (real v : t->values) put_f64(out, v);
  if (!out) throw DataError("write failure on checkpoint " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint " + path);

  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0)
    throw DataError(path + " is not a model checkpoint (bad magic)");
  const std::uint32_t version = get_u32(in, "version");
  if (version != kCheckpointVersion)
    throw DataError("checkpoint version " + std::to_string(version) +
                    " unsupported (expected " + std::to_string(kCheckpointVersion) + ")");
  const std::uint64_t header_len = get_u64(in, "header length");
  std::string header_text(header_len, '\0');
  if (!in.read(header_text.data(), static_cast<std::streamsize>(header_len)))
    throw DataError("checkpoint truncated reading header");

  json header;
  try {
    header = json::parse(header_text);
  } catch (const json::exception& e) {
    throw DataError(std::string("checkpoint header is not valid JSON: ") + e.what());
  }

  Checkpoint ckpt;
  try {
    ckpt.config = config_from_json(header.at("model_config"));
    const json& rc = header.at("run_config");
    ckpt.run_config_json = rc.is_null() ? "" : rc.dump();
    ckpt.src_vocab = vocab_from_json(header.at("src_vocab"), "source");
    ckpt.tgt_vocab = vocab_from_json(header.at("tgt_vocab"), "target");
  } catch (const json::exception& e) {
    throw DataError(std::string("checkpoint header incomplete: ") + e.what());
  }
  ckpt.config.validate();

  ckpt.params = ModelParameters::zeros(ckpt.config);
  std::vector<std::pair<std::string, Tensor*>> canonical;
  ckpt.params.for_each([&](const std::string& name, Tensor& t) {
    canonical.emplace_back(name, &t);
  });

  const json& listed = header.at("params");
  if (!listed.is_array() || listed.size() != canonical.size())
    throw DataError("checkpoint parameter list does not match the model layout");
  for (std::size_t i = 0; i < canonical.size(); ++i) {
    const std::string name = listed[i].at("name").get<std::string>();
    const auto shape = listed[i].at("shape").get<std::vector<std::size_t>>();
    if (name != canonical[i].first)
      throw DataError("checkpoint parameter " + std::to_string(i) + " is '" + name +
                      "', expected '" + canonical[i].first + "'");
    if (shape != canonical[i].second->shape)
      throw DataError("checkpoint parameter '" + name + "' has shape " +
                      shape_str(shape) + ", expected " +
                      shape_str(canonical[i].second->shape));
    for (real& v : canonical[i].second->values) v = get_f64(in, name);
  }
  char extra;
  if (in.read(&extra, 1))
    throw DataError("checkpoint has trailing bytes after the payload");
  return ckpt;
}

}  // namespace lcnmt
