#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <unistd.h>

#include "lcnmt/checkpoint.hpp"
#include "lcnmt/error.hpp"

using namespace lcnmt;

namespace {

struct TempDir {
  std::filesystem::path path;
  TempDir() {
    static int c = 0;
    path = std::filesystem::temp_directory_path() /
           ("lcnmt_ckpt_" + std::to_string(::getpid()) + "_" + std::to_string(c++));
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
};

Checkpoint make_checkpoint(ModelMode mode, unsigned seed) {
  Checkpoint ckpt;
  ckpt.config.mode = mode;
  ckpt.config.word_dim = 3;
  ckpt.config.enc_hidden = 4;
  ckpt.config.dec_hidden = 5;
  ckpt.config.ctx_hidden = 2;
  ckpt.config.attn_hidden = 3;
  ckpt.config.src_vocab = 8;
  ckpt.config.tgt_vocab = 9;
  Rng rng(seed);
  ckpt.params = ModelParameters::init(ckpt.config, rng);
  ckpt.src_vocab.add("maison", 4);
  ckpt.src_vocab.add("chat", 2);
  ckpt.tgt_vocab.add("cat", 2);
  ckpt.tgt_vocab.add("house", 4);
  ckpt.tgt_vocab.add("the", 9);
  ckpt.run_config_json = R"({"seed":7,"beam":5})";
  return ckpt;
}

std::string file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST_CASE("checkpoint round trip preserves everything") {
  for (ModelMode mode : {ModelMode::Nmt, ModelMode::LcNmt}) {
    CAPTURE(mode_name(mode));
    TempDir dir;
    Checkpoint ckpt = make_checkpoint(mode, 5);
    const std::string path = (dir.path / "model.bin").string();
    save_checkpoint(path, ckpt);

    Checkpoint back = load_checkpoint(path);
    CHECK(back.config.mode == ckpt.config.mode);
    CHECK(back.config.word_dim == ckpt.config.word_dim);
    CHECK(back.config.enc_hidden == ckpt.config.enc_hidden);
    CHECK(back.config.dec_hidden == ckpt.config.dec_hidden);
    CHECK(back.config.ctx_hidden == ckpt.config.ctx_hidden);
    CHECK(back.config.src_vocab == ckpt.config.src_vocab);
    CHECK(back.config.tgt_vocab == ckpt.config.tgt_vocab);

    CHECK(back.src_vocab.size() == ckpt.src_vocab.size());
    CHECK(back.src_vocab.surface(TokenId(kReservedCount)) == "maison");
    CHECK(back.src_vocab.count_of(TokenId(kReservedCount)) == 4);
    CHECK(back.tgt_vocab.size() == ckpt.tgt_vocab.size());
    CHECK(back.tgt_vocab.surface(TokenId(kReservedCount + 2)) == "the");

    // run config survives as JSON (key order may normalize)
    CHECK(back.run_config_json.find("\"seed\":7") != std::string::npos);
    CHECK(back.run_config_json.find("\"beam\":5") != std::string::npos);

    // payload is bit-exact
    std::vector<std::pair<std::string, const Tensor*>> before, after;
    ckpt.params.for_each([&](const std::string& n, Tensor& t) { before.emplace_back(n, &t); });
    back.params.for_each([&](const std::string& n, Tensor& t) { after.emplace_back(n, &t); });
    REQUIRE(before.size() == after.size());
    for (std::size_t i = 0; i < before.size(); ++i) {
      CHECK(before[i].first == after[i].first);
      REQUIRE(before[i].second->shape == after[i].second->shape);
      CHECK(before[i].second->values == after[i].second->values);
    }
  }
}

TEST_CASE("checkpoint bytes are deterministic") {
  TempDir dir;
  Checkpoint ckpt = make_checkpoint(ModelMode::LcNmt, 11);
  const std::string p1 = (dir.path / "a.bin").string();
  const std::string p2 = (dir.path / "b.bin").string();
  save_checkpoint(p1, ckpt);
  save_checkpoint(p2, ckpt);
  CHECK(file_bytes(p1) == file_bytes(p2));
}

TEST_CASE("checkpoint rejects corruption") {
  TempDir dir;
  Checkpoint ckpt = make_checkpoint(ModelMode::Nmt, 13);
  const std::string path = (dir.path / "model.bin").string();
  save_checkpoint(path, ckpt);

  SUBCASE("bad magic") {
    std::string bytes = file_bytes(path);
    bytes[0] = 'X';
    std::ofstream(path, std::ios::binary) << bytes;
    CHECK_THROWS_AS(load_checkpoint(path), DataError);
  }
  SUBCASE("unsupported version") {
    std::string bytes = file_bytes(path);
    bytes[4] = 99;
    std::ofstream(path, std::ios::binary) << bytes;
    CHECK_THROWS_AS(load_checkpoint(path), DataError);
  }
  SUBCASE("truncated payload") {
    std::string bytes = file_bytes(path);
    bytes.resize(bytes.size() - 17);
    std::ofstream(path, std::ios::binary) << bytes;
    CHECK_THROWS_AS(load_checkpoint(path), DataError);
  }
  SUBCASE("trailing garbage") {
    std::ofstream out(path, std::ios::binary | std::ios::app);
    out << "zzz";
    out.close();
    CHECK_THROWS_AS(load_checkpoint(path), DataError);
  }
  SUBCASE("missing file") {
    CHECK_THROWS_AS(load_checkpoint((dir.path / "absent.bin").string()), DataError);
  }
}
