#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <unistd.h>

#include "lcnmt/data.hpp"
#include "lcnmt/error.hpp"

using namespace lcnmt;

namespace {

struct TempDir {
  std::filesystem::path path;
  TempDir() {
    path = std::filesystem::temp_directory_path() /
           ("lcnmt_test_" + std::to_string(::getpid()) + "_" +
            std::to_string(counter()++));
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
  static int& counter() {
    static int c = 0;
    return c;
  }
  std::string file(const std::string& name, const std::string& content) const {
    auto p = path / name;
    std::ofstream out(p);
    out << content;
    return p.string();
  }
};

}  // namespace

TEST_CASE("vocabulary reserved slots and round trip") {
  Vocabulary v;
  CHECK(v.size() == kReservedCount);
  CHECK(v.surface(PAD) == "<pad>");
  CHECK(v.surface(BOS) == "<s>");
  CHECK(v.surface(EOS) == "</s>");
  CHECK(v.surface(UNK) == "<unk>");
  CHECK(v.surface(REPLACE_ID) == "REPLACE");
  CHECK(v.surface(EMPTY_CTX) == "<ectx>");

  v.add("hello", 3);
  v.add("world", 2);
  std::vector<std::string> sent = {"hello", "world", "hello"};
  auto ids = v.encode(sent);
  REQUIRE(ids.size() == 4);
  CHECK(ids.back() == EOS);
  CHECK(v.decode(ids) == sent);

  auto with_unk = v.encode({"hello", "mars"});
  CHECK(with_unk[1] == UNK);
  CHECK(v.decode(with_unk) == std::vector<std::string>{"hello", "<unk>"});

  CHECK_THROWS_AS(v.surface(TokenId(v.size())), VocabError);
}

TEST_CASE("build_vocab") {
  SUBCASE("single token corpus") {
    Vocabulary v = build_vocab({{"a"}}, 100);
    CHECK(v.size() == kReservedCount + 1);
    CHECK(v.contains("a"));
  }
  SUBCASE("max_size below the reserved count") {
    CHECK_THROWS_AS(build_vocab({{"a"}}, kReservedCount - 1), ContractError);
  }
  SUBCASE("frequency then lexicographic order, against a sort oracle") {
    std::vector<std::vector<std::string>> corpus = {
        {"pear", "apple", "plum", "apple"},
        {"plum", "apple", "pear", "fig"},
        {"kiwi", "plum"}};
    // oracle: count with a map, sort by (count desc, token asc)
    std::map<std::string, int> freq;
    for (const auto& s : corpus)
      for (const auto& t : s) ++freq[t];
    std::vector<std::pair<std::string, int>> expect(freq.begin(), freq.end());
    std::sort(expect.begin(), expect.end(), [](const auto& a, const auto& b) {
      return a.second != b.second ? a.second > b.second : a.first < b.first;
    });

    Vocabulary v = build_vocab(corpus, 100);
    REQUIRE(v.size() == kReservedCount + expect.size());
    for (std::size_t i = 0; i < expect.size(); ++i)
      CHECK(v.surface(TokenId(kReservedCount + i)) == expect[i].first);
  }
  SUBCASE("size cap and min_count") {
    std::vector<std::vector<std::string>> corpus = {
        {"a", "a", "a", "b", "b", "c"}};
    Vocabulary capped = build_vocab(corpus, kReservedCount + 2);
    CHECK(capped.size() == kReservedCount + 2);
    CHECK(capped.contains("a"));
    CHECK(capped.contains("b"));
    CHECK_FALSE(capped.contains("c"));
    CHECK(capped.id_of("c") == UNK);

    Vocabulary cut = build_vocab(corpus, 100, 2);
    CHECK(cut.contains("b"));
    CHECK_FALSE(cut.contains("c"));
  }
}

TEST_CASE("load_parallel") {
  TempDir dir;
  SUBCASE("aligned files, no boundaries, single document with a note") {
    auto src = dir.file("a.src", "x y\nz\nw w w\n");
    auto tgt = dir.file("a.tgt", "p q\nr\ns s s\n");
    std::ostringstream log;
    auto docs = load_parallel(src, tgt, std::nullopt, &log);
    REQUIRE(docs.size() == 1);
    CHECK(docs[0].pairs.size() == 3);
    CHECK(docs[0].pairs[0].source == std::vector<std::string>{"x", "y"});
    CHECK(docs[0].pairs[2].target == std::vector<std::string>{"s", "s", "s"});
    CHECK(log.str().find("single document") != std::string::npos);
  }
  SUBCASE("blank line splits documents") {
    auto src = dir.file("b.src", "a b\nc\n\nd\n");
    auto tgt = dir.file("b.tgt", "A B\nC\n\nD\n");
    auto docs = load_parallel(src, tgt, std::nullopt, nullptr);
    REQUIRE(docs.size() == 2);
    CHECK(docs[0].pairs.size() == 2);
    CHECK(docs[1].pairs.size() == 1);
  }
  SUBCASE("line count mismatch") {
    auto src = dir.file("c.src", "a\nb\n");
    auto tgt = dir.file("c.tgt", "A\n");
    CHECK_THROWS_AS(load_parallel(src, tgt, std::nullopt, nullptr), DataError);
  }
  SUBCASE("one-sided blank reports the line number") {
    auto src = dir.file("d.src", "a\n\nb\n");
    auto tgt = dir.file("d.tgt", "A\nB\nC\n");
    try {
      load_parallel(src, tgt, std::nullopt, nullptr);
      FAIL("expected DataError");
    } catch (const DataError& e) {
      CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    }
  }
  SUBCASE("sidecar boundaries") {
    auto src = dir.file("e.src", "a\nb\nc\nd\n");
    auto tgt = dir.file("e.tgt", "A\nB\nC\nD\n");
    auto bnd = dir.file("e.bnd", "3\n");
    auto docs = load_parallel(src, tgt, bnd, nullptr);
    REQUIRE(docs.size() == 2);
    CHECK(docs[0].pairs.size() == 2);
    CHECK(docs[1].pairs.size() == 2);
    CHECK(docs[1].pairs[0].source == std::vector<std::string>{"c"});

    auto bad = dir.file("e.bad", "zero\n");
    CHECK_THROWS_AS(load_parallel(src, tgt, bad, nullptr), DataError);
  }
  SUBCASE("missing file") {
    auto src = dir.file("f.src", "a\n");
    CHECK_THROWS_AS(load_parallel(src, (dir.path / "nope.tgt").string(), std::nullopt, nullptr),
                    DataError);
  }
}

TEST_CASE("load_source_documents") {
  TempDir dir;
  SUBCASE("blank line splits, targets stay empty") {
    auto src = dir.file("g.src", "a b\nc\n\nd e\n");
    auto docs = load_source_documents(src, std::nullopt, nullptr);
    REQUIRE(docs.size() == 2);
    CHECK(docs[0].pairs.size() == 2);
    CHECK(docs[1].pairs[0].source == std::vector<std::string>{"d", "e"});
    for (const auto& doc : docs)
      for (const auto& pair : doc.pairs) CHECK(pair.target.empty());
  }
  SUBCASE("sidecar boundaries and single-document note") {
    auto src = dir.file("h.src", "a\nb\nc\n");
    auto bnd = dir.file("h.bnd", "3\n");
    auto docs = load_source_documents(src, bnd, nullptr);
    REQUIRE(docs.size() == 2);
    CHECK(docs[1].pairs.size() == 1);

    std::ostringstream log;
    auto one = load_source_documents(src, std::nullopt, &log);
    CHECK(one.size() == 1);
    CHECK(log.str().find("single document") != std::string::npos);
  }
  SUBCASE("missing file") {
    CHECK_THROWS_AS(load_source_documents((dir.path / "nope.src").string(), std::nullopt, nullptr),
                    DataError);
  }
}

TEST_CASE("attach_context") {
  Vocabulary v;
  v.add("a");
  v.add("b");
  v.add("c");

  SUBCASE("single sentence document gets the empty context") {
    Document doc;
    doc.pairs.push_back({{"a"}, {"b"}});
    auto exs = attach_context(doc, v, v);
    REQUIRE(exs.size() == 1);
    CHECK(exs[0].context == std::vector<TokenId>{EMPTY_CTX});
    CHECK(exs[0].source == std::vector<TokenId>{v.id_of("a"), EOS});
    CHECK(exs[0].target == std::vector<TokenId>{v.id_of("b"), EOS});
  }
  SUBCASE("three sentences chain their sources") {
    Document doc;
    doc.pairs.push_back({{"a"}, {"a"}});
    doc.pairs.push_back({{"b"}, {"b"}});
    doc.pairs.push_back({{"c"}, {"c"}});
    auto exs = attach_context(doc, v, v);
    REQUIRE(exs.size() == 3);
    CHECK(exs[0].context == std::vector<TokenId>{EMPTY_CTX});
    CHECK(exs[1].context == std::vector<TokenId>{v.id_of("a"), EOS});
    CHECK(exs[2].context == std::vector<TokenId>{v.id_of("b"), EOS});
  }
  SUBCASE("no linkage across document boundaries") {
    Document d1, d2;
    d1.pairs.push_back({{"a"}, {"a"}});
    d1.pairs.push_back({{"b"}, {"b"}});
    d2.pairs.push_back({{"c"}, {"c"}});
    auto exs = attach_context({d1, d2}, v, v);
    REQUIRE(exs.size() == 3);
    // first sentence of the second document must not see "b"
    CHECK(exs[2].context == std::vector<TokenId>{EMPTY_CTX});
  }
}

TEST_CASE("make_batches") {
  Vocabulary v;
  for (char c = 'a'; c <= 'f'; ++c) v.add(std::string(1, c));
  std::vector<ContextualExample> exs;
  // varying source lengths 1..6
  for (std::size_t n = 1; n <= 6; ++n) {
    ContextualExample ex;
    ex.context = {EMPTY_CTX};
    for (std::size_t i = 0; i < n; ++i) ex.source.push_back(TokenId(kReservedCount + i % 6));
    ex.source.push_back(EOS);
    ex.target = ex.source;
    exs.push_back(ex);
  }

  SUBCASE("batch size one has no source padding") {
    auto batches = make_batches(exs, 1, true, 5);
    REQUIRE(batches.size() == exs.size());
    for (const auto& b : batches) {
      CHECK(b.size == 1);
      CHECK(b.src_width == b.src_len[0]);
      for (std::size_t k = 0; k < b.src_width; ++k) CHECK(b.src_mask[k] == 1);
    }
  }
  SUBCASE("multiset preserved, masks exact, padding is PAD") {
    auto batches = make_batches(exs, 4, true, 11);
    std::multiset<std::vector<TokenId>> seen, want;
    for (const auto& ex : exs) want.insert(ex.source);
    for (const auto& b : batches)
      for (std::size_t i = 0; i < b.size; ++i) {
        seen.insert(b.src_row(i));
        for (std::size_t k = 0; k < b.src_width; ++k) {
          const bool real_tok = k < b.src_len[i];
          CHECK(bool(b.src_mask[i * b.src_width + k]) == real_tok);
          if (!real_tok) CHECK(b.src_ids[i * b.src_width + k] == PAD);
        }
      }
    CHECK(seen == want);
  }
  SUBCASE("same seed reproduces the batch sequence") {
    auto b1 = make_batches(exs, 2, true, 99);
    auto b2 = make_batches(exs, 2, true, 99);
    REQUIRE(b1.size() == b2.size());
    for (std::size_t i = 0; i < b1.size(); ++i) {
      CHECK(b1[i].src_ids == b2[i].src_ids);
      CHECK(b1[i].tgt_ids == b2[i].tgt_ids);
    }
  }
  SUBCASE("bucketing groups similar lengths") {
    auto batches = make_batches(exs, 2, true, 1);
    for (const auto& b : batches) {
      REQUIRE(b.size == 2);
      CHECK(b.src_len[1] - b.src_len[0] <= 1);
    }
  }
  CHECK_THROWS_AS(make_batches(exs, 0, true, 1), ContractError);
}

TEST_CASE("generate_synthetic copy") {
  auto docs = generate_synthetic(SyntheticTask::Copy, 10, 12, 3);
  REQUIRE(docs.size() == 10);
  for (const auto& d : docs) {
    REQUIRE(d.pairs.size() == 1);
    CHECK(d.pairs[0].target == d.pairs[0].source);
    CHECK(d.pairs[0].source.size() >= 3);
    CHECK(d.pairs[0].source.size() <= 8);
  }
  auto again = generate_synthetic(SyntheticTask::Copy, 10, 12, 3);
  for (std::size_t i = 0; i < docs.size(); ++i)
    CHECK(docs[i].pairs[0].source == again[i].pairs[0].source);
}

TEST_CASE("generate_synthetic context-pronoun") {
  const std::size_t N = 1000;
  auto docs = generate_synthetic(SyntheticTask::ContextPronoun, N, 10, 17);
  REQUIRE(docs.size() == N);
  std::size_t class_a = 0;
  for (const auto& d : docs) {
    REQUIRE(d.pairs.size() == 2);
    const auto& s1 = d.pairs[0];
    const auto& s2 = d.pairs[1];
    CHECK(s1.target == s1.source);
    const std::string& marker = s1.source[0];
    REQUIRE((marker == kCtxMarkerA || marker == kCtxMarkerB));
    const std::string& cls = s2.target[0];
    // the class token is fully determined by the previous sentence's marker
    if (marker == kCtxMarkerA) {
      CHECK(cls == kCtxClassA);
      ++class_a;
    } else {
      CHECK(cls == kCtxClassB);
    }
    CHECK(s2.source[0] == std::string(kCtxSlotTrigger));
    // sentence 2's source must never leak the class
    for (const auto& tok : s2.source) {
      CHECK(tok != std::string(kCtxClassA));
      CHECK(tok != std::string(kCtxClassB));
      CHECK(tok != std::string(kCtxMarkerA));
      CHECK(tok != std::string(kCtxMarkerB));
    }
    CHECK(s2.target.size() == s2.source.size());
  }
  // class balance 50% +- 5%
  CHECK(real(class_a) / real(N) > 0.45);
  CHECK(real(class_a) / real(N) < 0.55);

  // the designated non-class filler shows up in targets
  std::size_t others = 0;
  for (const auto& d : docs)
    for (const auto& tok : d.pairs[1].target)
      if (tok == std::string(kCtxOtherFiller)) ++others;
  CHECK(others > 0);
}
