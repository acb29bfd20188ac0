#include "lcnmt/data.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include "lcnmt/error.hpp"

namespace lcnmt {

namespace {
const std::string kReservedSurfaces[kReservedCount] = {
    "<pad>", "<s>", "</s>", "<unk>", "REPLACE", "<ectx>"};
}

const char* const kCtxMarkerA = "ma";
const char* const kCtxMarkerB = "mb";
const char* const kCtxClassA = "ca";
const char* const kCtxClassB = "cb";
const char* const kCtxOtherFiller = "other";
const char* const kCtxSlotTrigger = "rep";

const std::string& reserved_surface(TokenId id) {
  if (id >= kReservedCount) throw ContractError("not a reserved id");
  return kReservedSurfaces[id];
}

Vocabulary::Vocabulary() {
  for (std::size_t i = 0; i < kReservedCount; ++i) {
    surfaces_.push_back(kReservedSurfaces[i]);
    counts_.push_back(0);
    index_.emplace(kReservedSurfaces[i], static_cast<TokenId>(i));
  }
}

TokenId Vocabulary::add(const std::string& token, std::uint64_t count) {
  auto it = index_.find(token);
  if (it != index_.end()) {
    counts_[it->second] += count;
    return it->second;
  }
  TokenId id = static_cast<TokenId>(surfaces_.size());
  surfaces_.push_back(token);
  counts_.push_back(count);
  index_.emplace(token, id);
  return id;
}

bool Vocabulary::contains(const std::string& token) const {
  return index_.count(token) > 0;
}

TokenId Vocabulary::id_of(const std::string& token) const {
  auto it = index_.find(token);
  return it == index_.end() ? static_cast<TokenId>(UNK) : it->second;
}

const std::string& Vocabulary::surface(TokenId id) const {
  if (id >= surfaces_.size())
    throw VocabError("id " + std::to_string(id) + " outside vocabulary of size " +
                     std::to_string(surfaces_.size()));
  return surfaces_[id];
}

std::vector<TokenId> Vocabulary::encode(const std::vector<std::string>& tokens,
                                        bool append_eos) const {
  std::vector<TokenId> out;
  out.reserve(tokens.size() + 1);
  for (const auto& t : tokens) out.push_back(id_of(t));
  if (append_eos) out.push_back(EOS);
  return out;
}

std::vector<std::string> Vocabulary::decode(const std::vector<TokenId>& ids) const {
  std::vector<std::string> out;
  out.reserve(ids.size());
  for (TokenId id : ids) {
    if (id == PAD || id == BOS || id == EOS || id == EMPTY_CTX) continue;
    out.push_back(surface(id));
  }
  return out;
}

std::vector<TokenId> Batch::ctx_row(std::size_t i) const {
  return {ctx_ids.begin() + static_cast<std::ptrdiff_t>(i * ctx_width),
          ctx_ids.begin() + static_cast<std::ptrdiff_t>(i * ctx_width + ctx_len[i])};
}
std::vector<TokenId> Batch::src_row(std::size_t i) const {
  return {src_ids.begin() + static_cast<std::ptrdiff_t>(i * src_width),
          src_ids.begin() + static_cast<std::ptrdiff_t>(i * src_width + src_len[i])};
}
std::vector<TokenId> Batch::tgt_row(std::size_t i) const {
  return {tgt_ids.begin() + static_cast<std::ptrdiff_t>(i * tgt_width),
          tgt_ids.begin() + static_cast<std::ptrdiff_t>(i * tgt_width + tgt_len[i])};
}

std::vector<std::string> split_tokens(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream in(line);
  std::string tok;
  while (in >> tok) out.push_back(tok);
  return out;
}

Vocabulary build_vocab(const std::vector<std::vector<std::string>>& sentences,
                       std::size_t max_size, std::size_t min_count) {
  if (max_size < kReservedCount)
    throw ContractError("vocabulary size " + std::to_string(max_size) +
                        " cannot hold the " + std::to_string(kReservedCount) +
                        " reserved tokens");
  std::map<std::string, std::uint64_t> freq;
  for (const auto& sent : sentences)
    for (const auto& tok : sent) ++freq[tok];

  std::vector<std::pair<std::string, std::uint64_t>> items(freq.begin(), freq.end());
  std::sort(items.begin(), items.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });

  Vocabulary vocab;
  for (const auto& [token, count] : items) {
    if (vocab.size() >= max_size) break;
    if (count < min_count) break;
    if (vocab.contains(token)) continue;  // a reserved surface used in text
    vocab.add(token, count);
  }
  return vocab;
}

namespace {

bool is_blank(const std::string& line) {
  return line.find_first_not_of(" \t\r") == std::string::npos;
}

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

// 1-based sentence ordinals that open a new document, sorted.
std::vector<std::size_t> read_boundary_sidecar(const std::string& path) {
  std::vector<std::size_t> starts;
  for (const auto& line : read_lines(path)) {
    if (is_blank(line)) continue;
    std::size_t pos = 0;
    unsigned long long v = 0;
    try {
      v = std::stoull(line, &pos);
    } catch (const std::exception&) {
      throw DataError("bad boundary entry '" + line + "' in " + path);
    }
    if (pos != line.size() || v == 0)
      throw DataError("bad boundary entry '" + line + "' in " + path);
    starts.push_back(static_cast<std::size_t>(v));
  }
  std::sort(starts.begin(), starts.end());
  return starts;
}

}  // namespace

std::vector<Document> load_parallel(const std::string& source_path,
                                    const std::string& target_path,
                                    const std::optional<std::string>& boundary_path,
                                    std::ostream* log) {
  std::vector<std::string> src = read_lines(source_path);
  std::vector<std::string> tgt = read_lines(target_path);
  if (src.size() != tgt.size())
    throw DataError("line counts differ: " + source_path + " has " +
                    std::to_string(src.size()) + " lines, " + target_path + " has " +
                    std::to_string(tgt.size()));

  std::vector<std::size_t> sidecar_starts;
  if (boundary_path) sidecar_starts = read_boundary_sidecar(*boundary_path);

  std::vector<Document> docs;
  Document current;
  bool saw_blank = false;
  std::size_t ordinal = 0;  // 1-based index over sentence lines
  auto flush = [&] {
    if (!current.pairs.empty()) docs.push_back(std::move(current));
    current = Document{};
  };
  for (std::size_t i = 0; i < src.size(); ++i) {
    const bool sb = is_blank(src[i]), tb = is_blank(tgt[i]);
    if (sb != tb)
      throw DataError("document boundary mismatch at line " + std::to_string(i + 1) +
                      ": blank in " + (sb ? source_path : target_path) + " only");
    if (sb) {
      saw_blank = true;
      flush();
      continue;
    }
    ++ordinal;
    if (std::binary_search(sidecar_starts.begin(), sidecar_starts.end(), ordinal))
      flush();
    current.pairs.push_back({split_tokens(src[i]), split_tokens(tgt[i])});
  }
  flush();

  if (!saw_blank && sidecar_starts.empty() && log && docs.size() == 1)
    *log << "note: no document boundaries in " << source_path << "; treating all "
         << docs[0].pairs.size() << " sentence pairs as a single document\n";
  return docs;
}

std::vector<Document> load_source_documents(const std::string& source_path,
                                            const std::optional<std::string>& boundary_path,
                                            std::ostream* log) {
  std::vector<std::string> src = read_lines(source_path);
  std::vector<std::size_t> sidecar_starts;
  if (boundary_path) sidecar_starts = read_boundary_sidecar(*boundary_path);

  std::vector<Document> docs;
  Document current;
  bool saw_blank = false;
  std::size_t ordinal = 0;
  auto flush = [&] {
    if (!current.pairs.empty()) docs.push_back(std::move(current));
    current = Document{};
  };
  for (const auto& line : src) {
    if (is_blank(line)) {
      saw_blank = true;
      flush();
      continue;
    }
    ++ordinal;
    if (std::binary_search(sidecar_starts.begin(), sidecar_starts.end(), ordinal))
      flush();
    current.pairs.push_back({split_tokens(line), {}});
  }
  flush();

  if (!saw_blank && sidecar_starts.empty() && log && docs.size() == 1)
    *log << "note: no document boundaries in " << source_path << "; treating all "
         << docs[0].pairs.size() << " sentences as a single document\n";
  return docs;
}

std::vector<ContextualExample> attach_context(const Document& doc,
                                              const Vocabulary& src_vocab,
                                              const Vocabulary& tgt_vocab) {
  std::vector<ContextualExample> out;
  out.reserve(doc.pairs.size());
  for (std::size_t i = 0; i < doc.pairs.size(); ++i) {
    ContextualExample ex;
    if (i == 0)
      ex.context = {EMPTY_CTX};
    else
      ex.context = src_vocab.encode(doc.pairs[i - 1].source);
    ex.source = src_vocab.encode(doc.pairs[i].source);
    ex.target = tgt_vocab.encode(doc.pairs[i].target);
    out.push_back(std::move(ex));
  }
  return out;
}

std::vector<ContextualExample> attach_context(const std::vector<Document>& docs,
                                              const Vocabulary& src_vocab,
                                              const Vocabulary& tgt_vocab) {
  std::vector<ContextualExample> out;
  for (const auto& doc : docs) {
    auto part = attach_context(doc, src_vocab, tgt_vocab);
    out.insert(out.end(), part.begin(), part.end());
  }
  return out;
}

std::vector<Batch> make_batches(const std::vector<ContextualExample>& examples,
                                std::size_t batch_size, bool bucket_by_length,
                                std::uint64_t seed) {
  if (batch_size == 0) throw ContractError("batch size must be at least 1");

  std::vector<std::size_t> order(examples.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  if (bucket_by_length) {
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      if (examples[a].source.size() != examples[b].source.size())
        return examples[a].source.size() < examples[b].source.size();
      return a < b;
    });
  }

  std::vector<Batch> batches;
  for (std::size_t start = 0; start < order.size(); start += batch_size) {
    const std::size_t n = std::min(batch_size, order.size() - start);
    Batch b;
    b.size = n;
    for (std::size_t j = 0; j < n; ++j) {
      const ContextualExample& ex = examples[order[start + j]];
      b.ctx_width = std::max(b.ctx_width, ex.context.size());
      b.src_width = std::max(b.src_width, ex.source.size());
      b.tgt_width = std::max(b.tgt_width, ex.target.size());
    }
    b.ctx_ids.assign(n * b.ctx_width, PAD);
    b.src_ids.assign(n * b.src_width, PAD);
    b.tgt_ids.assign(n * b.tgt_width, PAD);
    b.ctx_mask.assign(n * b.ctx_width, 0);
    b.src_mask.assign(n * b.src_width, 0);
    b.tgt_mask.assign(n * b.tgt_width, 0);
    for (std::size_t j = 0; j < n; ++j) {
      const ContextualExample& ex = examples[order[start + j]];
      b.ctx_len.push_back(ex.context.size());
      b.src_len.push_back(ex.source.size());
      b.tgt_len.push_back(ex.target.size());
      for (std::size_t k = 0; k < ex.context.size(); ++k) {
        b.ctx_ids[j * b.ctx_width + k] = ex.context[k];
        b.ctx_mask[j * b.ctx_width + k] = 1;
      }
      for (std::size_t k = 0; k < ex.source.size(); ++k) {
        b.src_ids[j * b.src_width + k] = ex.source[k];
        b.src_mask[j * b.src_width + k] = 1;
      }
      for (std::size_t k = 0; k < ex.target.size(); ++k) {
        b.tgt_ids[j * b.tgt_width + k] = ex.target[k];
        b.tgt_mask[j * b.tgt_width + k] = 1;
      }
    }
    batches.push_back(std::move(b));
  }

  Rng rng(seed);
  rng.shuffle(batches);
  return batches;
}

std::vector<Document> generate_synthetic(SyntheticTask task, std::size_t size,
                                         std::size_t vocab_size, std::uint64_t seed) {
  if (size == 0) throw ContractError("synthetic corpus size must be at least 1");
  if (vocab_size == 0) throw ContractError("synthetic vocab size must be at least 1");
  Rng rng(seed);
  auto word = [&] {
    return "w" + std::to_string(rng.uniform_int(0, static_cast<std::int64_t>(vocab_size) - 1));
  };

  std::vector<Document> docs;
  docs.reserve(size);
  for (std::size_t i = 0; i < size; ++i) {
    Document doc;
    if (task == SyntheticTask::Copy) {
      std::vector<std::string> sent;
      const auto len = rng.uniform_int(3, 8);
      for (std::int64_t j = 0; j < len; ++j) sent.push_back(word());
      doc.pairs.push_back({sent, sent});
    } else {
      const bool a = rng.uniform_int(0, 1) == 0;
      // sentence 1: the marker that decides sentence 2's class token
      std::vector<std::string> s1 = {a ? kCtxMarkerA : kCtxMarkerB};
      const auto f1 = rng.uniform_int(2, 4);
      for (std::int64_t j = 0; j < f1; ++j) s1.push_back(word());
      doc.pairs.push_back({s1, s1});
      // sentence 2: class-free source, class token leads the target
      std::vector<std::string> s2 = {kCtxSlotTrigger};
      const auto f2 = rng.uniform_int(2, 4);
      for (std::int64_t j = 0; j < f2; ++j) s2.push_back(word());
      std::vector<std::string> t2 = {a ? kCtxClassA : kCtxClassB};
      for (std::int64_t j = 0; j < f2; ++j)
        t2.push_back(rng.uniform() < 0.1 ? kCtxOtherFiller : s2[static_cast<std::size_t>(j) + 1]);
      doc.pairs.push_back({s2, t2});
    }
    docs.push_back(std::move(doc));
  }
  return docs;
}

}  // namespace lcnmt
