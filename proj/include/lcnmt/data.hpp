#ifndef LCNMT_DATA_HPP
#define LCNMT_DATA_HPP

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "lcnmt/layers.hpp"
#include "lcnmt/rng.hpp"

namespace lcnmt {

// Reserved vocabulary slots, fixed across every model and file format.
enum ReservedId : TokenId {
  PAD = 0,        // batch padding
  BOS = 1,        // decoder start symbol
  EOS = 2,        // end of sentence
  UNK = 3,        // out-of-vocabulary words
  REPLACE_ID = 4, // pronoun slot marker
  EMPTY_CTX = 5,  // the designated empty-context sentence token
};
constexpr std::size_t kReservedCount = 6;

const std::string& reserved_surface(TokenId id);

// Token<->id bijection with the reserved slots always present. Unknown
// tokens encode to UNK; decode drops structural tokens (PAD/BOS/EOS and
// the empty-context marker) so in-vocab sentences round-trip.
class Vocabulary {
 public:
  Vocabulary();

  TokenId add(const std::string& token, std::uint64_t count = 0);
  bool contains(const std::string& token) const;
  // UNK for unknown tokens.
  TokenId id_of(const std::string& token) const;
  const std::string& surface(TokenId id) const;
  std::uint64_t count_of(TokenId id) const { return counts_[id]; }
  std::size_t size() const { return surfaces_.size(); }

  std::vector<TokenId> encode(const std::vector<std::string>& tokens,
                              bool append_eos = true) const;
  std::vector<std::string> decode(const std::vector<TokenId>& ids) const;

 private:
  std::vector<std::string> surfaces_;
  std::vector<std::uint64_t> counts_;
  std::unordered_map<std::string, TokenId> index_;
};

struct SentencePair {
  std::vector<std::string> source;
  std::vector<std::string> target;
};

// Context linkage never crosses a document boundary.
struct Document {
  std::vector<SentencePair> pairs;
};

// One training/decoding unit: the preceding source sentence (or the
// empty-context singleton), the source, and the target, as ids with EOS
// appended to real sentences.
struct ContextualExample {
  std::vector<TokenId> context;
  std::vector<TokenId> source;
  std::vector<TokenId> target;
};

// Padded id matrices with masks; mask true exactly on real tokens.
struct Batch {
  std::size_t size = 0;
  std::size_t ctx_width = 0, src_width = 0, tgt_width = 0;
  std::vector<TokenId> ctx_ids, src_ids, tgt_ids;  // row-major size x width
  std::vector<char> ctx_mask, src_mask, tgt_mask;
  std::vector<std::size_t> ctx_len, src_len, tgt_len;

  std::vector<TokenId> ctx_row(std::size_t i) const;
  std::vector<TokenId> src_row(std::size_t i) const;
  std::vector<TokenId> tgt_row(std::size_t i) const;
};

// Whitespace tokenization of one line.
std::vector<std::string> split_tokens(const std::string& line);

// Most frequent tokens win; ties broken lexicographically; reserved slots
// always included. max_size counts the reserved slots.
Vocabulary build_vocab(const std::vector<std::vector<std::string>>& sentences,
                       std::size_t max_size, std::size_t min_count = 1);

// Line-aligned parallel files. A blank line (in both files at the same
// index) closes the current document; an optional sidecar lists 1-based
// line numbers that start new documents. Files without any boundary
// information become a single document, which is reported on the log
// stream.
std::vector<Document> load_parallel(const std::string& source_path,
                                    const std::string& target_path,
                                    const std::optional<std::string>& boundary_path,
                                    std::ostream* log = nullptr);

// Source-only documents (translation input). Same boundary conventions as
// load_parallel; the pairs carry empty target sides.
std::vector<Document> load_source_documents(const std::string& source_path,
                                            const std::optional<std::string>& boundary_path,
                                            std::ostream* log = nullptr);

// Example i gets sentence i-1's source as context; the first sentence of
// a document gets the empty-context singleton.
std::vector<ContextualExample> attach_context(const Document& doc,
                                              const Vocabulary& src_vocab,
                                              const Vocabulary& tgt_vocab);
std::vector<ContextualExample> attach_context(const std::vector<Document>& docs,
                                              const Vocabulary& src_vocab,
                                              const Vocabulary& tgt_vocab);

// Length-bucketed padded batches; batch order shuffled by seed. The union
// of all batch rows is exactly the input multiset.
std::vector<Batch> make_batches(const std::vector<ContextualExample>& examples,
                                std::size_t batch_size, bool bucket_by_length,
                                std::uint64_t seed);

enum class SyntheticTask { Copy, ContextPronoun };

// Synthetic corpora for the acceptance experiments. Copy: single-sentence
// documents with target == source. ContextPronoun: two-sentence documents
// where sentence 1 opens with a marker token and sentence 2's target
// opens with a class token fully determined by that marker; sentence 2 is
// otherwise class-free by construction.
std::vector<Document> generate_synthetic(SyntheticTask task, std::size_t size,
                                         std::size_t vocab_size, std::uint64_t seed);

// Class surfaces used by the ContextPronoun generator.
extern const char* const kCtxMarkerA;
extern const char* const kCtxMarkerB;
extern const char* const kCtxClassA;
extern const char* const kCtxClassB;
extern const char* const kCtxOtherFiller;
extern const char* const kCtxSlotTrigger;

}  // namespace lcnmt

#endif
