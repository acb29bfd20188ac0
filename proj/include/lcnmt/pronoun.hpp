#ifndef LCNMT_PRONOUN_HPP
#define LCNMT_PRONOUN_HPP

#include <cstddef>
#include <string>
#include <vector>

#include "lcnmt/model.hpp"

namespace lcnmt {

// Cross-lingual pronoun prediction: slots in a given target sentence are
// filled by whichever class assignment maximizes the full-sentence
// log-probability under the translation model, enumerating the class set
// exhaustively.

inline constexpr std::size_t kFillingCap = 100000;

// Ordered class inventory of one language pair. One class is the OTHER
// bucket for non-pronoun fillers; it is realized by a designated surface
// token that data preparation introduces into training targets.
struct PronounSet {
  std::string tag;
  std::vector<std::string> classes;
  std::size_t other_index = 0;
  std::string other_surface = "other";

  std::size_t size() const { return classes.size(); }
  const std::string& class_name(std::size_t i) const { return classes[i]; }
  const std::string& surface_of(std::size_t i) const {
    return i == other_index ? other_surface : classes[i];
  }
  void validate() const;
};

PronounSet pronoun_set_en_fr();
PronounSet pronoun_set_en_de();
// Classes of the synthetic context-pronoun corpus.
PronounSet pronoun_set_synthetic();
PronounSet pronoun_set_by_tag(const std::string& tag);

// One evaluation item. The target carries REPLACE at each slot position
// and ends with EOS; golds, when present, parallel the slots.
struct PronounInstance {
  std::vector<TokenId> context;
  std::vector<TokenId> source;
  std::vector<TokenId> target;
  std::vector<std::size_t> slots;
  std::vector<std::size_t> golds;  // class indices; empty when unlabeled
};

// Every assignment of class tokens to the slots, as complete target
// sequences in lexicographic class order (first slot most significant).
// Refuses with CapError when |P|^k would exceed cap.
std::vector<std::vector<TokenId>> enumerate_fillings(const PronounInstance& instance,
                                                     const PronounSet& set,
                                                     const Vocabulary& tgt_vocab,
                                                     std::size_t cap = kFillingCap);

struct PredictionResult {
  std::vector<std::size_t> slot_classes;  // argmax assignment
  real log_prob = 0.0;                    // full-sentence score of the argmax
  std::size_t candidates = 0;
};

// Scores every candidate with teacher forcing and returns the argmax
// assignment; ties resolve toward earlier class order.
PredictionResult predict(ModelParameters& params, const ModelConfig& config,
                         const PronounInstance& instance, const PronounSet& set,
                         const Vocabulary& tgt_vocab, std::size_t cap = kFillingCap);

// Per-class recall over classes that actually occur in the gold labels,
// and their macro average.
struct PronounScore {
  std::vector<std::size_t> gold_counts;
  std::vector<std::size_t> correct_counts;
  real macro = 0.0;
};

PronounScore evaluate(const std::vector<std::size_t>& predictions,
                      const std::vector<std::size_t>& golds, const PronounSet& set);

struct TaskEvaluation {
  std::vector<PredictionResult> predictions;  // one per instance; skipped ones empty
  std::vector<char> skipped;                  // cap refusals, reported not truncated
  PronounScore score;
  bool has_score = false;
  std::size_t scored = 0;
  std::size_t skipped_count = 0;
};

TaskEvaluation evaluate_task(ModelParameters& params, const ModelConfig& config,
                             const std::vector<PronounInstance>& instances,
                             const PronounSet& set, const Vocabulary& tgt_vocab,
                             std::size_t cap = kFillingCap);

// Task file: one record per line, "source TAB target TAB gold...", with
// REPLACE marking slots in the target and one gold class name per slot.
// Blank lines close documents; within a document each record's context is
// the previous record's source sentence.
std::vector<PronounInstance> load_pronoun_task(const std::string& path,
                                               const Vocabulary& src_vocab,
                                               const Vocabulary& tgt_vocab,
                                               const PronounSet& set);

}  // namespace lcnmt

#endif
