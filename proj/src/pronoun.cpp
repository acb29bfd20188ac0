#include "lcnmt/pronoun.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include "lcnmt/error.hpp"

namespace lcnmt {
namespace {

std::vector<TokenId> class_token_ids(const PronounSet& set, const Vocabulary& vocab) {
  std::vector<TokenId> ids;
  ids.reserve(set.size());
  for (std::size_t c = 0; c < set.size(); ++c) {
    const std::string& surface = set.surface_of(c);
    TokenId id = vocab.id_of(surface);
    if (id == UNK && surface != vocab.surface(UNK))
      throw VocabError("pronoun class surface '" + surface +
                       "' missing from the target vocabulary");
    ids.push_back(id);
  }
  return ids;
}

void check_instance(const PronounInstance& instance) {
  std::size_t replace_count = 0;
  for (TokenId y : instance.target)
    if (y == REPLACE_ID) ++replace_count;
  if (replace_count != instance.slots.size())
    throw ContractError("pronoun instance: " + std::to_string(instance.slots.size()) +
                        " slots declared but " + std::to_string(replace_count) +
                        " REPLACE tokens present");
  for (std::size_t pos : instance.slots) {
    if (pos >= instance.target.size())
      throw ContractError("pronoun instance: slot position out of target bounds");
    if (instance.target[pos] != REPLACE_ID)
      throw ContractError("pronoun instance: slot position does not hold REPLACE");
  }
  if (!instance.golds.empty() && instance.golds.size() != instance.slots.size())
    throw ContractError("pronoun instance: gold label count does not match slots");
}

std::size_t candidate_count(std::size_t k, std::size_t classes, std::size_t cap) {
  std::size_t total = 1;
  for (std::size_t slot = 0; slot < k; ++slot) {
    if (classes != 0 && total > cap / classes)
      throw CapError("pronoun filling: " + std::to_string(classes) + "^" +
                     std::to_string(k) + " candidates exceed the cap of " +
                     std::to_string(cap));
    total *= classes;
  }
  if (total > cap)
    throw CapError("pronoun filling: " + std::to_string(classes) + "^" +
                   std::to_string(k) + " candidates exceed the cap of " +
                   std::to_string(cap));
  return total;
}

// Calls fn(digits) for every assignment in lexicographic class order, the
// first slot most significant.
template <typename Fn>
void for_each_assignment(std::size_t k, std::size_t classes, Fn&& fn) {
  std::vector<std::size_t> digits(k, 0);
  while (true) {
    fn(digits);
    bool wrapped = (k == 0);
    std::size_t pos = k;
    while (pos > 0) {
      --pos;
      if (++digits[pos] < classes) break;
      digits[pos] = 0;
      if (pos == 0) wrapped = true;
    }
    if (wrapped) break;
  }
}

}  // namespace

void PronounSet::validate() const {
  if (classes.empty()) throw ContractError("pronoun set has no classes");
  if (other_index >= classes.size())
    throw ContractError("pronoun set: OTHER index out of range");
  std::set<std::string> unique(classes.begin(), classes.end());
  if (unique.size() != classes.size())
    throw ContractError("pronoun set: duplicate class names");
}

PronounSet pronoun_set_en_fr() {
  PronounSet set;
  set.tag = "en-fr";
  set.classes = {"ce", "elle", "elles", "il", "ils", "cela", "on", "OTHER"};
  set.other_index = 7;
  return set;
}

PronounSet pronoun_set_en_de() {
  PronounSet set;
  set.tag = "en-de";
  set.classes = {"er", "sie", "es", "man", "OTHER"};
  set.other_index = 4;
  return set;
}

PronounSet pronoun_set_synthetic() {
  PronounSet set;
  set.tag = "synthetic";
  set.classes = {kCtxClassA, kCtxClassB, "OTHER"};
  set.other_index = 2;
  return set;
}

PronounSet pronoun_set_by_tag(const std::string& tag) {
  if (tag == "en-fr") return pronoun_set_en_fr();
  if (tag == "en-de") return pronoun_set_en_de();
  if (tag == "synthetic") return pronoun_set_synthetic();
  throw ContractError("unknown pronoun set tag '" + tag +
                      "' (expected en-fr, en-de, or synthetic)");
}

std::vector<std::vector<TokenId>> enumerate_fillings(const PronounInstance& instance,
                                                     const PronounSet& set,
                                                     const Vocabulary& tgt_vocab,
                                                     std::size_t cap) {
  set.validate();
  check_instance(instance);
  std::vector<TokenId> class_ids = class_token_ids(set, tgt_vocab);
  std::size_t total = candidate_count(instance.slots.size(), set.size(), cap);

  std::vector<std::vector<TokenId>> out;
  out.reserve(total);
  for_each_assignment(instance.slots.size(), set.size(),
                      [&](const std::vector<std::size_t>& digits) {
                        std::vector<TokenId> candidate = instance.target;
                        for (std::size_t s = 0; s < digits.size(); ++s)
                          candidate[instance.slots[s]] = class_ids[digits[s]];
                        out.push_back(std::move(candidate));
                      });
  return out;
}

PredictionResult predict(ModelParameters& params, const ModelConfig& config,
                         const PronounInstance& instance, const PronounSet& set,
                         const Vocabulary& tgt_vocab, std::size_t cap) {
  set.validate();
  check_instance(instance);
  std::vector<TokenId> class_ids = class_token_ids(set, tgt_vocab);
  candidate_count(instance.slots.size(), set.size(), cap);

  PredictionResult result;
  ContextualExample probe;
  probe.context = instance.context;
  probe.source = instance.source;
  bool first = true;
  for_each_assignment(
      instance.slots.size(), set.size(), [&](const std::vector<std::size_t>& digits) {
        probe.target = instance.target;
        for (std::size_t s = 0; s < digits.size(); ++s)
          probe.target[instance.slots[s]] = class_ids[digits[s]];
        real lp = sequence_log_prob_value(params, config, probe);
        ++result.candidates;
        if (first || lp > result.log_prob) {
          result.slot_classes = digits;
          result.log_prob = lp;
          first = false;
        }
      });
  return result;
}

PronounScore evaluate(const std::vector<std::size_t>& predictions,
                      const std::vector<std::size_t>& golds, const PronounSet& set) {
  set.validate();
  if (predictions.size() != golds.size())
    throw ContractError("pronoun evaluate: " + std::to_string(predictions.size()) +
                        " predictions vs " + std::to_string(golds.size()) + " golds");
  if (golds.empty()) throw ContractError("pronoun evaluate: no gold labels");

  PronounScore score;
  score.gold_counts.assign(set.size(), 0);
  score.correct_counts.assign(set.size(), 0);
  for (std::size_t i = 0; i < golds.size(); ++i) {
    if (golds[i] >= set.size() || predictions[i] >= set.size())
      throw ContractError("pronoun evaluate: class index out of range");
    ++score.gold_counts[golds[i]];
    if (predictions[i] == golds[i]) ++score.correct_counts[golds[i]];
  }

  real sum = 0.0;
  std::size_t present = 0;
  for (std::size_t c = 0; c < set.size(); ++c) {
    if (score.gold_counts[c] == 0) continue;
    sum += real(score.correct_counts[c]) / real(score.gold_counts[c]);
    ++present;
  }
  score.macro = sum / real(present);  // present >= 1 since golds is non-empty
  return score;
}

TaskEvaluation evaluate_task(ModelParameters& params, const ModelConfig& config,
                             const std::vector<PronounInstance>& instances,
                             const PronounSet& set, const Vocabulary& tgt_vocab,
                             std::size_t cap) {
  TaskEvaluation eval;
  eval.predictions.resize(instances.size());
  eval.skipped.assign(instances.size(), 0);

  std::vector<std::size_t> flat_pred, flat_gold;
  for (std::size_t i = 0; i < instances.size(); ++i) {
    try {
      eval.predictions[i] = predict(params, config, instances[i], set, tgt_vocab, cap);
    } catch (const CapError&) {
      eval.skipped[i] = 1;
      ++eval.skipped_count;
      continue;
    }
    ++eval.scored;
    if (!instances[i].golds.empty()) {
      for (std::size_t s = 0; s < instances[i].slots.size(); ++s) {
        flat_pred.push_back(eval.predictions[i].slot_classes[s]);
        flat_gold.push_back(instances[i].golds[s]);
      }
    }
  }
  if (!flat_gold.empty()) {
    eval.score = evaluate(flat_pred, flat_gold, set);
    eval.has_score = true;
  }
  return eval;
}

std::vector<PronounInstance> load_pronoun_task(const std::string& path,
                                               const Vocabulary& src_vocab,
                                               const Vocabulary& tgt_vocab,
                                               const PronounSet& set) {
  set.validate();
  std::ifstream in(path);
  if (!in) throw DataError("cannot open pronoun task file " + path);

  std::vector<PronounInstance> instances;
  std::vector<TokenId> prev_source;  // empty means document start
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) {
      prev_source.clear();
      continue;
    }
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
      std::size_t tab = line.find('\t', start);
      fields.push_back(line.substr(start, tab - start));
      if (tab == std::string::npos) break;
      start = tab + 1;
    }
    if (fields.size() < 2)
      throw DataError("pronoun task line " + std::to_string(line_no) +
                      ": expected 'source<TAB>target[<TAB>gold...]'");

    PronounInstance instance;
    instance.source = src_vocab.encode(split_tokens(fields[0]));
    instance.target = tgt_vocab.encode(split_tokens(fields[1]));
    if (instance.source.size() <= 1 || instance.target.size() <= 1)
      throw DataError("pronoun task line " + std::to_string(line_no) +
                      ": empty source or target sentence");
    for (std::size_t pos = 0; pos < instance.target.size(); ++pos)
      if (instance.target[pos] == REPLACE_ID) instance.slots.push_back(pos);

    for (std::size_t f = 2; f < fields.size(); ++f) {
      auto it = std::find(set.classes.begin(), set.classes.end(), fields[f]);
      if (it == set.classes.end())
        throw DataError("pronoun task line " + std::to_string(line_no) +
                        ": unknown gold class '" + fields[f] + "'");
      instance.golds.push_back(std::size_t(it - set.classes.begin()));
    }
    if (!instance.golds.empty() && instance.golds.size() != instance.slots.size())
      throw DataError("pronoun task line " + std::to_string(line_no) + ": " +
                      std::to_string(instance.slots.size()) + " slots but " +
                      std::to_string(instance.golds.size()) + " gold labels");

    instance.context =
        prev_source.empty() ? std::vector<TokenId>{EMPTY_CTX} : prev_source;
    prev_source = instance.source;
    instances.push_back(std::move(instance));
  }
  return instances;
}

}  // namespace lcnmt
