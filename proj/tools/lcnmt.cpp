#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "lcnmt/checkpoint.hpp"
#include "lcnmt/data.hpp"
#include "lcnmt/decoding.hpp"
#include "lcnmt/error.hpp"
#include "lcnmt/metrics.hpp"
#include "lcnmt/model.hpp"
#include "lcnmt/pronoun.hpp"
#include "lcnmt/rng.hpp"
#include "lcnmt/trainer.hpp"

namespace {

using namespace lcnmt;
using nlohmann::json;

// Every field has a default; required input paths are enforced by the
// option parser. The train subset is serialized into checkpoints.
struct RunConfig {
  std::string mode = "nmt";
  std::string source, target, boundaries;
  std::string val_source, val_target, val_boundaries;
  std::string checkpoint, task, hyp, ref;
  std::string output = "-";
  std::string out_prefix = "run";

  std::size_t word_dim = 620;
  std::size_t enc_hidden = 1000;
  std::size_t dec_hidden = 1000;
  std::size_t ctx_hidden = 1000;
  std::size_t attn_hidden = 1000;
  double dropout = 0.2;
  std::size_t vocab_size = 10000;
  std::size_t min_count = 1;

  std::size_t batch_size = 32;
  double clip_norm = 1.0;
  std::size_t max_epochs = 20;
  std::size_t patience = 5;
  std::size_t val_interval = 100;
  double fraction = 1.0;
  std::uint64_t seed = 1;
  std::size_t max_decode_len = 50;

  std::size_t beam = 5;
  std::size_t max_len = 80;
  bool length_norm = true;

  std::string pairs = "en-fr";
  std::size_t cap = kFillingCap;

  std::string kind = "copy";
  std::size_t size = 200;
  std::size_t synth_vocab = 20;
  std::size_t val_size = 0;

  std::size_t threads = 1;
};

std::optional<std::string> opt_path(const std::string& s) {
  if (s.empty()) return std::nullopt;
  return s;
}

std::string fixed2(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string join(const std::vector<std::string>& words) {
  std::string out;
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (i) out += ' ';
    out += words[i];
  }
  return out;
}

std::vector<std::string> read_text_lines(const std::string& path) {
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

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  return out;
}

void warn_threads(std::size_t threads) {
  if (threads > 1)
    std::cerr << "note: --threads " << threads
              << " requested; this build runs single-threaded\n";
}

// Keys are the long option names, so a stored config maps 1:1 back onto a
// command line (or a --config file).
std::string train_config_json(const RunConfig& rc) {
  json j{{"command", "train"},
         {"mode", rc.mode},
         {"source", rc.source},
         {"target", rc.target},
         {"boundaries", rc.boundaries},
         {"val-source", rc.val_source},
         {"val-target", rc.val_target},
         {"val-boundaries", rc.val_boundaries},
         {"out-prefix", rc.out_prefix},
         {"word-dim", rc.word_dim},
         {"enc-hidden", rc.enc_hidden},
         {"dec-hidden", rc.dec_hidden},
         {"ctx-hidden", rc.ctx_hidden},
         {"attn-hidden", rc.attn_hidden},
         {"dropout", rc.dropout},
         {"vocab-size", rc.vocab_size},
         {"min-count", rc.min_count},
         {"batch-size", rc.batch_size},
         {"clip-norm", rc.clip_norm},
         {"max-epochs", rc.max_epochs},
         {"patience", rc.patience},
         {"val-interval", rc.val_interval},
         {"fraction", rc.fraction},
         {"seed", rc.seed},
         {"max-decode-len", rc.max_decode_len},
         {"threads", rc.threads}};
  return j.dump();
}

ModelConfig model_config_of(const RunConfig& rc) {
  ModelConfig mc;
  mc.mode = mode_from_name(rc.mode);
  mc.word_dim = rc.word_dim;
  mc.enc_hidden = rc.enc_hidden;
  mc.dec_hidden = rc.dec_hidden;
  mc.ctx_hidden = rc.ctx_hidden;
  mc.attn_hidden = rc.attn_hidden;
  mc.dropout_rate = rc.dropout;
  return mc;
}

int cmd_train(const RunConfig& rc) {
  warn_threads(rc.threads);

  auto docs = load_parallel(rc.source, rc.target, opt_path(rc.boundaries), &std::cerr);
  std::vector<std::vector<std::string>> src_sents, tgt_sents;
  for (const auto& doc : docs)
    for (const auto& pair : doc.pairs) {
      src_sents.push_back(pair.source);
      tgt_sents.push_back(pair.target);
    }
  Vocabulary src_vocab = build_vocab(src_sents, rc.vocab_size, rc.min_count);
  Vocabulary tgt_vocab = build_vocab(tgt_sents, rc.vocab_size, rc.min_count);

  ModelConfig mc = model_config_of(rc);
  mc.src_vocab = src_vocab.size();
  mc.tgt_vocab = tgt_vocab.size();
  mc.validate();

  auto corpus = attach_context(docs, src_vocab, tgt_vocab);
  corpus = subsample_corpus(corpus, rc.fraction, rc.seed);

  auto val_docs =
      load_parallel(rc.val_source, rc.val_target, opt_path(rc.val_boundaries), &std::cerr);
  auto val = attach_context(val_docs, src_vocab, tgt_vocab);

  TrainingConfig tc;
  tc.batch_size = rc.batch_size;
  tc.clip_norm = rc.clip_norm;
  tc.max_epochs = rc.max_epochs;
  tc.patience = rc.patience;
  tc.val_interval = rc.val_interval;
  tc.fraction = rc.fraction;
  tc.seed = rc.seed;
  tc.max_decode_len = rc.max_decode_len;

  Rng rng(rc.seed);
  ModelParameters params = ModelParameters::init(mc, rng);

  const std::string log_path = rc.out_prefix + ".train.log";
  std::ofstream log = open_output(log_path);
  TrainOutcome outcome = train(params, mc, corpus, val, tc, &log);

  const std::string run_json = train_config_json(rc);
  Checkpoint best{mc, run_json, src_vocab, tgt_vocab, outcome.best_params};
  save_checkpoint(rc.out_prefix + ".best.ckpt", best);
  Checkpoint final_state{mc, run_json, src_vocab, tgt_vocab, params};
  save_checkpoint(rc.out_prefix + ".final.ckpt", final_state);

  std::cout << "trained " << outcome.steps << " steps on " << corpus.size()
            << " examples (" << outcome.stop_reason << ")\n"
            << "best val BLEU " << fixed2(outcome.best_bleu * 100.0) << " at step "
            << outcome.best_step << "\n"
            << "checkpoints: " << rc.out_prefix << ".best.ckpt, " << rc.out_prefix
            << ".final.ckpt\n"
            << "log: " << log_path << "\n";
  return 0;
}

int cmd_translate(const RunConfig& rc) {
  warn_threads(rc.threads);

  Checkpoint ck = load_checkpoint(rc.checkpoint);
  auto docs = load_source_documents(rc.source, opt_path(rc.boundaries), &std::cerr);

  std::ofstream file;
  std::ostream* out = &std::cout;
  if (rc.output != "-") {
    file = open_output(rc.output);
    out = &file;
  }

  // Blank-line document structure round-trips; sidecar-described input
  // stays flat.
  const bool emit_blanks = docs.size() > 1 && rc.boundaries.empty();
  std::size_t sentences = 0;
  for (std::size_t d = 0; d < docs.size(); ++d) {
    if (emit_blanks && d > 0) *out << "\n";
    auto examples = attach_context(docs[d], ck.src_vocab, ck.tgt_vocab);
    for (const auto& ex : examples) {
      auto results =
          beam_search(ck.params, ck.config, ex, rc.beam, rc.max_len, rc.length_norm);
      *out << join(ck.tgt_vocab.decode(results.front().tokens)) << "\n";
      ++sentences;
    }
  }
  if (out == &file && !file) throw DataError("failed writing " + rc.output);
  std::cerr << "translated " << sentences << " sentences\n";
  return 0;
}

int cmd_predict_pronouns(const RunConfig& rc) {
  warn_threads(rc.threads);

  Checkpoint ck = load_checkpoint(rc.checkpoint);
  PronounSet set = pronoun_set_by_tag(rc.pairs);
  auto instances = load_pronoun_task(rc.task, ck.src_vocab, ck.tgt_vocab, set);
  TaskEvaluation ev = evaluate_task(ck.params, ck.config, instances, set, ck.tgt_vocab, rc.cap);

  std::ofstream file;
  std::ostream* out = &std::cout;
  if (rc.output != "-") {
    file = open_output(rc.output);
    out = &file;
  }
  for (std::size_t i = 0; i < ev.predictions.size(); ++i) {
    if (ev.skipped[i]) {
      *out << "<skipped>\n";
      continue;
    }
    std::string line;
    for (std::size_t s = 0; s < ev.predictions[i].slot_classes.size(); ++s) {
      if (s) line += '\t';
      line += set.class_name(ev.predictions[i].slot_classes[s]);
    }
    *out << line << "\n";
  }
  if (out == &file && !file) throw DataError("failed writing " + rc.output);

  std::cout << "instances " << instances.size() << " scored " << ev.scored << " skipped "
            << ev.skipped_count << "\n";
  if (ev.has_score) {
    for (std::size_t c = 0; c < set.size(); ++c) {
      if (ev.score.gold_counts[c] == 0) continue;
      const double recall = static_cast<double>(ev.score.correct_counts[c]) /
                            static_cast<double>(ev.score.gold_counts[c]);
      std::cout << "recall " << set.class_name(c) << " " << ev.score.correct_counts[c]
                << "/" << ev.score.gold_counts[c] << " " << fixed2(recall * 100.0) << "\n";
    }
    std::cout << "macro-recall " << fixed2(ev.score.macro * 100.0) << "\n";
  } else {
    std::cout << "no labeled slots; recall unavailable\n";
  }
  return 0;
}

int cmd_score(const RunConfig& rc) {
  auto hyp_lines = read_text_lines(rc.hyp);
  auto ref_lines = read_text_lines(rc.ref);
  if (hyp_lines.size() != ref_lines.size())
    throw DataError("line counts differ: " + rc.hyp + " has " +
                    std::to_string(hyp_lines.size()) + " lines, " + rc.ref + " has " +
                    std::to_string(ref_lines.size()));

  // The reference carries the structure: a blank reference line is a
  // document separator and must be blank in the hypothesis too; a blank
  // hypothesis line against a real reference is an empty translation.
  auto blank = [](const std::string& s) {
    return s.find_first_not_of(" \t") == std::string::npos;
  };
  std::vector<std::vector<std::string>> hyps, refs;
  for (std::size_t i = 0; i < ref_lines.size(); ++i) {
    if (blank(ref_lines[i])) {
      if (!blank(hyp_lines[i]))
        throw DataError("document boundary mismatch at line " + std::to_string(i + 1) +
                        ": blank in " + rc.ref + " only");
      continue;
    }
    hyps.push_back(split_tokens(hyp_lines[i]));
    refs.push_back(split_tokens(ref_lines[i]));
  }
  if (refs.empty()) throw DataError("no sentences to score in " + rc.ref);

  ScoreReport report = score_report(hyps, refs);
  std::cout << "sentences " << report.sentences << "\n"
            << "BLEU " << fixed2(report.bleu * 100.0) << "\n"
            << "RIBES " << fixed2(report.ribes * 100.0) << "\n";
  return 0;
}

void write_synthetic_split(const std::string& prefix, SyntheticTask task,
                           std::size_t size, std::size_t vocab_size,
                           std::uint64_t seed) {
  auto docs = generate_synthetic(task, size, vocab_size, seed);
  std::ofstream src = open_output(prefix + ".src");
  std::ofstream tgt = open_output(prefix + ".tgt");
  for (std::size_t i = 0; i < docs.size(); ++i) {
    if (i) {
      src << "\n";
      tgt << "\n";
    }
    for (const auto& pair : docs[i].pairs) {
      src << join(pair.source) << "\n";
      tgt << join(pair.target) << "\n";
    }
  }

  if (task != SyntheticTask::ContextPronoun) return;
  // Task records mirror the parallel corpus: the class token becomes the
  // REPLACE slot and its surface becomes the gold label.
  std::ofstream tf = open_output(prefix + ".task");
  for (std::size_t i = 0; i < docs.size(); ++i) {
    if (i) tf << "\n";
    const auto& ctx = docs[i].pairs[0];
    const auto& rec = docs[i].pairs[1];
    tf << join(ctx.source) << "\t" << join(ctx.target) << "\n";
    std::string slot_target = reserved_surface(REPLACE_ID);
    for (std::size_t j = 1; j < rec.target.size(); ++j) slot_target += ' ' + rec.target[j];
    tf << join(rec.source) << "\t" << slot_target << "\t" << rec.target[0] << "\n";
  }
}

int cmd_make_synthetic(const RunConfig& rc) {
  const SyntheticTask task =
      rc.kind == "copy" ? SyntheticTask::Copy : SyntheticTask::ContextPronoun;
  write_synthetic_split(rc.out_prefix, task, rc.size, rc.synth_vocab, rc.seed);
  std::cout << "wrote " << rc.size << " documents to " << rc.out_prefix << ".src/.tgt";
  if (task == SyntheticTask::ContextPronoun) std::cout << " and " << rc.out_prefix << ".task";
  std::cout << "\n";
  if (rc.val_size > 0) {
    write_synthetic_split(rc.out_prefix + ".val", task, rc.val_size, rc.synth_vocab,
                          rc.seed + 1);
    std::cout << "wrote " << rc.val_size << " validation documents to " << rc.out_prefix
              << ".val.src/.tgt";
    if (task == SyntheticTask::ContextPronoun)
      std::cout << " and " << rc.out_prefix << ".val.task";
    std::cout << "\n";
  }
  return 0;
}

void add_threads_flag(CLI::App* sub, RunConfig& rc) {
  sub->add_option("--threads", rc.threads, "worker threads (only 1 is implemented)")
      ->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Attention-based machine translation with a larger-context encoder"};
  app.require_subcommand(1);
  // Values live under a [subcommand] section, e.g. [train]; command-line
  // flags win over the file.
  app.set_config("--config", "",
                 "read option values from an INI-style file; flags win");
  RunConfig rc;

  CLI::App* train_cmd =
      app.add_subcommand("train", "train a model and write best/final checkpoints");
  train_cmd->add_option("--mode", rc.mode, "model architecture")
      ->check(CLI::IsMember({"nmt", "lc-nmt"}))
      ->capture_default_str();
  train_cmd->add_option("--source", rc.source, "training source file")->required();
  train_cmd->add_option("--target", rc.target, "training target file")->required();
  train_cmd->add_option("--boundaries", rc.boundaries,
                        "sidecar of 1-based lines starting new documents");
  train_cmd->add_option("--val-source", rc.val_source, "validation source file")->required();
  train_cmd->add_option("--val-target", rc.val_target, "validation target file")->required();
  train_cmd->add_option("--val-boundaries", rc.val_boundaries,
                        "validation boundary sidecar");
  train_cmd->add_option("--out-prefix", rc.out_prefix, "prefix for checkpoints and log")
      ->capture_default_str();
  train_cmd->add_option("--word-dim", rc.word_dim, "word embedding size")
      ->capture_default_str();
  train_cmd->add_option("--enc-hidden", rc.enc_hidden, "encoder hidden size per direction")
      ->capture_default_str();
  train_cmd->add_option("--dec-hidden", rc.dec_hidden, "decoder hidden size")
      ->capture_default_str();
  train_cmd->add_option("--ctx-hidden", rc.ctx_hidden,
                        "context encoder hidden size per direction (lc-nmt)")
      ->capture_default_str();
  train_cmd->add_option("--attn-hidden", rc.attn_hidden, "attention hidden size")
      ->capture_default_str();
  train_cmd->add_option("--dropout", rc.dropout, "dropout rate before the readout")
      ->capture_default_str();
  train_cmd->add_option("--vocab-size", rc.vocab_size, "max vocabulary size per side")
      ->capture_default_str();
  train_cmd->add_option("--min-count", rc.min_count, "min token count for the vocabulary")
      ->capture_default_str();
  train_cmd->add_option("--batch-size", rc.batch_size, "examples per minibatch")
      ->capture_default_str();
  train_cmd->add_option("--clip-norm", rc.clip_norm, "global gradient norm clip")
      ->capture_default_str();
  train_cmd->add_option("--max-epochs", rc.max_epochs, "epoch budget")
      ->capture_default_str();
  train_cmd->add_option("--patience", rc.patience,
                        "non-improving validations tolerated before stopping")
      ->capture_default_str();
  train_cmd->add_option("--val-interval", rc.val_interval, "steps between validations")
      ->capture_default_str();
  train_cmd->add_option("--fraction", rc.fraction,
                        "train on this share of the corpus (e.g. 0.05, 0.1, 0.2, 0.4, 1.0)")
      ->capture_default_str();
  train_cmd->add_option("--seed", rc.seed, "seed for init, shuffling, and subsampling")
      ->capture_default_str();
  train_cmd->add_option("--max-decode-len", rc.max_decode_len,
                        "greedy budget during validation")
      ->capture_default_str();
  add_threads_flag(train_cmd, rc);

  CLI::App* translate_cmd =
      app.add_subcommand("translate", "decode a source file with a trained checkpoint");
  translate_cmd->add_option("--checkpoint", rc.checkpoint, "model checkpoint")->required();
  translate_cmd->add_option("--source", rc.source, "source file, one sentence per line")
      ->required();
  translate_cmd->add_option("--boundaries", rc.boundaries,
                            "sidecar of 1-based lines starting new documents");
  translate_cmd->add_option("--output", rc.output, "output file, - for stdout")
      ->capture_default_str();
  translate_cmd->add_option("--beam", rc.beam, "beam width")->capture_default_str();
  translate_cmd->add_option("--max-len", rc.max_len, "max output tokens per sentence")
      ->capture_default_str();
  translate_cmd->add_flag("--length-norm,!--no-length-norm", rc.length_norm,
                          "rank finished hypotheses by length-normalized score");
  add_threads_flag(translate_cmd, rc);

  CLI::App* predict_cmd = app.add_subcommand(
      "predict-pronouns", "fill pronoun slots by whole-sentence model score");
  predict_cmd->add_option("--checkpoint", rc.checkpoint, "model checkpoint")->required();
  predict_cmd->add_option("--task", rc.task, "task file: source TAB target TAB gold...")
      ->required();
  predict_cmd->add_option("--pairs", rc.pairs, "pronoun class inventory")
      ->check(CLI::IsMember({"en-fr", "en-de", "synthetic"}))
      ->capture_default_str();
  predict_cmd->add_option("--cap", rc.cap, "max candidate fillings per instance")
      ->capture_default_str();
  predict_cmd->add_option("--output", rc.output, "predictions file, - for stdout")
      ->capture_default_str();
  add_threads_flag(predict_cmd, rc);

  CLI::App* score_cmd =
      app.add_subcommand("score", "BLEU and RIBES for a hypothesis/reference pair");
  score_cmd->add_option("--hyp", rc.hyp, "hypothesis file")->required();
  score_cmd->add_option("--ref", rc.ref, "reference file")->required();

  CLI::App* synth_cmd =
      app.add_subcommand("make-synthetic", "generate synthetic corpora");
  synth_cmd->add_option("--task", rc.kind, "corpus family")
      ->check(CLI::IsMember({"copy", "context-pronoun"}))
      ->capture_default_str();
  synth_cmd->add_option("--size", rc.size, "number of documents")->capture_default_str();
  synth_cmd->add_option("--vocab-size", rc.synth_vocab, "filler word inventory size")
      ->capture_default_str();
  synth_cmd->add_option("--seed", rc.seed, "generator seed (validation uses seed+1)")
      ->capture_default_str();
  synth_cmd->add_option("--out-prefix", rc.out_prefix, "output file prefix")
      ->capture_default_str();
  synth_cmd->add_option("--val-size", rc.val_size,
                        "also write a validation split of this many documents")
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (train_cmd->parsed()) return cmd_train(rc);
    if (translate_cmd->parsed()) return cmd_translate(rc);
    if (predict_cmd->parsed()) return cmd_predict_pronouns(rc);
    if (score_cmd->parsed()) return cmd_score(rc);
    if (synth_cmd->parsed()) return cmd_make_synthetic(rc);
    std::cerr << "error: no command\n";
    return 1;
  } catch (const VocabError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
