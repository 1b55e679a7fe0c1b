#include "s2t/train.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace s2t::train {

using corpus::Example;
using corpus::Vocabulary;

void TrainConfig::validate() const {
  if (max_epochs < 1) throw InvalidArgument("train.max_epochs must be >= 1");
  if (patience < 1) throw InvalidArgument("train.patience must be >= 1");
  if (!(lr > 0.0)) throw InvalidArgument("train.lr must be positive");
  if (clip_norm < 0.0) throw InvalidArgument("train.clip_norm must be >= 0");
}

namespace {

std::string format_row(const EpochRecord& r, bool with_timing) {
  char buf[256];
  if (with_timing) {
    std::snprintf(buf, sizeof buf, "%d,%.9g,%.6f,%.3f,%.1f", r.epoch, r.loss, r.dev_bleu, r.seconds, r.tokens_per_sec);
  } else {
    std::snprintf(buf, sizeof buf, "%d,%.9g,%.6f", r.epoch, r.loss, r.dev_bleu);
  }
  return buf;
}

}  // namespace

std::string TrainLog::to_csv(bool with_timing) const {
  std::string out = with_timing ? "epoch,loss,dev_bleu,seconds,tokens_per_sec\n" : "epoch,loss,dev_bleu\n";
  for (const auto& r : epochs) out += format_row(r, with_timing) + "\n";
  return out;
}

void TrainLog::write_csv(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write train log: " + path.string());
  out << to_csv(true);
}

TrainLog TrainLog::read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open train log: " + path.string());
  TrainLog log;
  std::string line;
  std::getline(in, line);
  if (line != "epoch,loss,dev_bleu,seconds,tokens_per_sec") throw FormatError("unexpected train log header: " + path.string());
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    EpochRecord r;
    if (std::sscanf(line.c_str(), "%d,%lf,%lf,%lf,%lf", &r.epoch, &r.loss, &r.dev_bleu, &r.seconds,
                    &r.tokens_per_sec) != 5) {
      throw FormatError("malformed train log row in " + path.string() + ": " + line);
    }
    log.epochs.push_back(r);
  }
  return log;
}

DecodedSet decode_set(const std::vector<Example>& set, const nn::ParameterSet<float>& params,
                      const model::ModelConfig& cfg, const Vocabulary& vocab, infer::Mode mode,
                      const infer::DecodeOptions& options) {
  DecodedSet out;
  out.translations = infer::batch_translate(set, params, cfg, vocab, mode, options);
  for (size_t i = 0; i < set.size(); ++i) {
    if (!out.translations[i].error.empty()) {
      throw Error("decoding " + set[i].utt.id + " failed: " + out.translations[i].error);
    }
    out.hyps.push_back(out.translations[i].tokens);
    out.refs.push_back(set[i].utt.translations);
  }
  return out;
}

eval::BleuResult evaluate_dev(const std::vector<Example>& dev_set, const nn::ParameterSet<float>& params,
                              const model::ModelConfig& cfg, const Vocabulary& vocab, infer::Mode mode,
                              const infer::DecodeOptions& options) {
  if (dev_set.empty()) throw InvalidArgument("evaluate_dev: no dev utterances to decode");
  for (const auto& ex : dev_set) {
    if (ex.utt.translations.empty()) throw InvalidArgument("evaluate_dev: utterance " + ex.utt.id + " has no references");
  }
  const auto decoded = decode_set(dev_set, params, cfg, vocab, mode, options);
  return eval::bleu_corpus(decoded.hyps, decoded.refs);
}

namespace {

struct Paths {
  std::filesystem::path last_ckpt, last_state, best_ckpt, log;
  explicit Paths(const std::filesystem::path& dir)
      : last_ckpt(dir / "last.ckpt"), last_state(dir / "last.state"), best_ckpt(dir / "best.ckpt"),
        log(dir / "train_log.csv") {}
};

}  // namespace

TrainResult train_loop(const std::vector<Example>& train_set, const std::vector<Example>& dev_set,
                       const Vocabulary& vocab, model::ModelConfig cfg, const TrainConfig& tc) {
  tc.validate();
  if (train_set.empty()) throw InvalidArgument("train_loop: empty training set");
  if (dev_set.empty()) throw InvalidArgument("train_loop: empty dev set");
  cfg.vocab_size = vocab.size();
  cfg.decoder_level = vocab.level();
  cfg.validate();

  TrainResult res;
  TrainerState state;
  state.optimizer.config.lr = tc.lr;
  state.optimizer.config.l2 = cfg.l2;
  state.optimizer.config.clip_norm = tc.clip_norm;
  nn::ParameterSet<float> params = model::init_params<float>(cfg, tc.seed);

  const bool persist = !tc.out_dir.empty();
  std::optional<Paths> paths;
  if (persist) {
    std::filesystem::create_directories(tc.out_dir);
    paths.emplace(tc.out_dir);
  }
  if (persist && tc.resume && std::filesystem::exists(paths->last_state)) {
    auto last = load_checkpoint(paths->last_ckpt);
    if (!(last.config == cfg)) throw InvalidArgument("resume: checkpoint config differs from the requested model config");
    params = std::move(last.params);
    state = load_trainer_state(paths->last_state);
    res.log = TrainLog::read_csv(paths->log);
    res.best = load_checkpoint(paths->best_ckpt);
    if (static_cast<int>(res.log.epochs.size()) != state.epochs_done) {
      throw FormatError("resume: train log and trainer state disagree in " + tc.out_dir.string());
    }
  }
  if (state.epochs_done == 0) res.best = {cfg, params.cast<float>(), tc.vocab_path};

  infer::DecodeOptions decode_options;
  decode_options.beam = cfg.beam;
  decode_options.max_len = tc.eval_max_len;

  for (int epoch = state.epochs_done + 1; epoch <= tc.max_epochs; ++epoch) {
    if (state.epochs_done > 0 && state.epochs_since_best >= tc.patience) break;
    const auto start = std::chrono::steady_clock::now();
    auto batches = corpus::make_batches(train_set, cfg.max_batch, sub_seed(tc.seed, "data", static_cast<uint64_t>(epoch)),
                                        vocab.level());
    double loss_sum = 0.0;
    int64_t tokens = 0, correct = 0;
    for (size_t k = 0; k < batches.size(); ++k) {
      nn::Tape<float> tape;
      model::RunOptions run;
      run.training = true;
      run.seed = sub_seed(tc.seed, "batch", static_cast<uint64_t>(epoch), k);
      run.per_step_dropout = tc.per_step_dropout;
      run.tf_ratio = cfg.tf_ratio;
      auto out = model::forward_loss(tape, params, cfg, batches[k], run);
      const double loss = static_cast<double>(tape.value(out.loss)(0, 0));
      if (!std::isfinite(loss)) {
        res.log.diverged = true;
        res.log.diagnostic = "non-finite loss at epoch " + std::to_string(epoch) + ", batch " + std::to_string(k) +
                             " (bucket " + std::to_string(batches[k].bucket_id) + ")";
        break;
      }
      tape.backward(out.loss);
      nn::optimizer_step(params, state.optimizer);
      loss_sum += loss * static_cast<double>(out.tokens);
      tokens += out.tokens;
      correct += out.correct;
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (res.log.diverged) break;

    EpochRecord rec;
    rec.epoch = epoch;
    rec.loss = loss_sum / static_cast<double>(tokens);
    rec.seconds = seconds;
    rec.tokens_per_sec = seconds > 0.0 ? static_cast<double>(tokens) / seconds : 0.0;
    rec.token_accuracy = static_cast<double>(correct) / static_cast<double>(tokens);
    rec.dev_bleu = evaluate_dev(dev_set, params, cfg, vocab, tc.eval_mode, decode_options).score;
    res.log.epochs.push_back(rec);

    state.epochs_done = epoch;
    if (rec.dev_bleu > state.best_bleu) {
      state.best_bleu = rec.dev_bleu;
      state.best_epoch = epoch;
      state.epochs_since_best = 0;
      res.best = {cfg, params.cast<float>(), tc.vocab_path};
    } else {
      ++state.epochs_since_best;
    }
    if (persist) {
      save_checkpoint(paths->last_ckpt, params, cfg, tc.vocab_path);
      save_trainer_state(paths->last_state, state);
      if (state.best_epoch == epoch) save_checkpoint(paths->best_ckpt, params, cfg, tc.vocab_path);
      res.log.write_csv(paths->log);
    }
  }
  if (persist && res.log.diverged) {
    std::ofstream diag(tc.out_dir / "diverged.txt");
    diag << res.log.diagnostic << '\n';
  }
  res.final_params = std::move(params);
  res.best_epoch = state.best_epoch;
  res.best_bleu = std::max(state.best_bleu, 0.0);
  return res;
}

std::string variant_name(const model::ModelConfig& cfg, infer::Mode mode) {
  std::string out = cfg.decoder_level == corpus::Level::word ? "word" : "char";
  out += cfg.enc_direction == model::Direction::bi ? "-bi-" : "-uni-";
  out += infer::to_string(mode);
  return out;
}

std::vector<AblationRow> ablate(const AblationInput& input, const std::vector<double>& fractions,
                                const model::ModelConfig& cfg, const TrainConfig& tc,
                                const eval::MatchResources& resources, const eval::EvalOptions& eval_options) {
  if (input.train_utts.size() != input.train_feats.size() || input.dev_utts.size() != input.dev_feats.size()) {
    throw InvalidArgument("ablate: utterances and features are not aligned");
  }
  for (double f : fractions) {
    if (!(f > 0.0 && f <= 1.0)) throw InvalidArgument("ablate: fractions must lie in (0, 1]");
  }
  const double total_hours = corpus::corpus_hours(input.train_utts);
  const uint64_t subset_seed = tc.subset ? tc.subset->seed : sub_seed(tc.seed, "ablate");
  std::vector<AblationRow> rows;
  for (double f : fractions) {
    AblationRow row;
    row.fraction = f;
    model::ModelConfig run_cfg = cfg;
    run_cfg.decoder_level = tc.level;
    row.variant = variant_name(run_cfg, tc.eval_mode);
    try {
      auto idx = corpus::sample_subset(input.train_utts, {f * total_hours, subset_seed, true});
      // Keep corpus order so the full fraction matches a plain run.
      std::sort(idx.begin(), idx.end());
      std::vector<corpus::Utterance> utts;
      std::vector<features::FeatureMatrix> feats;
      std::vector<std::vector<std::string>> targets;
      for (size_t i : idx) {
        utts.push_back(input.train_utts[i]);
        feats.push_back(input.train_feats[i]);
        targets.push_back(input.train_utts[i].translations.at(0));
      }
      row.hours = corpus::corpus_hours(utts);
      row.n_utts = utts.size();
      const auto vocab = Vocabulary::build(targets, input.min_count, tc.level);
      const auto train_set = corpus::make_examples(utts, feats, vocab);
      const auto dev_set = corpus::make_examples(input.dev_utts, input.dev_feats, vocab);

      TrainConfig run_tc = tc;
      run_tc.subset.reset();
      if (!tc.out_dir.empty()) {
        char name[64];
        std::snprintf(name, sizeof name, "fraction_%.4f", f);
        run_tc.out_dir = tc.out_dir / name;
      }
      auto result = train_loop(train_set, dev_set, vocab, run_cfg, run_tc);
      if (result.log.diverged) throw Error(result.log.diagnostic);

      infer::DecodeOptions opts;
      opts.beam = result.best.config.beam;
      opts.max_len = tc.eval_max_len;
      const auto decoded = decode_set(dev_set, result.best.params, result.best.config, vocab, tc.eval_mode, opts);
      const auto counts = corpus::token_counts(utts);
      row.report = eval::evaluate(decoded.hyps, decoded.refs, resources, &counts, eval_options);
      row.result = std::move(result);
    } catch (const std::exception& e) {
      row.error = e.what();
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace s2t::train
