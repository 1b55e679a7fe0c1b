#include "s2t/experiment.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>

#include <nlohmann/json.hpp>

namespace s2t::experiment {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path or_default(const std::string& configured, const fs::path& fallback) {
  return configured.empty() ? fallback : fs::path(configured);
}

void require_file(const fs::path& p, const std::string& what) {
  if (!fs::exists(p)) throw Error(what + " not found: " + p.string());
}

eval::MatchResources load_resources(const RunConfig& cfg) {
  eval::MatchResources res;
  if (!cfg.paths.synonyms.empty()) res.synonyms = eval::EquivalenceTable::load(cfg.paths.synonyms);
  if (!cfg.paths.paraphrases.empty()) res.paraphrases = eval::EquivalenceTable::load(cfg.paths.paraphrases);
  return res;
}

eval::EvalOptions eval_options(const RunConfig& cfg) {
  eval::EvalOptions o;
  o.meteor = cfg.eval.meteor;
  o.bleu_max_n = cfg.eval.bleu_max_n;
  return o;
}

infer::DecodeOptions decode_options(const RunConfig& cfg, const model::ModelConfig& m) {
  infer::DecodeOptions o;
  o.beam = m.beam;
  o.max_len = cfg.eval.max_len;
  o.length_penalty = cfg.eval.length_penalty;
  return o;
}

corpus::Vocabulary vocab_for_checkpoint(const RunPaths& paths, const RunConfig& cfg, const Checkpoint& ckpt) {
  fs::path vocab_path;
  if (!cfg.paths.vocab.empty()) {
    vocab_path = cfg.paths.vocab;
  } else if (!ckpt.vocab_path.empty()) {
    vocab_path = fs::path(ckpt.vocab_path);
    if (vocab_path.is_relative()) vocab_path = paths.checkpoint.parent_path() / vocab_path;
  } else {
    vocab_path = paths.vocab;
  }
  require_file(vocab_path, "vocabulary");
  auto vocab = corpus::Vocabulary::load(vocab_path, ckpt.config.decoder_level);
  if (vocab.size() != ckpt.config.vocab_size) {
    throw FormatError("vocabulary " + vocab_path.string() + " has " + std::to_string(vocab.size()) +
                      " entries but the checkpoint expects " + std::to_string(ckpt.config.vocab_size));
  }
  return vocab;
}

std::vector<std::vector<std::string>> first_translations(const std::vector<corpus::Utterance>& utts) {
  std::vector<std::vector<std::string>> out;
  for (const auto& u : utts) out.push_back(u.translations.at(0));
  return out;
}

}  // namespace

RunPaths resolve_paths(const RunConfig& cfg, const fs::path& run_dir) {
  RunPaths p;
  p.run_dir = run_dir;
  p.train_manifest = or_default(cfg.paths.train_manifest, run_dir / "train.jsonl");
  p.dev_manifest = or_default(cfg.paths.dev_manifest, run_dir / "dev.jsonl");
  p.test_manifest = or_default(cfg.paths.test_manifest, p.dev_manifest);
  p.vocab = or_default(cfg.paths.vocab, run_dir / "vocab.txt");
  p.checkpoint = or_default(cfg.paths.checkpoint, run_dir / "best.ckpt");
  p.hyps = or_default(cfg.paths.hyps, run_dir / "hyps.jsonl");
  p.hyps_explicit = !cfg.paths.hyps.empty();
  return p;
}

LoadedCorpus load_corpus(const fs::path& manifest) {
  require_file(manifest, "manifest");
  LoadedCorpus c;
  c.utts = corpus::read_manifest(manifest);
  for (const auto& u : c.utts) {
    fs::path p = u.feature_path;
    if (p.is_relative()) p = manifest.parent_path() / p;
    c.feats.push_back(features::read_features(p));
  }
  return c;
}

fs::path prepare_features(const RunConfig& cfg, const fs::path& run_dir) {
  if (cfg.paths.audio_manifest.empty()) throw InvalidArgument("prepare-features needs paths.audio_manifest");
  const fs::path audio_manifest = cfg.paths.audio_manifest;
  require_file(audio_manifest, "audio manifest");
  const auto paths = resolve_paths(cfg, run_dir);
  fs::create_directories(run_dir / "features");
  std::ifstream in(audio_manifest);
  std::vector<corpus::Utterance> utts;
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const std::exception& e) {
      throw FormatError(audio_manifest.string() + ":" + std::to_string(n) + ": " + e.what());
    }
    corpus::Utterance u;
    u.id = j.at("id").get<std::string>();
    fs::path audio = j.at("audio").get<std::string>();
    if (audio.is_relative()) audio = audio_manifest.parent_path() / audio;
    std::vector<std::string> raw;
    if (j.contains("translations")) {
      raw = j.at("translations").get<std::vector<std::string>>();
    } else {
      raw.push_back(j.at("translation").get<std::string>());
    }
    for (const auto& t : raw) u.translations.push_back(corpus::normalize_and_tokenize(t));
    const auto feats = features::extract_filterbank(features::read_wav(audio), cfg.frontend);
    u.n_frames = feats.n_frames;
    u.feature_path = "features/" + u.id + ".fbk";
    features::write_features(run_dir / u.feature_path, feats);
    utts.push_back(std::move(u));
  }
  // Feature paths are relative to the run directory, so the manifest must sit
  // there; a configured train_manifest elsewhere gets absolute paths.
  fs::path out = paths.train_manifest;
  if (fs::absolute(out.parent_path()) != fs::absolute(run_dir)) {
    for (auto& u : utts) u.feature_path = fs::absolute(run_dir / u.feature_path).string();
  }
  corpus::write_manifest(out, utts);
  return out;
}

corpus::Vocabulary build_vocab(const RunConfig& cfg, const fs::path& run_dir) {
  const auto paths = resolve_paths(cfg, run_dir);
  require_file(paths.train_manifest, "training manifest");
  const auto utts = corpus::read_manifest(paths.train_manifest);
  auto vocab = corpus::Vocabulary::build(first_translations(utts), cfg.vocab_min_count, cfg.model.decoder_level);
  fs::create_directories(paths.vocab.parent_path().empty() ? fs::path(".") : paths.vocab.parent_path());
  vocab.save(paths.vocab);
  return vocab;
}

corpus::SynthCorpus synth_corpus(const RunConfig& cfg, const fs::path& run_dir) {
  corpus::SynthConfig sc;
  sc.n_utts = cfg.synth.n_train + cfg.synth.n_dev;
  sc.vocab_size = cfg.synth.vocab_size;
  sc.min_words = cfg.synth.min_words;
  sc.max_words = cfg.synth.max_words;
  sc.n_mels = cfg.frontend.n_mels;
  sc.min_signature_frames = cfg.synth.min_signature_frames;
  sc.max_signature_frames = cfg.synth.max_signature_frames;
  sc.noise = cfg.synth.noise;
  sc.seed = sub_seed(cfg.seed, "synth");
  auto synth = corpus::synth_corpus(sc);
  fs::create_directories(run_dir / "features");
  for (size_t i = 0; i < synth.utts.size(); ++i) {
    auto& u = synth.utts[i];
    u.feature_path = "features/" + u.id + ".fbk";
    features::write_features(run_dir / u.feature_path, synth.feats[i]);
  }
  const auto n_train = static_cast<size_t>(cfg.synth.n_train);
  std::vector<corpus::Utterance> train(synth.utts.begin(), synth.utts.begin() + static_cast<ptrdiff_t>(n_train));
  std::vector<corpus::Utterance> dev(synth.utts.begin() + static_cast<ptrdiff_t>(n_train), synth.utts.end());
  if (dev.empty()) dev = train;
  corpus::write_manifest(run_dir / "train.jsonl", train);
  corpus::write_manifest(run_dir / "dev.jsonl", dev);
  return synth;
}

train::TrainResult run_train(const RunConfig& cfg, const fs::path& run_dir) {
  const auto paths = resolve_paths(cfg, run_dir);
  require_file(paths.train_manifest, "training manifest");
  require_file(paths.dev_manifest, "dev manifest");
  corpus::Vocabulary vocab;
  if (fs::exists(paths.vocab)) {
    vocab = corpus::Vocabulary::load(paths.vocab, cfg.model.decoder_level);
  } else {
    vocab = build_vocab(cfg, run_dir);
  }
  const auto train_set = corpus::load_examples(paths.train_manifest, vocab);
  const auto dev_set = corpus::load_examples(paths.dev_manifest, vocab);
  auto tc = cfg.train;
  tc.out_dir = run_dir;
  tc.vocab_path = fs::relative(fs::absolute(paths.vocab), fs::absolute(run_dir)).string();
  write_resolved_config(run_dir, cfg);
  auto result = train::train_loop(train_set, dev_set, vocab, cfg.model, tc);
  if (result.log.diverged) throw Error("training diverged: " + result.log.diagnostic);
  // train_loop keeps best.ckpt in run_dir; honour a configured location too.
  if (paths.checkpoint != run_dir / "best.ckpt") {
    save_checkpoint(paths.checkpoint, result.best.params, result.best.config,
                    fs::relative(fs::absolute(paths.vocab), fs::absolute(paths.checkpoint.parent_path())).string());
  }
  return result;
}

std::vector<infer::Translation> run_translate(const RunConfig& cfg, const fs::path& run_dir) {
  const auto paths = resolve_paths(cfg, run_dir);
  require_file(paths.checkpoint, "checkpoint");
  require_file(paths.test_manifest, "manifest");
  const auto ckpt = load_checkpoint(paths.checkpoint);
  const auto vocab = vocab_for_checkpoint(paths, cfg, ckpt);
  const auto utts = corpus::read_manifest(paths.test_manifest);
  auto rows = infer::batch_translate(utts, paths.test_manifest.parent_path(), ckpt.params, ckpt.config, vocab,
                                     cfg.eval.mode, decode_options(cfg, ckpt.config));
  fs::create_directories(run_dir);
  infer::write_translations(paths.hyps, rows);
  return rows;
}

eval::EvalReport run_evaluate(const RunConfig& cfg, const fs::path& run_dir) {
  const auto paths = resolve_paths(cfg, run_dir);
  require_file(paths.test_manifest, "reference manifest");
  std::vector<infer::Translation> translations;
  if (paths.hyps_explicit || fs::exists(paths.hyps)) {
    require_file(paths.hyps, "hypothesis file");
    translations = infer::read_translations(paths.hyps);
  } else {
    translations = run_translate(cfg, run_dir);
  }
  if (translations.empty()) throw Error("hypothesis file has no entries: " + paths.hyps.string());
  std::map<std::string, const infer::Translation*> by_id;
  for (const auto& t : translations) by_id[t.id] = &t;
  const auto utts = corpus::read_manifest(paths.test_manifest);
  std::vector<eval::Tokens> hyps;
  eval::ReferenceSet refs;
  for (const auto& u : utts) {
    auto it = by_id.find(u.id);
    if (it == by_id.end()) throw Error("no hypothesis for utterance " + u.id + " in " + paths.hyps.string());
    if (!it->second->error.empty()) throw Error("utterance " + u.id + " failed to decode: " + it->second->error);
    hyps.push_back(it->second->tokens);
    refs.push_back(u.translations);
  }
  std::optional<eval::TokenCounts> counts;
  if (fs::exists(paths.train_manifest)) counts = corpus::token_counts(corpus::read_manifest(paths.train_manifest));
  auto report = eval::evaluate(hyps, refs, load_resources(cfg), counts ? &*counts : nullptr, eval_options(cfg));
  fs::create_directories(run_dir);
  std::ofstream out(run_dir / "report.json");
  out << eval::to_json(report).dump(2) << '\n';
  return report;
}

std::vector<train::AblationRow> run_ablate(const RunConfig& cfg, const fs::path& run_dir) {
  const auto paths = resolve_paths(cfg, run_dir);
  auto train_corpus = load_corpus(paths.train_manifest);
  auto dev_corpus = load_corpus(paths.dev_manifest);
  train::AblationInput input{std::move(train_corpus.utts), std::move(train_corpus.feats), std::move(dev_corpus.utts),
                             std::move(dev_corpus.feats), cfg.vocab_min_count};
  auto tc = cfg.train;
  tc.out_dir = run_dir / "ablation";
  tc.subset = corpus::SubsetSpec{1.0, sub_seed(cfg.seed, "subset"), true};
  write_resolved_config(run_dir, cfg);
  auto rows = train::ablate(input, cfg.ablate_fractions, cfg.model, tc, load_resources(cfg), eval_options(cfg));

  std::vector<MetricsRow> table;
  json summary = json::array();
  for (const auto& r : rows) {
    json j = {{"fraction", r.fraction}, {"hours", r.hours}, {"n_utts", r.n_utts}, {"variant", r.variant}};
    if (r.report) {
      j["report"] = eval::to_json(*r.report);
      table.push_back(metrics_row(r.hours, *r.report, r.variant));
    }
    if (!r.error.empty()) j["error"] = r.error;
    summary.push_back(j);
  }
  std::ofstream(run_dir / "ablation.json") << summary.dump(2) << '\n';
  std::ofstream(run_dir / "metrics.csv", std::ios::binary) << emit_metrics_table(table);
  return rows;
}

MetricsRow metrics_row(double hours, const eval::EvalReport& report, const std::string& variant) {
  return {hours,
          report.bleu.score,
          report.meteor.score,
          report.precision_unigram,
          report.recall_staged,
          report.recall_exact,
          variant};
}

std::string emit_metrics_table(std::vector<MetricsRow> rows) {
  std::stable_sort(rows.begin(), rows.end(), [](const MetricsRow& a, const MetricsRow& b) {
    if (a.hours != b.hours) return a.hours < b.hours;
    return a.variant < b.variant;
  });
  std::string out = "hours,bleu,meteor,precision,recall_staged,recall_exact,variant\n";
  char buf[256];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%.6f,%.4f,%.6f,%.6f,%.6f,%.6f,", r.hours, r.bleu, r.meteor, r.precision,
                  r.recall_staged, r.recall_exact);
    out += buf + r.variant + "\n";
  }
  return out;
}

}  // namespace s2t::experiment
