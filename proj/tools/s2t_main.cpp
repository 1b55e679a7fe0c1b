// s2t: command-line driver for feature preparation, training, decoding,
// scoring and the data-ablation experiment.
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "s2t/experiment.hpp"

namespace {

struct CommonArgs {
  std::string config;
  std::optional<uint64_t> seed;
  std::string out = "run";
  std::vector<std::string> sets;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config, "key=value config file");
  cmd->add_option("--seed", args.seed, "top-level seed (overrides the config)");
  cmd->add_option("--out", args.out, "run directory")->capture_default_str();
  cmd->add_option("--set", args.sets, "override one key: --set key=value (repeatable)");
}

s2t::RunConfig resolve(const CommonArgs& args) {
  std::vector<std::pair<std::string, std::string>> overrides;
  for (const auto& s : args.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw CLI::ValidationError("--set", "expected key=value, got '" + s + "'");
    overrides.emplace_back(s.substr(0, eq), s.substr(eq + 1));
  }
  if (args.seed) overrides.emplace_back("seed", std::to_string(*args.seed));
  std::optional<std::filesystem::path> file;
  if (!args.config.empty()) file = args.config;
  return s2t::parse_config(file, overrides);
}

int run(const std::string& name, const CommonArgs& args, const s2t::RunConfig& cfg) {
  namespace ex = s2t::experiment;
  const std::filesystem::path out = args.out;
  std::filesystem::create_directories(out);
  s2t::write_resolved_config(out, cfg);

  if (name == "prepare-features") {
    std::cout << "wrote " << ex::prepare_features(cfg, out).string() << '\n';
  } else if (name == "build-vocab") {
    const auto vocab = ex::build_vocab(cfg, out);
    std::cout << "vocabulary: " << vocab.size() << " entries\n";
  } else if (name == "synth-corpus") {
    const auto synth = ex::synth_corpus(cfg, out);
    std::cout << "synthesized " << synth.utts.size() << " utterances over " << synth.words.size() << " words\n";
  } else if (name == "train") {
    const auto result = ex::run_train(cfg, out);
    for (const auto& r : result.log.epochs) {
      std::printf("epoch %3d  loss %.4f  acc %.4f  dev_bleu %.2f  %.2fs\n", r.epoch, r.loss, r.token_accuracy,
                  r.dev_bleu, r.seconds);
    }
    std::printf("best epoch %d, dev BLEU %.2f\n", result.best_epoch, result.best_bleu);
  } else if (name == "translate") {
    const auto rows = ex::run_translate(cfg, out);
    size_t failed = 0;
    for (const auto& r : rows) {
      if (!r.error.empty()) {
        ++failed;
        std::cerr << r.id << ": " << r.error << '\n';
      }
    }
    std::cout << "translated " << rows.size() - failed << "/" << rows.size() << " utterances\n";
    if (failed) return 2;
  } else if (name == "evaluate") {
    const auto report = ex::run_evaluate(cfg, out);
    std::cout << s2t::eval::to_json(report).dump(2) << '\n';
  } else if (name == "ablate") {
    const auto rows = ex::run_ablate(cfg, out);
    bool any_failed = false;
    for (const auto& r : rows) {
      if (!r.error.empty()) {
        any_failed = true;
        std::cerr << "fraction " << r.fraction << ": " << r.error << '\n';
      }
    }
    std::ifstream table(out / "metrics.csv");
    std::cout << table.rdbuf();
    if (any_failed) return 2;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Speech-to-text translation toolkit"};
  app.require_subcommand(0, 1);
  CommonArgs args;
  const std::vector<std::pair<std::string, std::string>> commands = {
      {"prepare-features", "extract log-Mel filterbank features for an audio manifest"},
      {"build-vocab", "build the target vocabulary from the training manifest"},
      {"synth-corpus", "write a synthetic corpus with train and dev manifests"},
      {"train", "train a model with dev-BLEU early stopping"},
      {"translate", "decode a manifest with a trained checkpoint"},
      {"evaluate", "score hypotheses against references"},
      {"ablate", "train on nested data fractions and emit a metrics table"},
  };
  for (const auto& [name, help] : commands) add_common(app.add_subcommand(name, help), args);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return 1;
  }
  if (app.get_subcommands().empty()) {
    std::cerr << app.help();
    return 1;
  }
  const std::string name = app.get_subcommands().front()->get_name();
  s2t::RunConfig cfg;
  try {
    cfg = resolve(args);
  } catch (const std::exception& e) {
    // Bad keys or values are usage errors.
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  try {
    return run(name, args, cfg);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
