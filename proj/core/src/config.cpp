#include "s2t/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

namespace s2t {

namespace {

[[noreturn]] void bad_value(const std::string& key, const std::string& expect, const std::string& value) {
  throw InvalidArgument("config key '" + key + "' expects " + expect + ", got '" + value + "'");
}

template <typename Int>
Int as_int(const std::string& key, const std::string& v) {
  Int out{};
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (v.empty() || ec != std::errc() || ptr != v.data() + v.size()) bad_value(key, "an integer", v);
  return out;
}

double as_double(const std::string& key, const std::string& v) {
  try {
    size_t used = 0;
    const double d = std::stod(v, &used);
    if (used == v.size()) return d;
  } catch (const std::exception&) {
  }
  bad_value(key, "a number", v);
}

bool as_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  bad_value(key, "true|false", v);
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

std::string fmt_list(const std::vector<double>& xs) {
  std::string out;
  for (size_t i = 0; i < xs.size(); ++i) out += (i ? "," : "") + fmt(xs[i]);
  return out;
}

std::vector<double> as_list(const std::string& key, const std::string& v) {
  std::vector<double> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(as_double(key, item));
  if (out.empty()) bad_value(key, "a comma-separated list of numbers", v);
  return out;
}

struct Entry {
  std::string key;
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, const std::string&)> set;
};

#define S2T_INT(name, field) \
  Entry{name, [](const RunConfig& c) { return std::to_string(c.field); }, \
        [](RunConfig& c, const std::string& v) { c.field = as_int<decltype(c.field)>(name, v); }}
#define S2T_DOUBLE(name, field) \
  Entry{name, [](const RunConfig& c) { return fmt(c.field); }, \
        [](RunConfig& c, const std::string& v) { c.field = as_double(name, v); }}
#define S2T_BOOL(name, field) \
  Entry{name, [](const RunConfig& c) { return std::string(c.field ? "true" : "false"); }, \
        [](RunConfig& c, const std::string& v) { c.field = as_bool(name, v); }}
#define S2T_STRING(name, field) \
  Entry{name, [](const RunConfig& c) { return c.field; }, [](RunConfig& c, const std::string& v) { c.field = v; }}

const std::vector<Entry>& entries() {
  static const std::vector<Entry> table = [] {
    std::vector<Entry> t = {
        S2T_INT("seed", seed),
        S2T_DOUBLE("frontend.window_ms", frontend.window_ms),
        S2T_DOUBLE("frontend.hop_ms", frontend.hop_ms),
        S2T_INT("frontend.n_mels", frontend.n_mels),
        S2T_DOUBLE("frontend.fmin", frontend.fmin),
        S2T_DOUBLE("frontend.fmax", frontend.fmax),
        S2T_DOUBLE("frontend.log_floor", frontend.log_floor),
        S2T_BOOL("frontend.mean_subtract", frontend.mean_subtract),
        S2T_INT("train.max_epochs", train.max_epochs),
        S2T_INT("train.patience", train.patience),
        S2T_DOUBLE("train.lr", train.lr),
        S2T_DOUBLE("train.clip_norm", train.clip_norm),
        Entry{"train.eval_mode", [](const RunConfig& c) { return std::string(infer::to_string(c.train.eval_mode)); },
              [](RunConfig& c, const std::string& v) {
                try {
                  c.train.eval_mode = infer::parse_mode(v);
                } catch (const InvalidArgument&) {
                  bad_value("train.eval_mode", "greedy|beam", v);
                }
              }},
        S2T_INT("train.eval_max_len", train.eval_max_len),
        S2T_BOOL("train.per_step_dropout", train.per_step_dropout),
        S2T_BOOL("train.resume", train.resume),
        Entry{"train.subset_hours",
              [](const RunConfig& c) { return fmt(c.train.subset ? c.train.subset->target_hours : 0.0); },
              [](RunConfig& c, const std::string& v) {
                const double h = as_double("train.subset_hours", v);
                if (h <= 0.0) {
                  c.train.subset.reset();
                } else {
                  if (!c.train.subset) c.train.subset = corpus::SubsetSpec{};
                  c.train.subset->target_hours = h;
                }
              }},
        S2T_INT("train.vocab_min_count", vocab_min_count),
        Entry{"train.ablate_fractions", [](const RunConfig& c) { return fmt_list(c.ablate_fractions); },
              [](RunConfig& c, const std::string& v) { c.ablate_fractions = as_list("train.ablate_fractions", v); }},
        S2T_STRING("paths.audio_manifest", paths.audio_manifest),
        S2T_STRING("paths.train_manifest", paths.train_manifest),
        S2T_STRING("paths.dev_manifest", paths.dev_manifest),
        S2T_STRING("paths.test_manifest", paths.test_manifest),
        S2T_STRING("paths.vocab", paths.vocab),
        S2T_STRING("paths.checkpoint", paths.checkpoint),
        S2T_STRING("paths.hyps", paths.hyps),
        S2T_STRING("paths.synonyms", paths.synonyms),
        S2T_STRING("paths.paraphrases", paths.paraphrases),
        S2T_DOUBLE("eval.alpha", eval.meteor.alpha),
        S2T_DOUBLE("eval.beta", eval.meteor.beta),
        S2T_DOUBLE("eval.gamma", eval.meteor.gamma),
        S2T_DOUBLE("eval.weight_exact", eval.meteor.weights.exact),
        S2T_DOUBLE("eval.weight_stem", eval.meteor.weights.stem),
        S2T_DOUBLE("eval.weight_synonym", eval.meteor.weights.synonym),
        S2T_DOUBLE("eval.weight_paraphrase", eval.meteor.weights.paraphrase),
        S2T_INT("eval.bleu_max_n", eval.bleu_max_n),
        Entry{"eval.mode", [](const RunConfig& c) { return std::string(infer::to_string(c.eval.mode)); },
              [](RunConfig& c, const std::string& v) {
                try {
                  c.eval.mode = infer::parse_mode(v);
                } catch (const InvalidArgument&) {
                  bad_value("eval.mode", "greedy|beam", v);
                }
              }},
        S2T_DOUBLE("eval.length_penalty", eval.length_penalty),
        S2T_INT("eval.max_len", eval.max_len),
        S2T_INT("synth.n_train", synth.n_train),
        S2T_INT("synth.n_dev", synth.n_dev),
        S2T_INT("synth.vocab_size", synth.vocab_size),
        S2T_INT("synth.min_words", synth.min_words),
        S2T_INT("synth.max_words", synth.max_words),
        S2T_INT("synth.min_signature_frames", synth.min_signature_frames),
        S2T_INT("synth.max_signature_frames", synth.max_signature_frames),
        S2T_DOUBLE("synth.noise", synth.noise),
    };
    // Model keys reuse the model's own parser; the two derived ones are left out.
    for (const auto& [k, unused] : model::to_key_values(model::ModelConfig{})) {
      if (k == "n_mels" || k == "vocab_size") continue;
      const std::string sub = k;
      const std::string full = "model." + sub;
      t.push_back(Entry{full,
                        [sub](const RunConfig& c) {
                          for (const auto& [kk, vv] : model::to_key_values(c.model)) {
                            if (kk == sub) return vv;
                          }
                          return std::string{};
                        },
                        [sub, full](RunConfig& c, const std::string& v) {
                          try {
                            model::set_key(c.model, sub, v);
                          } catch (const InvalidArgument& e) {
                            std::string msg = e.what();
                            const std::string quoted = "'" + sub + "'";
                            if (auto pos = msg.find(quoted); pos != std::string::npos) {
                              msg.replace(pos, quoted.size(), "'" + full + "'");
                            }
                            throw InvalidArgument(msg);
                          }
                        }});
    }
    std::sort(t.begin(), t.end(), [](const Entry& a, const Entry& b) { return a.key < b.key; });
    return t;
  }();
  return table;
}

#undef S2T_INT
#undef S2T_DOUBLE
#undef S2T_BOOL
#undef S2T_STRING

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

void set_key(RunConfig& cfg, const std::string& key, const std::string& value) {
  for (const auto& e : entries()) {
    if (e.key == key) {
      e.set(cfg, value);
      return;
    }
  }
  if (key == "model.n_mels") throw InvalidArgument("config key 'model.n_mels' is derived; set 'frontend.n_mels' instead");
  if (key == "model.vocab_size") throw InvalidArgument("config key 'model.vocab_size' is derived from the vocabulary");
  throw InvalidArgument("unknown config key '" + key + "'");
}

std::vector<std::pair<std::string, std::string>> to_key_values(const RunConfig& cfg) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& e : entries()) out.emplace_back(e.key, e.get(cfg));
  return out;
}

std::vector<std::string> config_keys() {
  std::vector<std::string> out;
  for (const auto& e : entries()) out.push_back(e.key);
  return out;
}

std::vector<std::pair<std::string, std::string>> parse_key_values(const std::string& text, const std::string& origin) {
  std::vector<std::pair<std::string, std::string>> out;
  std::istringstream in(text);
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw InvalidArgument(origin + ":" + std::to_string(n) + ": expected key=value, got '" + line + "'");
    }
    out.emplace_back(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return out;
}

void RunConfig::resolve() {
  model.n_mels = frontend.n_mels;
  train.seed = seed;
  train.level = model.decoder_level;
  if (train.subset) train.subset->seed = sub_seed(seed, "subset");
}

void RunConfig::validate() const {
  if (frontend.n_mels < 1) throw InvalidArgument("config key 'frontend.n_mels' must be >= 1");
  if (!(frontend.hop_ms > 0.0 && frontend.window_ms >= frontend.hop_ms)) {
    throw InvalidArgument("config keys 'frontend.hop_ms'/'frontend.window_ms' need 0 < hop <= window");
  }
  if (!(frontend.log_floor > 0.0)) throw InvalidArgument("config key 'frontend.log_floor' must be positive");
  if (vocab_min_count < 1) throw InvalidArgument("config key 'train.vocab_min_count' must be >= 1");
  for (double f : ablate_fractions) {
    if (!(f > 0.0 && f <= 1.0)) throw InvalidArgument("config key 'train.ablate_fractions' needs values in (0, 1]");
  }
  if (eval.bleu_max_n < 1) throw InvalidArgument("config key 'eval.bleu_max_n' must be >= 1");
  if (synth.n_train < 1) throw InvalidArgument("config key 'synth.n_train' must be >= 1");
  if (synth.n_dev < 0) throw InvalidArgument("config key 'synth.n_dev' must be >= 0");
  train.validate();
  eval.meteor.validate();
  // vocab_size is only known once a vocabulary exists.
  model::ModelConfig m = model;
  if (m.vocab_size < 1) m.vocab_size = corpus::Vocabulary::kNumSpecials + 1;
  m.validate();
}

RunConfig parse_config(const std::optional<std::filesystem::path>& file,
                       const std::vector<std::pair<std::string, std::string>>& overrides) {
  RunConfig cfg;
  if (file) {
    std::ifstream in(*file);
    if (!in) throw Error("cannot open config file: " + file->string());
    std::stringstream ss;
    ss << in.rdbuf();
    for (const auto& [k, v] : parse_key_values(ss.str(), file->string())) set_key(cfg, k, v);
  }
  for (const auto& [k, v] : overrides) set_key(cfg, k, v);
  cfg.resolve();
  cfg.validate();
  return cfg;
}

std::string serialize(const RunConfig& cfg) {
  std::string out;
  for (const auto& [k, v] : to_key_values(cfg)) out += k + "=" + v + "\n";
  return out;
}

void write_resolved_config(const std::filesystem::path& run_dir, const RunConfig& cfg) {
  std::filesystem::create_directories(run_dir);
  const auto path = run_dir / "resolved.conf";
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write resolved config: " + path.string());
  out << serialize(cfg);
}

}  // namespace s2t
