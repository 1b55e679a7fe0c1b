#include "s2t/corpus.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

#include <nlohmann/json.hpp>

namespace s2t::corpus {

using json = nlohmann::json;

std::string_view to_string(Level level) { return level == Level::word ? "word" : "character"; }

Level parse_level(std::string_view text) {
  if (text == "word") return Level::word;
  if (text == "character" || text == "char") return Level::character;
  throw InvalidArgument("unknown decoder level '" + std::string(text) + "'");
}

namespace {

size_t utf8_length(unsigned char lead) {
  if (lead < 0x80) return 1;
  if ((lead >> 5) == 0x6) return 2;
  if ((lead >> 4) == 0xe) return 3;
  if ((lead >> 3) == 0x1e) return 4;
  return 1;
}

bool is_word_char(std::string_view cp) {
  if (cp.size() == 1) return std::isalnum(static_cast<unsigned char>(cp[0])) != 0;
  // Non-ASCII: treat as a letter unless it is a known punctuation mark.
  static const std::string_view kPunct[] = {"¿", "¡", "«", "»", "“", "”", "‘", "—", "–", "…", "„", "·"};
  return std::find(std::begin(kPunct), std::end(kPunct), cp) == std::end(kPunct);
}

bool is_space(std::string_view cp) {
  return cp.size() == 1 && std::isspace(static_cast<unsigned char>(cp[0])) != 0;
}

}  // namespace

std::vector<std::string> utf8_chars(std::string_view token) {
  std::vector<std::string> out;
  for (size_t i = 0; i < token.size();) {
    size_t n = std::min(utf8_length(static_cast<unsigned char>(token[i])), token.size() - i);
    out.emplace_back(token.substr(i, n));
    i += n;
  }
  return out;
}

std::vector<std::string> normalize_and_tokenize(std::string_view raw) {
  auto chars = utf8_chars(raw);
  for (auto& c : chars) {
    if (c.size() == 1) {
      c[0] = static_cast<char>(std::tolower(static_cast<unsigned char>(c[0])));
    } else if (c == "’") {
      c = "'";
    }
  }
  std::vector<std::string> tokens;
  std::string current;
  auto flush = [&] {
    if (!current.empty()) tokens.push_back(std::move(current));
    current.clear();
  };
  for (size_t i = 0; i < chars.size(); ++i) {
    const auto& c = chars[i];
    if (is_space(c)) {
      flush();
    } else if (c == "'") {
      bool inner = !current.empty() && i + 1 < chars.size() && is_word_char(chars[i + 1]) &&
                   !is_space(chars[i + 1]) && chars[i + 1] != "'";
      if (inner) current += c;
    } else if (is_word_char(c)) {
      current += c;
    }
    // any other punctuation is deleted without introducing a boundary
  }
  flush();
  return tokens;
}

void Vocabulary::add(std::string token, int64_t count) {
  index_.emplace(token, static_cast<int>(tokens_.size()));
  counts_[token] = count;
  tokens_.push_back(std::move(token));
}

namespace {

void add_specials(std::vector<std::string>& names) {
  names = {"<pad>", "<s>", "</s>", "<unk>"};
}

}  // namespace

Vocabulary Vocabulary::build(const std::vector<std::vector<std::string>>& sequences, int min_count,
                             Level level) {
  if (min_count < 1) throw InvalidArgument("min_count must be >= 1");
  std::map<std::string, int64_t> counts;
  size_t total = 0;
  for (const auto& seq : sequences) {
    for (size_t i = 0; i < seq.size(); ++i) {
      ++total;
      if (level == Level::word) {
        ++counts[seq[i]];
      } else {
        for (auto& c : utf8_chars(seq[i])) ++counts[c];
        if (i + 1 < seq.size()) ++counts[std::string(kSpace)];
      }
    }
  }
  if (total == 0) throw InvalidArgument("cannot build a vocabulary from an empty corpus");

  std::vector<std::pair<std::string, int64_t>> kept;
  for (auto& [tok, n] : counts) {
    if (n >= min_count) kept.emplace_back(tok, n);
  }
  if (level == Level::character && counts.count(std::string(kSpace)) == 0) {
    kept.emplace_back(std::string(kSpace), 0);  // always present in the inventory
  }
  std::stable_sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });

  Vocabulary v;
  v.level_ = level;
  std::vector<std::string> specials;
  add_specials(specials);
  for (auto& s : specials) v.add(s, 0);
  for (auto& [tok, n] : kept) v.add(tok, n);
  return v;
}

Vocabulary Vocabulary::load(const std::filesystem::path& path, Level level) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open vocabulary file: " + path.string());
  Vocabulary v;
  v.level_ = level;
  std::vector<std::string> specials;
  add_specials(specials);
  for (auto& s : specials) v.add(s, 0);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) throw FormatError("empty line in vocabulary file " + path.string());
    if (v.index_.count(line)) throw FormatError("duplicate token '" + line + "' in " + path.string());
    v.add(line, 0);
  }
  return v;
}

void Vocabulary::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw Error("cannot write vocabulary file: " + path.string());
  for (size_t i = kNumSpecials; i < tokens_.size(); ++i) out << tokens_[i] << '\n';
}

int Vocabulary::id(std::string_view token) const {
  auto it = index_.find(std::string(token));
  if (it == index_.end() || it->second < kNumSpecials) return kUnk;
  return it->second;
}

bool Vocabulary::contains(std::string_view token) const { return id(token) != kUnk; }

const std::string& Vocabulary::token(int id) const {
  if (id < 0 || id >= size()) throw InvalidArgument("token id " + std::to_string(id) + " out of range");
  return tokens_[static_cast<size_t>(id)];
}

int64_t Vocabulary::count(std::string_view token) const {
  auto it = counts_.find(std::string(token));
  return it == counts_.end() ? 0 : it->second;
}

std::vector<int> Vocabulary::encode(const std::vector<std::string>& tokens) const {
  std::vector<int> ids;
  for (size_t i = 0; i < tokens.size(); ++i) {
    if (level_ == Level::word) {
      ids.push_back(id(tokens[i]));
    } else {
      for (auto& c : utf8_chars(tokens[i])) ids.push_back(id(c));
      if (i + 1 < tokens.size()) ids.push_back(id(kSpace));
    }
  }
  ids.push_back(kEos);
  return ids;
}

std::vector<std::string> Vocabulary::decode(const std::vector<int>& ids) const {
  std::vector<std::string> out;
  if (level_ == Level::word) {
    for (int i : ids) {
      if (i == kEos) break;
      if (i == kPad || i == kSos) continue;
      out.push_back(i == kUnk ? std::string(kUnkMarker) : token(i));
    }
    return out;
  }
  std::string word;
  for (int i : ids) {
    if (i == kEos) break;
    if (i == kPad || i == kSos) continue;
    if (token(i) == kSpace) {
      if (!word.empty()) out.push_back(std::move(word));
      word.clear();
    } else {
      word += i == kUnk ? std::string(kUnkMarker) : token(i);
    }
  }
  if (!word.empty()) out.push_back(std::move(word));
  return out;
}

std::vector<int> encode_target(const std::vector<std::string>& tokens, const Vocabulary& vocab) {
  return vocab.encode(tokens);
}

BucketAssignment assign_bucket(int n_frames, Level level) {
  if (n_frames < 1) throw InvalidArgument("n_frames must be >= 1");
  int cap = level == Level::word ? kWordFrameCap : kCharFrameCap;
  int frames = std::min(n_frames, cap);
  int bucket = (frames + kBucketWidth - 1) / kBucketWidth - 1;
  return {std::min(bucket, kNumBuckets - 1), frames};
}

Batch make_batch(const std::vector<Example>& examples, const std::vector<size_t>& rows,
                 Level level, int bucket_id) {
  Batch b;
  b.batch_size = static_cast<int>(rows.size());
  b.bucket_id = bucket_id;
  if (rows.empty()) return b;
  b.n_mels = examples[rows[0]].feats.n_mels;
  for (size_t r : rows) {
    const auto& ex = examples[r];
    if (ex.feats.n_mels != b.n_mels) throw InvalidArgument("mixed feature dimensions in batch");
    if (ex.target.empty()) throw InvalidArgument("utterance " + ex.utt.id + " has an empty target");
    int frames = assign_bucket(ex.feats.n_frames, level).frames;
    b.feature_lengths.push_back(frames);
    b.target_lengths.push_back(static_cast<int>(ex.target.size()));
    b.max_frames = std::max(b.max_frames, frames);
    b.max_target = std::max(b.max_target, static_cast<int>(ex.target.size()));
    b.source_index.push_back(r);
    b.ids.push_back(ex.utt.id);
  }
  b.features.assign(static_cast<size_t>(b.batch_size) * b.max_frames * b.n_mels, 0.0f);
  b.targets.assign(static_cast<size_t>(b.batch_size) * b.max_target, Vocabulary::kPad);
  for (int i = 0; i < b.batch_size; ++i) {
    const auto& ex = examples[rows[static_cast<size_t>(i)]];
    const size_t count = static_cast<size_t>(b.feature_lengths[i]) * b.n_mels;
    std::copy_n(ex.feats.values.begin(), count,
                b.features.begin() + static_cast<ptrdiff_t>(i) * b.max_frames * b.n_mels);
    std::copy(ex.target.begin(), ex.target.end(),
              b.targets.begin() + static_cast<ptrdiff_t>(i) * b.max_target);
  }
  return b;
}

std::vector<Batch> make_batches(const std::vector<Example>& examples, int max_batch, uint64_t seed,
                                Level level) {
  if (max_batch < 1) throw InvalidArgument("max_batch must be >= 1");
  std::map<int, std::vector<size_t>> buckets;
  for (size_t i = 0; i < examples.size(); ++i) {
    buckets[assign_bucket(examples[i].feats.n_frames, level).bucket_id].push_back(i);
  }
  std::mt19937_64 rng(seed);
  std::vector<Batch> batches;
  for (auto& [bucket, members] : buckets) {
    portable_shuffle(members.begin(), members.end(), rng);
    for (size_t start = 0; start < members.size(); start += static_cast<size_t>(max_batch)) {
      size_t end = std::min(members.size(), start + static_cast<size_t>(max_batch));
      std::vector<size_t> rows(members.begin() + static_cast<ptrdiff_t>(start),
                               members.begin() + static_cast<ptrdiff_t>(end));
      batches.push_back(make_batch(examples, rows, level, bucket));
    }
  }
  portable_shuffle(batches.begin(), batches.end(), rng);
  return batches;
}

double utterance_hours(const Utterance& utt, double hop_ms) {
  return utt.n_frames * hop_ms / 1000.0 / 3600.0;
}

double corpus_hours(const std::vector<Utterance>& utts, double hop_ms) {
  int64_t frames = 0;
  for (const auto& u : utts) frames += u.n_frames;
  return static_cast<double>(frames) * hop_ms / 1000.0 / 3600.0;
}

std::vector<size_t> sample_subset(const std::vector<Utterance>& utts, const SubsetSpec& spec,
                                  double hop_ms) {
  const double total = corpus_hours(utts, hop_ms);
  constexpr double kTol = 1e-9;
  if (!(spec.target_hours > 0.0)) throw InvalidArgument("subset target_hours must be positive");
  if (spec.target_hours > total * (1.0 + kTol) + kTol) {
    throw InvalidArgument("subset of " + std::to_string(spec.target_hours) +
                          " h exceeds corpus duration " + std::to_string(total) + " h");
  }
  std::vector<size_t> order(utts.size());
  std::iota(order.begin(), order.end(), size_t{0});
  uint64_t s = spec.nested ? sub_seed(spec.seed, "subset")
                           : sub_seed(spec.seed, "subset",
                                      std::bit_cast<uint64_t>(spec.target_hours));
  std::mt19937_64 rng(s);
  portable_shuffle(order.begin(), order.end(), rng);

  // Compare in frames to avoid drift when accumulating fractional hours.
  const double target_frames = spec.target_hours * 3600.0 * 1000.0 / hop_ms;
  int64_t acc = 0;
  std::vector<size_t> picked;
  for (size_t idx : order) {
    if (static_cast<double>(acc) >= target_frames * (1.0 - kTol)) break;
    picked.push_back(idx);
    acc += utts[idx].n_frames;
  }
  return picked;
}

std::vector<Utterance> read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open manifest: " + path.string());
  std::vector<Utterance> utts;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      auto j = json::parse(line);
      Utterance u;
      u.id = j.at("id").get<std::string>();
      u.feature_path = j.value("features", std::string{});
      u.n_frames = j.at("n_frames").get<int>();
      for (const auto& t : j.at("translations")) {
        if (t.is_string()) {
          u.translations.push_back(normalize_and_tokenize(t.get<std::string>()));
        } else {
          u.translations.push_back(t.get<std::vector<std::string>>());
        }
      }
      if (u.n_frames < 1) throw InvalidArgument("n_frames must be >= 1");
      if (u.translations.empty()) throw InvalidArgument("no translations");
      utts.push_back(std::move(u));
    } catch (const std::exception& e) {
      throw FormatError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return utts;
}

void write_manifest(const std::filesystem::path& path, const std::vector<Utterance>& utts) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write manifest: " + path.string());
  for (const auto& u : utts) {
    json translations = json::array();
    for (const auto& t : u.translations) {
      std::string joined;
      for (size_t i = 0; i < t.size(); ++i) joined += (i ? " " : "") + t[i];
      translations.push_back(joined);
    }
    json j = {{"id", u.id}, {"features", u.feature_path}, {"n_frames", u.n_frames},
              {"translations", translations}};
    out << j.dump() << '\n';
  }
}

std::vector<Example> make_examples(const std::vector<Utterance>& utts,
                                   const std::vector<features::FeatureMatrix>& feats,
                                   const Vocabulary& vocab) {
  if (utts.size() != feats.size()) throw InvalidArgument("utterance/feature count mismatch");
  std::vector<Example> out;
  out.reserve(utts.size());
  for (size_t i = 0; i < utts.size(); ++i) {
    out.push_back({utts[i], feats[i], vocab.encode(utts[i].translations.at(0))});
  }
  return out;
}

std::vector<Example> load_examples(const std::filesystem::path& manifest, const Vocabulary& vocab) {
  auto utts = read_manifest(manifest);
  std::vector<features::FeatureMatrix> feats;
  feats.reserve(utts.size());
  for (const auto& u : utts) {
    std::filesystem::path p = u.feature_path;
    if (p.is_relative()) p = manifest.parent_path() / p;
    feats.push_back(features::read_features(p));
  }
  return make_examples(utts, feats, vocab);
}

std::map<std::string, int64_t> token_counts(const std::vector<Utterance>& utts) {
  std::map<std::string, int64_t> counts;
  for (const auto& u : utts) {
    for (const auto& tok : u.translations.at(0)) ++counts[tok];
  }
  return counts;
}

}  // namespace s2t::corpus
