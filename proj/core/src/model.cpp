#include "s2t/model.hpp"

#include <charconv>
#include <optional>
#include <random>
#include <sstream>

namespace s2t::model {

using nn::Matrix;
using nn::Tape;
using nn::Var;

namespace {

int ceil_div(int a, int b) { return (a + b - 1) / b; }

int parse_int(const std::string& key, const std::string& value) {
  int out = 0;
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size()) {
    throw InvalidArgument("config key '" + key + "' expects an integer, got '" + value + "'");
  }
  return out;
}

double parse_double(const std::string& key, const std::string& value) {
  try {
    size_t used = 0;
    double d = std::stod(value, &used);
    if (used == value.size()) return d;
  } catch (const std::exception&) {
  }
  throw InvalidArgument("config key '" + key + "' expects a number, got '" + value + "'");
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw InvalidArgument("config key '" + key + "' expects true/false, got '" + value + "'");
}

std::string format_double(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

int argmax_row(const Matrix<float>& m, Eigen::Index r) {
  Eigen::Index best = 0;
  for (Eigen::Index c = 1; c < m.cols(); ++c) {
    if (m(r, c) > m(r, best)) best = c;
  }
  return static_cast<int>(best);
}

int argmax_row(const Matrix<double>& m, Eigen::Index r) {
  Eigen::Index best = 0;
  for (Eigen::Index c = 1; c < m.cols(); ++c) {
    if (m(r, c) > m(r, best)) best = c;
  }
  return static_cast<int>(best);
}

}  // namespace

void ModelConfig::validate() const {
  auto positive = [](int v, const char* name) {
    if (v < 1) throw InvalidArgument(std::string("model.") + name + " must be positive");
  };
  positive(n_mels, "n_mels");
  positive(cnn_filters, "cnn_filters");
  positive(cnn_stride, "cnn_stride");
  positive(enc_layers, "enc_layers");
  positive(enc_hidden, "enc_hidden");
  positive(enc_hidden_uni, "enc_hidden_uni");
  positive(dec_layers, "dec_layers");
  positive(dec_hidden, "dec_hidden");
  positive(emb_dim, "emb_dim");
  positive(beam, "beam");
  positive(max_batch, "max_batch");
  if (cnn_layers < 0) throw InvalidArgument("model.cnn_layers must be >= 0");
  if (cnn_kernel != 3) throw InvalidArgument("model.cnn_kernel: only 3x3 kernels are supported");
  if (attention != "global-general") throw InvalidArgument("model.attention: only global-general is supported");
  if (!(tf_ratio >= 0.0 && tf_ratio <= 1.0)) throw InvalidArgument("model.tf_ratio must be in [0, 1]");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw InvalidArgument("model.dropout must be in [0, 1)");
  if (!(l2 >= 0.0)) throw InvalidArgument("model.l2 must be >= 0");
  if (max_batch > 64) throw InvalidArgument("model.max_batch must be <= 64");
  if (vocab_size != 0 && vocab_size < 1) throw InvalidArgument("model.vocab_size must be positive");
}

int ModelConfig::encoder_state_dim() const {
  return enc_direction == Direction::bi ? 2 * enc_hidden : enc_hidden_uni;
}

int ModelConfig::encoder_steps(int frames) const {
  int t = frames;
  for (int l = 0; l < cnn_layers; ++l) t = ceil_div(t, cnn_stride);
  return t;
}

int ModelConfig::cnn_freq_out() const {
  int f = n_mels;
  for (int l = 0; l < cnn_layers; ++l) f = ceil_div(f, cnn_stride);
  return f;
}

int ModelConfig::encoder_input_dim() const {
  return cnn_layers > 0 ? cnn_freq_out() * cnn_filters : n_mels;
}

int ModelConfig::decoder_input_dim() const { return emb_dim + (input_feeding ? dec_hidden : 0); }

std::vector<std::pair<std::string, std::string>> to_key_values(const ModelConfig& c) {
  return {
      {"n_mels", std::to_string(c.n_mels)},
      {"cnn_layers", std::to_string(c.cnn_layers)},
      {"cnn_filters", std::to_string(c.cnn_filters)},
      {"cnn_kernel", std::to_string(c.cnn_kernel)},
      {"cnn_stride", std::to_string(c.cnn_stride)},
      {"enc_layers", std::to_string(c.enc_layers)},
      {"enc_hidden", std::to_string(c.enc_hidden)},
      {"enc_direction", c.enc_direction == Direction::bi ? "bi" : "uni"},
      {"enc_hidden_uni", std::to_string(c.enc_hidden_uni)},
      {"dec_layers", std::to_string(c.dec_layers)},
      {"dec_hidden", std::to_string(c.dec_hidden)},
      {"emb_dim", std::to_string(c.emb_dim)},
      {"attention", c.attention},
      {"input_feeding", c.input_feeding ? "true" : "false"},
      {"decoder_level", std::string(corpus::to_string(c.decoder_level))},
      {"dropout", format_double(c.dropout)},
      {"l2", format_double(c.l2)},
      {"tf_ratio", format_double(c.tf_ratio)},
      {"beam", std::to_string(c.beam)},
      {"max_batch", std::to_string(c.max_batch)},
      {"vocab_size", std::to_string(c.vocab_size)},
  };
}

void set_key(ModelConfig& c, const std::string& key, const std::string& v) {
  if (key == "n_mels") c.n_mels = parse_int(key, v);
  else if (key == "cnn_layers") c.cnn_layers = parse_int(key, v);
  else if (key == "cnn_filters") c.cnn_filters = parse_int(key, v);
  else if (key == "cnn_kernel") c.cnn_kernel = parse_int(key, v);
  else if (key == "cnn_stride") c.cnn_stride = parse_int(key, v);
  else if (key == "enc_layers") c.enc_layers = parse_int(key, v);
  else if (key == "enc_hidden") c.enc_hidden = parse_int(key, v);
  else if (key == "enc_direction") {
    if (v == "bi") c.enc_direction = Direction::bi;
    else if (v == "uni") c.enc_direction = Direction::uni;
    else throw InvalidArgument("config key 'enc_direction' expects uni|bi, got '" + v + "'");
  }
  else if (key == "enc_hidden_uni") c.enc_hidden_uni = parse_int(key, v);
  else if (key == "dec_layers") c.dec_layers = parse_int(key, v);
  else if (key == "dec_hidden") c.dec_hidden = parse_int(key, v);
  else if (key == "emb_dim") c.emb_dim = parse_int(key, v);
  else if (key == "attention") c.attention = v;
  else if (key == "input_feeding") c.input_feeding = parse_bool(key, v);
  else if (key == "decoder_level") {
    try {
      c.decoder_level = corpus::parse_level(v);
    } catch (const InvalidArgument&) {
      throw InvalidArgument("config key 'decoder_level' expects word|character, got '" + v + "'");
    }
  }
  else if (key == "dropout") c.dropout = parse_double(key, v);
  else if (key == "l2") c.l2 = parse_double(key, v);
  else if (key == "tf_ratio") c.tf_ratio = parse_double(key, v);
  else if (key == "beam") c.beam = parse_int(key, v);
  else if (key == "max_batch") c.max_batch = parse_int(key, v);
  else if (key == "vocab_size") c.vocab_size = parse_int(key, v);
  else throw InvalidArgument("unknown model config key '" + key + "'");
}

std::string serialize(const ModelConfig& cfg) {
  std::string out;
  for (const auto& [k, v] : to_key_values(cfg)) out += k + "=" + v + "\n";
  return out;
}

ModelConfig deserialize(const std::string& text) {
  ModelConfig cfg;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) throw FormatError("malformed model config line: " + line);
    set_key(cfg, line.substr(0, eq), line.substr(eq + 1));
  }
  cfg.validate();
  return cfg;
}

namespace {

struct ParamSpec {
  std::string name;
  std::vector<int> shape;
};

void lstm_specs(std::vector<ParamSpec>& out, const std::string& prefix, int input, int hidden) {
  out.push_back({prefix + ".wx", {input, 4 * hidden}});
  out.push_back({prefix + ".wh", {hidden, 4 * hidden}});
  out.push_back({prefix + ".b", {4 * hidden}});
}

std::vector<ParamSpec> param_specs(const ModelConfig& cfg) {
  if (cfg.vocab_size < 1) throw InvalidArgument("model config needs vocab_size before parameters exist");
  std::vector<ParamSpec> specs;
  int channels = 1;
  for (int l = 0; l < cfg.cnn_layers; ++l) {
    const std::string p = "enc.conv" + std::to_string(l);
    specs.push_back({p + ".w", {3, 3, channels, cfg.cnn_filters}});
    specs.push_back({p + ".b", {cfg.cnn_filters}});
    channels = cfg.cnn_filters;
  }
  const bool bi = cfg.enc_direction == Direction::bi;
  const int h_enc = bi ? cfg.enc_hidden : cfg.enc_hidden_uni;
  int input = cfg.encoder_input_dim();
  for (int l = 0; l < cfg.enc_layers; ++l) {
    const std::string p = "enc.lstm" + std::to_string(l);
    lstm_specs(specs, p + ".fwd", input, h_enc);
    if (bi) lstm_specs(specs, p + ".bwd", input, h_enc);
    input = cfg.encoder_state_dim();
  }
  specs.push_back({"dec.embed", {cfg.vocab_size, cfg.emb_dim}});
  input = cfg.decoder_input_dim();
  for (int l = 0; l < cfg.dec_layers; ++l) {
    lstm_specs(specs, "dec.lstm" + std::to_string(l), input, cfg.dec_hidden);
    input = cfg.dec_hidden;
  }
  specs.push_back({"att.wa", {cfg.encoder_state_dim(), cfg.dec_hidden}});
  specs.push_back({"att.wc", {cfg.encoder_state_dim() + cfg.dec_hidden, cfg.dec_hidden}});
  specs.push_back({"out.w", {cfg.dec_hidden, cfg.vocab_size}});
  specs.push_back({"out.b", {cfg.vocab_size}});
  return specs;
}

bool is_bias(const std::string& name) { return name.size() >= 2 && name.compare(name.size() - 2, 2, ".b") == 0; }

bool is_lstm_bias(const std::string& name) {
  return is_bias(name) && name.find(".lstm") != std::string::npos;
}

}  // namespace

int64_t parameter_count(const ModelConfig& cfg) {
  int64_t n = 0;
  for (const auto& s : param_specs(cfg)) {
    int64_t k = 1;
    for (int d : s.shape) k *= d;
    n += k;
  }
  return n;
}

template <typename T>
nn::ParameterSet<T> init_params(const ModelConfig& cfg, uint64_t seed) {
  cfg.validate();
  nn::ParameterSet<T> params;
  for (const auto& spec : param_specs(cfg)) {
    auto& t = params.add(spec.name, spec.shape);
    if (is_bias(spec.name)) {
      if (is_lstm_bias(spec.name)) {
        const int h = spec.shape[0] / 4;
        t.value.middleCols(h, h).setConstant(T(1));
      }
      continue;
    }
    std::mt19937_64 rng(sub_seed(seed, "init", hash_name(spec.name)));
    for (Eigen::Index i = 0; i < t.value.size(); ++i) {
      t.value.data()[i] = static_cast<T>(0.2 * uniform01(rng) - 0.1);
    }
  }
  return params;
}

namespace {

template <typename T>
Var lstm_layer(Tape<T>& tape, nn::ParameterSet<T>& params, const std::string& prefix, Var inputs,
               int steps, int batch, std::span<const int> lengths, bool reverse) {
  Var wx = tape.parameter(params.at(prefix + ".wx"));
  Var wh = tape.parameter(params.at(prefix + ".wh"));
  Var b = tape.parameter(params.at(prefix + ".b"));
  const int hidden = static_cast<int>(tape.value(wh).rows());
  Var xw = nn::affine(tape, inputs, wx, b);
  Var h = tape.constant(Matrix<T>::Zero(batch, hidden));
  Var c = tape.constant(Matrix<T>::Zero(batch, hidden));
  std::vector<Var> outputs(static_cast<size_t>(steps));
  std::vector<uint8_t> keep(static_cast<size_t>(batch));
  for (int i = 0; i < steps; ++i) {
    const int t = reverse ? steps - 1 - i : i;
    bool all = true;
    for (int r = 0; r < batch; ++r) {
      keep[static_cast<size_t>(r)] = t < lengths[static_cast<size_t>(r)] ? 1 : 0;
      all = all && keep[static_cast<size_t>(r)];
    }
    Var z = nn::add(tape, nn::slice_rows(tape, xw, t * batch, batch), nn::matmul(tape, h, wh));
    Var cell = nn::lstm_cell(tape, z, c);
    Var h_new = nn::slice_cols(tape, cell, 0, hidden);
    Var c_new = nn::slice_cols(tape, cell, hidden, hidden);
    if (all) {
      h = h_new;
      c = c_new;
    } else {
      h = nn::blend_rows<T>(tape, keep, h_new, h);
      c = nn::blend_rows<T>(tape, keep, c_new, c);
    }
    outputs[static_cast<size_t>(t)] = h;
  }
  return nn::concat_rows<T>(tape, outputs);
}

template <typename T>
Var sequence_dropout(Tape<T>& tape, Var x, int steps, int batch, double ratio, const RunOptions& run,
                     uint64_t seed) {
  if (!run.training || ratio == 0.0) return x;
  const Eigen::Index cols = tape.value(x).cols();
  if (run.per_step_dropout) return nn::dropout(tape, x, ratio, true, seed);
  Matrix<T> per_seq = nn::dropout_mask<T>(batch, cols, ratio, seed);
  Matrix<T> tiled(static_cast<Eigen::Index>(steps) * batch, cols);
  for (int t = 0; t < steps; ++t) tiled.middleRows(static_cast<Eigen::Index>(t) * batch, batch) = per_seq;
  return nn::mul_const(tape, x, tiled);
}

}  // namespace

template <typename T>
Var lstm_sequence(Tape<T>& tape, nn::ParameterSet<T>& params, const std::string& prefix, Var inputs,
                  int steps, int batch, std::span<const int> lengths, Direction direction,
                  int layers, int hidden, double dropout, const RunOptions& run) {
  if (static_cast<int>(lengths.size()) != batch) throw InvalidArgument("lstm_sequence: one length per sequence required");
  for (int len : lengths) {
    if (len < 0 || len > steps) {
      throw InvalidArgument("lstm_sequence: length " + std::to_string(len) + " exceeds " +
                            std::to_string(steps) + " steps");
    }
  }
  if (tape.value(inputs).rows() != static_cast<Eigen::Index>(steps) * batch) {
    throw InvalidArgument("lstm_sequence: input rows must equal steps * batch");
  }
  Var x = inputs;
  for (int l = 0; l < layers; ++l) {
    const std::string p = prefix + std::to_string(l);
    if (params.at(p + ".fwd.wh").value.rows() != hidden) {
      throw InvalidArgument("lstm_sequence: " + p + " hidden size mismatch");
    }
    Var fwd = lstm_layer(tape, params, p + ".fwd", x, steps, batch, lengths, false);
    if (direction == Direction::bi) {
      Var bwd = lstm_layer(tape, params, p + ".bwd", x, steps, batch, lengths, true);
      const Var parts[] = {fwd, bwd};
      x = nn::concat_cols<T>(tape, parts);
    } else {
      x = fwd;
    }
    x = sequence_dropout(tape, x, steps, batch, dropout, run, sub_seed(run.seed, "dropout.enc", l));
  }
  return x;
}

template <typename T>
EncoderStates encode(Tape<T>& tape, nn::ParameterSet<T>& params, const ModelConfig& cfg,
                     const corpus::Batch& batch, const RunOptions& run) {
  if (batch.batch_size < 1) throw InvalidArgument("encode: empty batch");
  if (batch.max_frames < 1) throw InvalidArgument("encode: frame count 0");
  for (int len : batch.feature_lengths) {
    if (len < 1) throw InvalidArgument("encode: frame count 0");
  }
  if (batch.n_mels != cfg.n_mels) {
    throw InvalidArgument("encode: features have " + std::to_string(batch.n_mels) +
                          " mel bands, model expects " + std::to_string(cfg.n_mels));
  }
  const int B = batch.batch_size;
  Matrix<T> image(static_cast<Eigen::Index>(B) * batch.max_frames * batch.n_mels, 1);
  for (Eigen::Index i = 0; i < image.rows(); ++i) image(i, 0) = static_cast<T>(batch.features[static_cast<size_t>(i)]);
  Var x = tape.constant(std::move(image));
  nn::ConvGeometry geom{B, batch.max_frames, batch.n_mels};
  std::vector<int> lengths = batch.feature_lengths;
  for (int l = 0; l < cfg.cnn_layers; ++l) {
    const std::string p = "enc.conv" + std::to_string(l);
    auto res = nn::conv2d_relu(tape, x, geom, tape.parameter(params.at(p + ".w")),
                               tape.parameter(params.at(p + ".b")), cfg.cnn_stride, cfg.cnn_stride,
                               &lengths);
    x = res.out;
    geom = res.geometry;
    for (auto& len : lengths) len = ceil_div(len, cfg.cnn_stride);
  }
  Var seq = nn::to_time_major(tape, x, geom);
  const int hidden = cfg.enc_direction == Direction::bi ? cfg.enc_hidden : cfg.enc_hidden_uni;
  Var states = lstm_sequence(tape, params, "enc.lstm", seq, geom.time, B, lengths, cfg.enc_direction,
                             cfg.enc_layers, hidden, cfg.dropout, run);
  Var keys = nn::matmul(tape, states, tape.parameter(params.at("att.wa")));
  return {states, keys, geom.time, B, lengths};
}

template <typename T>
EncoderStates encode_features(Tape<T>& tape, nn::ParameterSet<T>& params, const ModelConfig& cfg,
                              const features::FeatureMatrix& feats) {
  corpus::Example ex{{"", "", feats.n_frames, {}}, feats, {corpus::Vocabulary::kEos}};
  auto batch = corpus::make_batch({ex}, {0}, cfg.decoder_level);
  return encode(tape, params, cfg, batch);
}

template <typename T>
DecoderState initial_decoder_state(Tape<T>& tape, const ModelConfig& cfg, int batch) {
  DecoderState s;
  for (int l = 0; l < cfg.dec_layers; ++l) {
    s.hidden.push_back(tape.constant(Matrix<T>::Zero(batch, cfg.dec_hidden)));
    s.cell.push_back(tape.constant(Matrix<T>::Zero(batch, cfg.dec_hidden)));
  }
  s.feed = tape.constant(Matrix<T>::Zero(batch, cfg.dec_hidden));
  return s;
}

template <typename T>
DecoderDropout<T> make_decoder_dropout(const ModelConfig& cfg, int batch, uint64_t seed) {
  DecoderDropout<T> d;
  d.embedding = nn::dropout_mask<T>(batch, cfg.emb_dim, cfg.dropout, sub_seed(seed, "dropout.emb"));
  for (int l = 0; l < cfg.dec_layers; ++l) {
    d.layers.push_back(nn::dropout_mask<T>(batch, cfg.dec_hidden, cfg.dropout, sub_seed(seed, "dropout.dec", l)));
  }
  return d;
}

template <typename T>
AttentionOutput attend(Tape<T>& tape, nn::ParameterSet<T>& params, Var query, const EncoderStates& enc) {
  Var scores = nn::attention_scores(tape, query, enc.keys, enc.steps);
  Var weights = nn::masked_softmax<T>(tape, scores, enc.valid_lengths);
  Var context = nn::attention_context(tape, weights, enc.states, enc.steps);
  const Var parts[] = {context, query};
  Var joined = nn::concat_cols<T>(tape, parts);
  Var attentional = nn::tanh(tape, nn::matmul(tape, joined, tape.parameter(params.at("att.wc"))));
  return {context, weights, attentional};
}

template <typename T>
StepOutput decode_step(Tape<T>& tape, nn::ParameterSet<T>& params, const ModelConfig& cfg,
                       std::span<const int> prev_tokens, const DecoderState& state,
                       const EncoderStates& enc, const DecoderDropout<T>* dropout) {
  if (static_cast<int>(prev_tokens.size()) != enc.batch) {
    throw InvalidArgument("decode_step: one previous token per batch row required");
  }
  for (int id : prev_tokens) {
    if (id < 0 || id >= cfg.vocab_size) {
      throw InvalidArgument("decode_step: token id " + std::to_string(id) + " out of range");
    }
  }
  Var x = nn::gather_rows(tape, tape.parameter(params.at("dec.embed")), prev_tokens);
  if (dropout) x = nn::mul_const(tape, x, dropout->embedding);
  if (cfg.input_feeding) {
    const Var parts[] = {x, state.feed};
    x = nn::concat_cols<T>(tape, parts);
  }
  StepOutput out;
  const int H = cfg.dec_hidden;
  for (int l = 0; l < cfg.dec_layers; ++l) {
    const std::string p = "dec.lstm" + std::to_string(l);
    Var z = nn::add(tape,
                    nn::affine(tape, x, tape.parameter(params.at(p + ".wx")), tape.parameter(params.at(p + ".b"))),
                    nn::matmul(tape, state.hidden[static_cast<size_t>(l)], tape.parameter(params.at(p + ".wh"))));
    Var cell = nn::lstm_cell(tape, z, state.cell[static_cast<size_t>(l)]);
    Var h = nn::slice_cols(tape, cell, 0, H);
    out.state.hidden.push_back(h);
    out.state.cell.push_back(nn::slice_cols(tape, cell, H, H));
    x = dropout ? nn::mul_const(tape, h, dropout->layers[static_cast<size_t>(l)]) : h;
  }
  auto att = attend(tape, params, x, enc);
  out.state.feed = att.attentional;
  out.attention = att.weights;
  out.logits = nn::affine(tape, att.attentional, tape.parameter(params.at("out.w")),
                          tape.parameter(params.at("out.b")));
  return out;
}

template <typename T>
LossResult forward_loss(Tape<T>& tape, nn::ParameterSet<T>& params, const ModelConfig& cfg,
                        const corpus::Batch& batch, const RunOptions& run) {
  if (batch.max_target < 1) throw InvalidArgument("forward_loss: empty targets");
  for (int len : batch.target_lengths) {
    if (len < 1) throw InvalidArgument("forward_loss: empty targets");
  }
  const int B = batch.batch_size;
  const int L = batch.max_target;
  EncoderStates enc = encode(tape, params, cfg, batch, run);
  const bool use_dropout = run.training && cfg.dropout > 0.0;
  std::optional<DecoderDropout<T>> masks;
  if (use_dropout) masks = make_decoder_dropout<T>(cfg, B, sub_seed(run.seed, "dropout.decoder"));

  DecoderState state = initial_decoder_state(tape, cfg, B);
  std::vector<int> prev(static_cast<size_t>(B), corpus::Vocabulary::kSos);
  std::vector<Var> logits;
  logits.reserve(static_cast<size_t>(L));
  std::vector<int> targets(static_cast<size_t>(L) * B);
  std::vector<T> mask(static_cast<size_t>(L) * B);
  const uint64_t tf_seed = sub_seed(run.seed, "tf");
  LossResult result;
  for (int t = 0; t < L; ++t) {
    if (use_dropout && run.per_step_dropout && t > 0) {
      masks = make_decoder_dropout<T>(cfg, B, sub_seed(run.seed, "dropout.decoder", static_cast<uint64_t>(t)));
    }
    auto step = decode_step(tape, params, cfg, prev, state, enc, masks ? &*masks : nullptr);
    state = step.state;
    const auto& lv = tape.value(step.logits);
    for (int b = 0; b < B; ++b) {
      const size_t k = static_cast<size_t>(t) * B + b;
      const bool real = t < batch.target_lengths[static_cast<size_t>(b)];
      targets[k] = real ? batch.target(b, t) : corpus::Vocabulary::kPad;
      mask[k] = real ? T(1) : T(0);
      const int predicted = argmax_row(lv, b);
      if (real) {
        ++result.tokens;
        if (predicted == targets[k]) ++result.correct;
      }
      const bool gold = run.tf_ratio >= 1.0 ||
                        (run.tf_ratio > 0.0 && hash_uniform(tf_seed, static_cast<uint64_t>(b),
                                                            static_cast<uint64_t>(t)) < run.tf_ratio);
      prev[static_cast<size_t>(b)] = gold ? batch.target(b, t) : predicted;
    }
    logits.push_back(step.logits);
  }
  Var all = nn::concat_rows<T>(tape, logits);
  result.loss = nn::softmax_xent<T>(tape, all, targets, mask);
  return result;
}

#define S2T_INSTANTIATE_MODEL(T)                                                                      \
  template nn::ParameterSet<T> init_params<T>(const ModelConfig&, uint64_t);                          \
  template Var lstm_sequence<T>(Tape<T>&, nn::ParameterSet<T>&, const std::string&, Var, int, int,    \
                                std::span<const int>, Direction, int, int, double, const RunOptions&); \
  template EncoderStates encode<T>(Tape<T>&, nn::ParameterSet<T>&, const ModelConfig&,                \
                                   const corpus::Batch&, const RunOptions&);                          \
  template EncoderStates encode_features<T>(Tape<T>&, nn::ParameterSet<T>&, const ModelConfig&,       \
                                            const features::FeatureMatrix&);                          \
  template DecoderState initial_decoder_state<T>(Tape<T>&, const ModelConfig&, int);                  \
  template DecoderDropout<T> make_decoder_dropout<T>(const ModelConfig&, int, uint64_t);              \
  template AttentionOutput attend<T>(Tape<T>&, nn::ParameterSet<T>&, Var, const EncoderStates&);      \
  template StepOutput decode_step<T>(Tape<T>&, nn::ParameterSet<T>&, const ModelConfig&,              \
                                     std::span<const int>, const DecoderState&, const EncoderStates&, \
                                     const DecoderDropout<T>*);                                       \
  template LossResult forward_loss<T>(Tape<T>&, nn::ParameterSet<T>&, const ModelConfig&,             \
                                      const corpus::Batch&, const RunOptions&);

S2T_INSTANTIATE_MODEL(float)
S2T_INSTANTIATE_MODEL(double)

}  // namespace s2t::model
