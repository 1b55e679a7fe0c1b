#include "s2t/checkpoint.hpp"

#include <bit>
#include <fstream>
#include <sstream>

#include "s2t/binary_io.hpp"

namespace s2t {

namespace {

void write_tensor(std::ostream& out, const std::string& name, const std::vector<int>& shape,
                  const nn::Matrix<float>& value) {
  binary::write_string(out, name);
  binary::write_u32(out, static_cast<uint32_t>(shape.size()));
  for (int d : shape) binary::write_u32(out, static_cast<uint32_t>(d));
  for (Eigen::Index i = 0; i < value.size(); ++i) binary::write_f32(out, value.data()[i]);
}

struct RawTensor {
  std::string name;
  std::vector<int> shape;
  nn::Matrix<float> value;
};

RawTensor read_tensor(std::istream& in) {
  RawTensor t;
  t.name = binary::read_string(in, "tensor name", 4096);
  uint32_t rank = binary::read_u32(in, "tensor rank");
  if (rank > 8) throw FormatError("implausible tensor rank for " + t.name);
  int64_t numel = 1;
  for (uint32_t i = 0; i < rank; ++i) {
    uint32_t d = binary::read_u32(in, "tensor dims");
    if (d == 0 || d > (1u << 28)) throw FormatError("implausible dimension for " + t.name);
    t.shape.push_back(static_cast<int>(d));
    numel *= d;
    if (numel > (int64_t{1} << 31)) throw FormatError("tensor too large: " + t.name);
  }
  nn::Tensor<float> shaped(t.shape);
  t.value = std::move(shaped.value);
  std::vector<char> raw(static_cast<size_t>(numel) * 4);
  binary::read_exact(in, raw.data(), raw.size(), "tensor values");
  for (int64_t i = 0; i < numel; ++i) {
    uint32_t bits = 0;
    for (int k = 3; k >= 0; --k) bits = (bits << 8) | static_cast<unsigned char>(raw[static_cast<size_t>(4 * i + k)]);
    t.value.data()[i] = std::bit_cast<float>(bits);
  }
  return t;
}

void atomic_write(const std::filesystem::path& path, const std::string& bytes) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error("failed writing " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::string read_all(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void expect_end(std::istream& in, const std::filesystem::path& path) {
  if (in.peek() != std::char_traits<char>::eof()) throw FormatError("trailing bytes in " + path.string());
}

std::string format_double(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const nn::ParameterSet<float>& params,
                     const model::ModelConfig& cfg, const std::string& vocab_path) {
  std::ostringstream out(std::ios::binary);
  out.write("S2T1", 4);
  binary::write_u32(out, kCheckpointVersion);
  binary::write_string(out, model::serialize(cfg));
  binary::write_string(out, vocab_path);
  binary::write_u32(out, static_cast<uint32_t>(params.size()));
  for (const auto& [name, t] : params) write_tensor(out, name, t.shape, t.value);
  atomic_write(path, out.str());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::istringstream in(read_all(path), std::ios::binary);
  binary::expect_magic(in, "S2T1", "checkpoint");
  uint32_t version = binary::read_u32(in, "checkpoint version");
  if (version != kCheckpointVersion) {
    throw FormatError("incompatible checkpoint version " + std::to_string(version) + " in " +
                      path.string() + " (expected " + std::to_string(kCheckpointVersion) + ")");
  }
  Checkpoint ck;
  ck.config = model::deserialize(binary::read_string(in, "checkpoint config"));
  ck.vocab_path = binary::read_string(in, "vocabulary reference");
  uint32_t count = binary::read_u32(in, "tensor count");
  for (uint32_t i = 0; i < count; ++i) {
    auto t = read_tensor(in);
    auto& dst = ck.params.add(t.name, t.shape);
    dst.value = std::move(t.value);
  }
  expect_end(in, path);
  // Shapes must agree with what the stored config implies.
  auto expected = model::init_params<float>(ck.config, 0);
  for (const auto& [name, t] : expected) {
    if (!ck.params.contains(name) || ck.params.at(name).shape != t.shape) {
      throw FormatError("checkpoint " + path.string() + " is missing or misshapes tensor " + name);
    }
  }
  if (expected.size() != ck.params.size()) throw FormatError("checkpoint has unexpected tensors");
  return ck;
}

void save_trainer_state(const std::filesystem::path& path, const TrainerState& s) {
  std::ostringstream out(std::ios::binary);
  out.write("S2O1", 4);
  binary::write_u32(out, kCheckpointVersion);
  const auto& c = s.optimizer.config;
  std::string cfg = "lr=" + format_double(c.lr) + "\nbeta1=" + format_double(c.beta1) +
                    "\nbeta2=" + format_double(c.beta2) + "\neps=" + format_double(c.eps) +
                    "\nl2=" + format_double(c.l2) + "\nclip_norm=" + format_double(c.clip_norm) +
                    "\nbest_bleu=" + format_double(s.best_bleu) + "\n";
  binary::write_string(out, cfg);
  binary::write_u64(out, static_cast<uint64_t>(s.optimizer.step));
  binary::write_u32(out, static_cast<uint32_t>(s.epochs_done));
  binary::write_u32(out, static_cast<uint32_t>(s.best_epoch));
  binary::write_u32(out, static_cast<uint32_t>(s.epochs_since_best));
  binary::write_u32(out, static_cast<uint32_t>(s.optimizer.first_moment.size()));
  for (const auto& [name, m] : s.optimizer.first_moment) {
    write_tensor(out, "m/" + name, {static_cast<int>(m.rows()), static_cast<int>(m.cols())}, m);
    const auto& v = s.optimizer.second_moment.at(name);
    write_tensor(out, "v/" + name, {static_cast<int>(v.rows()), static_cast<int>(v.cols())}, v);
  }
  atomic_write(path, out.str());
}

TrainerState load_trainer_state(const std::filesystem::path& path) {
  std::istringstream in(read_all(path), std::ios::binary);
  binary::expect_magic(in, "S2O1", "trainer state");
  uint32_t version = binary::read_u32(in, "trainer state version");
  if (version != kCheckpointVersion) throw FormatError("incompatible trainer state version in " + path.string());
  TrainerState s;
  std::istringstream cfg(binary::read_string(in, "optimizer config"));
  std::string line;
  while (std::getline(cfg, line)) {
    auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    const std::string k = line.substr(0, eq);
    const double v = std::stod(line.substr(eq + 1));
    auto& c = s.optimizer.config;
    if (k == "lr") c.lr = v;
    else if (k == "beta1") c.beta1 = v;
    else if (k == "beta2") c.beta2 = v;
    else if (k == "eps") c.eps = v;
    else if (k == "l2") c.l2 = v;
    else if (k == "clip_norm") c.clip_norm = v;
    else if (k == "best_bleu") s.best_bleu = v;
    else throw FormatError("unknown optimizer key " + k);
  }
  s.optimizer.step = static_cast<int64_t>(binary::read_u64(in, "optimizer step"));
  s.epochs_done = static_cast<int>(binary::read_u32(in, "epochs"));
  s.best_epoch = static_cast<int>(binary::read_u32(in, "best epoch"));
  s.epochs_since_best = static_cast<int>(binary::read_u32(in, "patience counter"));
  uint32_t n = binary::read_u32(in, "moment count");
  for (uint32_t i = 0; i < n; ++i) {
    auto m = read_tensor(in);
    auto v = read_tensor(in);
    if (m.name.rfind("m/", 0) != 0 || v.name.rfind("v/", 0) != 0) throw FormatError("bad moment record");
    s.optimizer.first_moment[m.name.substr(2)] = std::move(m.value);
    s.optimizer.second_moment[v.name.substr(2)] = std::move(v.value);
  }
  expect_end(in, path);
  return s;
}

}  // namespace s2t
