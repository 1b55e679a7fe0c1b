#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include "s2t/binary_io.hpp"
#include "s2t/features.hpp"

namespace s2t::features {

namespace {

uint16_t read_u16(std::istream& in) {
  unsigned char b[2];
  binary::read_exact(in, b, 2, "wav header");
  return static_cast<uint16_t>(b[0] | (b[1] << 8));
}

void write_u16(std::ostream& out, uint16_t v) {
  char b[2] = {static_cast<char>(v & 0xff), static_cast<char>(v >> 8)};
  out.write(b, 2);
}

}  // namespace

AudioSignal read_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open wav file: " + path.string());
  binary::expect_magic(in, "RIFF", "wav file");
  binary::read_u32(in, "wav header");
  binary::expect_magic(in, "WAVE", "wav file");

  bool have_fmt = false;
  AudioSignal signal;
  while (true) {
    char id[4];
    binary::read_exact(in, id, 4, "wav chunk id");
    uint32_t size = binary::read_u32(in, "wav chunk size");
    if (std::memcmp(id, "fmt ", 4) == 0) {
      uint16_t format = read_u16(in);
      uint16_t channels = read_u16(in);
      uint32_t rate = binary::read_u32(in, "wav fmt");
      binary::read_u32(in, "wav fmt");  // byte rate
      read_u16(in);                     // block align
      uint16_t bits = read_u16(in);
      if (format != 1 || channels != 1 || bits != 16) {
        throw FormatError("unsupported wav encoding in " + path.string() +
                          " (need PCM 16-bit mono)");
      }
      in.ignore(size - 16 + (size & 1));
      signal.sample_rate = static_cast<int>(rate);
      have_fmt = true;
    } else if (std::memcmp(id, "data", 4) == 0) {
      if (!have_fmt) throw FormatError("wav data chunk precedes fmt chunk: " + path.string());
      std::vector<unsigned char> raw(size);
      binary::read_exact(in, raw.data(), size, "wav samples");
      signal.samples.resize(size / 2);
      for (size_t i = 0; i < signal.samples.size(); ++i) {
        auto v = static_cast<int16_t>(raw[2 * i] | (raw[2 * i + 1] << 8));
        signal.samples[i] = v / 32768.0;
      }
      return signal;
    } else {
      in.ignore(size + (size & 1));
      if (!in) throw FormatError("wav file has no data chunk: " + path.string());
    }
  }
}

void write_wav(const std::filesystem::path& path, const AudioSignal& signal) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open wav file for writing: " + path.string());
  const auto data_bytes = static_cast<uint32_t>(signal.samples.size() * 2);
  out.write("RIFF", 4);
  binary::write_u32(out, 36 + data_bytes);
  out.write("WAVEfmt ", 8);
  binary::write_u32(out, 16);
  write_u16(out, 1);
  write_u16(out, 1);
  binary::write_u32(out, static_cast<uint32_t>(signal.sample_rate));
  binary::write_u32(out, static_cast<uint32_t>(signal.sample_rate) * 2);
  write_u16(out, 2);
  write_u16(out, 16);
  out.write("data", 4);
  binary::write_u32(out, data_bytes);
  for (double s : signal.samples) {
    double clamped = std::clamp(s, -1.0, 1.0);
    auto v = static_cast<int16_t>(std::lround(std::min(clamped * 32768.0, 32767.0)));
    write_u16(out, static_cast<uint16_t>(v));
  }
}

}  // namespace s2t::features
