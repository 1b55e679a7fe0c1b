#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace s2t {

// Base class for every error raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed or incompatible file contents (bad magic, version, truncation).
class FormatError : public Error {
 public:
  using Error::Error;
};

// Caller passed arguments that violate an operation's precondition.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// SplitMix64 finalizer; used to derive independent sub-seeds.
constexpr uint64_t mix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

uint64_t hash_name(std::string_view name);

// Derives a named sub-seed ("data", "init", "dropout", "tf", ...) from a
// top-level seed. Mixing in extra integers yields per-epoch/per-batch seeds.
uint64_t sub_seed(uint64_t seed, std::string_view name, uint64_t a = 0, uint64_t b = 0);

// Uniform double in [0, 1) from 53 random bits. Platform independent, unlike
// std::uniform_real_distribution.
template <typename Engine>
double uniform01(Engine& engine) {
  return static_cast<double>(engine() >> 11) * 0x1.0p-53;
}

// Counter-based uniform in [0, 1): a pure function of its arguments.
inline double hash_uniform(uint64_t seed, uint64_t a, uint64_t b) {
  return static_cast<double>(mix64(mix64(seed ^ mix64(a)) ^ b) >> 11) * 0x1.0p-53;
}

// Fisher-Yates shuffle driven by `engine` with a portable index draw.
template <typename It, typename Engine>
void portable_shuffle(It first, It last, Engine& engine) {
  auto n = last - first;
  for (auto i = n - 1; i > 0; --i) {
    auto j = static_cast<decltype(i)>(uniform01(engine) * static_cast<double>(i + 1));
    if (j > i) j = i;
    std::swap(first[i], first[j]);
  }
}

}  // namespace s2t
