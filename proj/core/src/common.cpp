#include "s2t/common.hpp"

namespace s2t {

uint64_t hash_name(std::string_view name) {
  // FNV-1a, then finalized.
  uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : name) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return mix64(h);
}

uint64_t sub_seed(uint64_t seed, std::string_view name, uint64_t a, uint64_t b) {
  return mix64(mix64(mix64(seed) ^ hash_name(name)) ^ mix64(a + 0x1234567ULL * (b + 1)));
}

}  // namespace s2t
