#include "ugodit/rng.hpp"

#include "ugodit/tensor.hpp"

namespace ugodit {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

} // namespace

std::uint64_t derive_seed(std::uint64_t parent, std::string_view tag, std::uint64_t index) {
  return splitmix64(parent ^ (fnv1a(tag.data(), tag.size()) + splitmix64(index)));
}

} // namespace ugodit
