#include "jamnet/random.hpp"

#include <cmath>

namespace jamnet {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t master_seed, std::string_view name) {
  return splitmix64(splitmix64(master_seed) ^ fnv1a(name));
}

RandomStream::RandomStream(std::uint64_t master_seed, std::string_view name)
    : name_(name), engine_(derive_seed(master_seed, name)) {}

double RandomStream::uniform() {
  return std::uniform_real_distribution<double>(0.0, 1.0)(engine_);
}

double RandomStream::uniform(double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(engine_);
}

std::size_t RandomStream::index(std::size_t n) {
  return std::uniform_int_distribution<std::size_t>(0, n - 1)(engine_);
}

bool RandomStream::bernoulli(double p) {
  if (p <= 0.0) return false;
  if (p >= 1.0) return true;
  return uniform() < p;
}

double RandomStream::normal() { return normal_(engine_); }

std::complex<double> RandomStream::cscg() {
  static const double kScale = std::sqrt(0.5);
  const double re = normal();
  const double im = normal();
  return {kScale * re, kScale * im};
}

}  // namespace jamnet
