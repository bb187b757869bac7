#pragma once

#include <complex>
#include <cstdint>
#include <random>
#include <string>
#include <string_view>

namespace jamnet {

// A named, independently seeded random substream.
//
// Every stochastic consumer in a run (fading, exploration, replay sampling,
// weight initialization, ...) owns its own stream derived from the master
// seed and its name, so drawing from one never shifts another.
class RandomStream {
 public:
  RandomStream(std::uint64_t master_seed, std::string_view name);

  const std::string& name() const { return name_; }

  // Uniform on [0, 1).
  double uniform();
  // Uniform on [lo, hi).
  double uniform(double lo, double hi);
  // Uniform integer on [0, n). Requires n > 0.
  std::size_t index(std::size_t n);
  bool bernoulli(double p);
  double normal();
  // Circularly symmetric complex Gaussian with E|z|^2 = 1.
  std::complex<double> cscg();

  std::mt19937_64& engine() { return engine_; }

 private:
  std::string name_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

// Seed for a substream: splitmix64 over the master seed mixed with an
// FNV-1a hash of the name.
std::uint64_t derive_seed(std::uint64_t master_seed, std::string_view name);

}  // namespace jamnet
