#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace saris {

/// Child seed for one (replication, stream) pair:
///   splitmix64(splitmix64(master + golden * (replication + 1)) ^ fnv1a64(label))
/// Seeds depend only on these three inputs, never on execution order.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t replication, std::string_view label);

std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t fnv1a64(std::string_view bytes);

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

  static Rng split(std::uint64_t master, std::uint64_t replication, std::string_view label) {
    return Rng(derive_seed(master, replication, label));
  }

  std::uint64_t seed() const { return seed_; }

  /// Uniform on [0, 1).
  double uniform() { return std::generate_canonical<double, 64>(engine_); }
  double normal() { return normal_(engine_); }
  double normal(double mean, double sd) { return mean + sd * normal_(engine_); }
  bool coin() { return (engine_() >> 63) != 0; }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace saris
