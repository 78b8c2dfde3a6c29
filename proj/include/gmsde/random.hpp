#pragma once

// Counter-based random streams. Each Monte Carlo trajectory owns a stream
// keyed by (master seed, trajectory index), so draws do not depend on which
// worker runs the trajectory or in what order.

#include <array>
#include <cstdint>

namespace gmsde {

/// Philox4x64 with 10 rounds (Salmon et al., SC'11).
struct Philox4x64 {
  using Counter = std::array<std::uint64_t, 4>;
  using Key = std::array<std::uint64_t, 2>;

  static Counter generate(Counter counter, Key key);
};

class RandomStream {
 public:
  RandomStream(std::uint64_t seed, std::uint64_t stream_id);

  std::uint64_t next_u64();

  /// Uniform on [0, 1) with 53 random bits.
  double uniform();

  /// Standard normal via the Marsaglia polar method.
  double normal();

  std::uint64_t seed() const { return key_[0]; }
  std::uint64_t stream_id() const { return key_[1]; }

 private:
  Philox4x64::Key key_;
  std::uint64_t block_ = 0;
  Philox4x64::Counter buffer_{};
  int buffered_ = 0;
  double spare_normal_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace gmsde
