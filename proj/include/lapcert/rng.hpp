#pragma once

#include <array>
#include <cstdint>

namespace lapcert {

// Philox4x32-10 (Salmon et al., SC'11).  A stream is (seed, stream id); the
// 128-bit counter holds (block index, stream id).  Output depends only on
// (seed, stream, position), never on thread scheduling.
class PhiloxStream {
 public:
  PhiloxStream(std::uint64_t seed, std::uint64_t stream);

  std::uint64_t next_u64();
  double uniform();       // in (0,1)
  double normal();        // Box-Muller
  PhiloxStream split(std::uint64_t child) const;

  static std::array<std::uint32_t, 4> block(std::array<std::uint32_t, 4> ctr,
                                            std::array<std::uint32_t, 2> key);

 private:
  void refill();

  std::array<std::uint32_t, 2> key_;
  std::uint64_t stream_;
  std::uint64_t block_index_ = 0;
  std::array<std::uint32_t, 4> buf_{};
  int pos_ = 4;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// Stable 64-bit mixing for deriving sub-seeds from labels.
std::uint64_t mix64(std::uint64_t x);
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag);

}  // namespace lapcert
