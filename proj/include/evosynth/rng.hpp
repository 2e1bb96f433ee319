#pragma once

#include <array>
#include <cstdint>
#include <initializer_list>

namespace evosynth {

//---------------------------------------------------------------------------//
/*!
 * Philox4x32-10 counter-based generator.
 *
 * Every draw is a pure function of (key, counter), so results never depend on
 * the order in which independent consumers ask for numbers. All derived
 * distributions below use fixed integer arithmetic so the streams are
 * identical across standard libraries.
 */
class Philox4x32 {
 public:
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static Counter generate(Counter counter, Key key) noexcept;
};

// Folds an arbitrary list of 64-bit words into a Philox key (SplitMix64 mixing).
Philox4x32::Key make_key(std::initializer_list<std::uint64_t> words) noexcept;

std::uint64_t splitmix64(std::uint64_t x) noexcept;

// Uniform double in [0, 1) with 53 random bits taken from one Philox block.
double uniform_at(Philox4x32::Key key, Philox4x32::Counter counter) noexcept;

// Sequential view over a keyed Philox stream.
class CounterStream {
 public:
  explicit CounterStream(Philox4x32::Key key, std::uint32_t lane = 0) noexcept
      : key_(key), lane_(lane) {}

  std::uint64_t next_u64() noexcept;
  // Uniform in [0, 1).
  double next_uniform() noexcept;
  // Uniform integer in [0, bound) by rejection; bound must be > 0.
  std::uint64_t next_below(std::uint64_t bound) noexcept;
  // Standard normal via Box-Muller.
  double next_normal() noexcept;

 private:
  Philox4x32::Key key_;
  std::uint32_t lane_;
  std::uint64_t index_ = 0;
};

}  // namespace evosynth
