/*
 * Copyright (C) 2026 The teamcoord authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 *
 */

#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <span>
#include <utility>

namespace teamcoord {

/// SplitMix64 finalizer. Used to derive independent seeds from tuples of
/// integers (see `mix_seed`).
constexpr std::uint64_t splitmix64(std::uint64_t x)
{
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Folds a list of integers into one seed:
///   h = splitmix64(first); for each next x: h = splitmix64(h ^ x).
constexpr std::uint64_t mix_seed(std::initializer_list<std::uint64_t> parts)
{
  std::uint64_t h = 0;
  bool first = true;
  for (std::uint64_t x : parts) {
    h = first ? splitmix64(x) : splitmix64(h ^ x);
    first = false;
  }
  return h;
}

/// Portable random source.
///
/// The engine is std::mt19937_64, whose output sequence is fixed by the C++
/// standard. The standard distributions are not (their algorithms are
/// implementation-defined), so every conversion below is spelled out:
///
///   uniform01()     (x >> 11) * 2^-53, in [0, 1)
///   below(n)        rejection sampling on the top bits, unbiased
///   uniform(a, b)   a + (b - a) * uniform01()
///   normal()        Box-Muller, one fresh pair of draws per call
class Rng
{
public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  double uniform01()
  {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  /// Uniform integer in [0, n). n must be positive.
  std::uint64_t below(std::uint64_t n)
  {
    if (n <= 1)
      return 0;
    // Smallest all-ones mask covering n - 1.
    std::uint64_t mask = n - 1;
    mask |= mask >> 1;
    mask |= mask >> 2;
    mask |= mask >> 4;
    mask |= mask >> 8;
    mask |= mask >> 16;
    mask |= mask >> 32;
    for (;;) {
      const std::uint64_t x = engine_() & mask;
      if (x < n)
        return x;
    }
  }

  double normal()
  {
    constexpr double two_pi = 6.283185307179586476925286766559;
    const double u1 = 1.0 - uniform01(); // (0, 1]
    const double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(two_pi * u2);
  }

  /// Fisher-Yates, drawing below(i + 1) for i = size-1 .. 1.
  template <typename T>
  void shuffle(std::span<T> items)
  {
    for (std::size_t i = items.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(items[i - 1], items[j]);
    }
  }

private:
  std::mt19937_64 engine_;
};

} // namespace teamcoord
