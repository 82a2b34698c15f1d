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

#include <chrono>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace teamcoord {

class TimeLimitExceeded : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

class MemoryBudgetExceeded : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

inline constexpr std::size_t kGiB = std::size_t{1} << 30;

/// Cooperative wall-clock limit polled by long-running solvers.
class Deadline
{
public:
  using Clock = std::chrono::steady_clock;

  Deadline() = default;

  static Deadline never() { return {}; }
  static Deadline after(double seconds)
  {
    Deadline d;
    d.at_ = Clock::now() + std::chrono::duration_cast<Clock::duration>(std::chrono::duration<double>(seconds));
    return d;
  }

  bool expired() const { return at_ && Clock::now() >= *at_; }

  void check(const std::string& what) const
  {
    if (expired())
      throw TimeLimitExceeded(what + ": time limit exceeded");
  }

private:
  std::optional<Clock::time_point> at_;
};

class Stopwatch
{
public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  double seconds() const
  {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

private:
  std::chrono::steady_clock::time_point start_;
};

} // namespace teamcoord
