#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <vector>

namespace rbrom {

struct RunStats {
  std::uint64_t wall_ns = 0;
  std::uint64_t alloc_bytes = 0;
  std::vector<int> iterations;
};

// Library-side allocation accounting: every buffer the library creates for
// FE / ROM work reports its size here. The tally is a deterministic estimate
// (no OS profiling involved) and is what SU-M speedups are computed from.
namespace mem {

void note(std::size_t bytes) noexcept;
std::uint64_t counter() noexcept;

class Meter {
 public:
  Meter() : begin_(counter()) {}
  std::uint64_t bytes() const { return counter() - begin_; }

 private:
  std::uint64_t begin_;
};

}  // namespace mem

class Timer {
 public:
  Timer() : t0_(std::chrono::steady_clock::now()) {}
  std::uint64_t ns() const {
    return static_cast<std::uint64_t>(
        std::chrono::duration_cast<std::chrono::nanoseconds>(
            std::chrono::steady_clock::now() - t0_)
            .count());
  }

 private:
  std::chrono::steady_clock::time_point t0_;
};

}  // namespace rbrom
