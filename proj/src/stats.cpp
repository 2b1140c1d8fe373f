#include "rbrom/stats.hpp"

namespace rbrom::mem {

namespace {
thread_local std::uint64_t g_bytes = 0;
}

void note(std::size_t bytes) noexcept { g_bytes += bytes; }

std::uint64_t counter() noexcept { return g_bytes; }

}  // namespace rbrom::mem
