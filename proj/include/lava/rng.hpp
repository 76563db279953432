#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <random>
#include <thread>
#include <vector>

namespace lava {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// One reproducible random stream. Streams derived from the same (seed, index)
/// pair produce identical sequences regardless of platform or thread layout;
/// normal draws use the Marsaglia polar method so the byte-level output does
/// not depend on the standard library's distribution internals.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::int64_t index)
      : eng_(splitmix64(splitmix64(seed) ^ static_cast<std::uint64_t>(index))) {
  }

  /// Uniform on [0, 1).
  double uniform() {
    return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
  }

  /// Uniform integer in [0, n).
  std::uint64_t uniform_int(std::uint64_t n) {
    // Rejection sampling keeps the draw exact and reproducible.
    const std::uint64_t limit = n * ((~std::uint64_t{0}) / n);
    std::uint64_t x;
    do {
      x = eng_();
    } while (x >= limit);
    return x % n;
  }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform() - 1.0;
      v = 2.0 * uniform() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double m = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * m;
    has_spare_ = true;
    return u * m;
  }

 private:
  std::mt19937_64 eng_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// Index used for quantities generated once per experiment (e.g. the fixed
/// design), distinct from all replication indices >= 0.
inline constexpr std::int64_t kDesignStream = -1;

inline int thread_count() {
  if (const char* env = std::getenv("LAVA_THREADS")) {
    int v = std::atoi(env);
    if (v >= 1) return v;
  }
  unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1 : static_cast<int>(hc);
}

namespace detail {
inline thread_local bool in_parallel_region = false;
}

/// Runs fn(i) for i in [0, count). fn must be thread-safe and write only to
/// its own slot; results stay deterministic because each index does identical
/// work regardless of which thread picks it up. Nested calls run serially so
/// parallel sections do not oversubscribe.
inline void parallel_for(std::size_t count,
                         const std::function<void(std::size_t)>& fn) {
  const int workers = thread_count();
  if (workers <= 1 || count <= 1 || detail::in_parallel_region) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  std::atomic<std::size_t> next{0};
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&]() {
      detail::in_parallel_region = true;
      for (;;) {
        std::size_t i = next.fetch_add(1);
        if (i >= count) break;
        fn(i);
      }
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace lava
