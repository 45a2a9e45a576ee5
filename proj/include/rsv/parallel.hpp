#pragma once

#include <algorithm>
#include <cstddef>
#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace rsv {

/// Data-parallel backend for the elementwise kernels.
///
/// Work over [0, n) is cut into contiguous chunks of `chunk` elements and the
/// chunks are distributed across `workers` threads. Chunk boundaries depend
/// only on n and chunk, never on the worker count, and the kernels write
/// disjoint elements, so results are bitwise identical for any worker count.
/// workers == 1 is the serial backend: the same chunk loop without a
/// parallel region.
class Executor {
 public:
  static constexpr std::size_t kDefaultChunk = 512;

  explicit Executor(int workers = 1, std::size_t chunk = kDefaultChunk) : workers_(workers), chunk_(chunk) {
    if (workers < 1) throw std::invalid_argument("executor needs at least one worker");
    if (chunk == 0) throw std::invalid_argument("chunk size must be positive");
  }

  int workers() const { return workers_; }
  std::size_t chunk() const { return chunk_; }

  static int available_workers() {
#ifdef _OPENMP
    return omp_get_num_procs();
#else
    return 1;
#endif
  }

  /// Calls fn(begin, end) once per chunk.
  template <class Fn>
  void for_each_chunk(std::size_t n, Fn&& fn) const {
    const std::ptrdiff_t chunks = num_chunks(n);
    if (workers_ == 1 || chunks == 1) {
      for (std::ptrdiff_t c = 0; c < chunks; ++c) fn(begin_of(c), end_of(c, n));
      return;
    }
#ifdef _OPENMP
#pragma omp parallel for num_threads(workers_) schedule(static)
#endif
    for (std::ptrdiff_t c = 0; c < chunks; ++c) fn(begin_of(c), end_of(c, n));
  }

  /// Calls pred(begin, end) once per chunk and AND-reduces the results.
  /// Every chunk is visited even after a false result.
  template <class Pred>
  bool all_chunks(std::size_t n, Pred&& pred) const {
    const std::ptrdiff_t chunks = num_chunks(n);
    bool ok = true;
    if (workers_ == 1 || chunks == 1) {
      for (std::ptrdiff_t c = 0; c < chunks; ++c) ok = pred(begin_of(c), end_of(c, n)) && ok;
      return ok;
    }
#ifdef _OPENMP
#pragma omp parallel for num_threads(workers_) schedule(static) reduction(&& : ok)
#endif
    for (std::ptrdiff_t c = 0; c < chunks; ++c) ok = pred(begin_of(c), end_of(c, n)) && ok;
    return ok;
  }

 private:
  std::ptrdiff_t num_chunks(std::size_t n) const {
    return static_cast<std::ptrdiff_t>((n + chunk_ - 1) / chunk_);
  }
  std::size_t begin_of(std::ptrdiff_t c) const { return static_cast<std::size_t>(c) * chunk_; }
  std::size_t end_of(std::ptrdiff_t c, std::size_t n) const { return std::min(n, begin_of(c) + chunk_); }

  int workers_;
  std::size_t chunk_;
};

}  // namespace rsv
