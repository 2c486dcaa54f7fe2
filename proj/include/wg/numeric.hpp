#pragma once

#include <atomic>
#include <complex>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <string>
#include <thread>
#include <vector>

namespace wg {

using cplx = std::complex<double>;

// Lossless double -> ASCII (17 significant digits round-trips IEEE doubles).
inline std::string fmt17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

inline uint64_t fnv1a(const void* data, size_t len, uint64_t h = 1469598103934665603ull) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 1099511628211ull;
  }
  return h;
}

inline uint64_t fnv1a(const std::string& s, uint64_t h = 1469598103934665603ull) {
  return fnv1a(s.data(), s.size(), h);
}

// Runs fn(i) for i in [0, count) on up to nthreads workers. Results must be
// written to pre-sized slots indexed by i so the output order is deterministic.
inline void parallel_for(size_t count, const std::function<void(size_t)>& fn, int nthreads) {
  if (nthreads <= 1 || count <= 1) {
    for (size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<size_t> next{0};
  auto worker = [&] {
    for (;;) {
      size_t i = next.fetch_add(1);
      if (i >= count) return;
      fn(i);
    }
  };
  size_t nw = std::min<size_t>(nthreads, count);
  std::vector<std::thread> pool;
  pool.reserve(nw);
  for (size_t t = 0; t < nw; ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
}

}  // namespace wg
