#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace latcap {

/// Worker count from LATCAP_WORKERS, else the hardware concurrency.
int default_workers();

/// Runs f(i) for i in [0, n) on up to `workers` threads. Each index is
/// handled exactly once; the first exception is rethrown after all threads
/// join. Callers write results into per-index slots, so the outcome never
/// depends on scheduling.
template <class F>
void parallel_for(std::size_t n, int workers, F&& f) {
  const std::size_t threads = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(workers, 1)));
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) f(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto body = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        f(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        next.store(n);
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(threads - 1);
  for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(body);
  body();
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

/// Running first and second moments of per-sample values.
struct Accumulator {
  double sum = 0.0;
  double sum2 = 0.0;
  std::uint64_t n = 0;

  void add(double v) noexcept {
    sum += v;
    sum2 += v * v;
    ++n;
  }
  void merge(const Accumulator& o) noexcept {
    sum += o.sum;
    sum2 += o.sum2;
    n += o.n;
  }
  double mean() const noexcept { return n ? sum / static_cast<double>(n) : 0.0; }
  /// Standard error of the mean.
  double stderr_mean() const noexcept {
    if (n < 2) return 0.0;
    const double m = mean();
    const double var = std::max(0.0, (sum2 / static_cast<double>(n) - m * m)) *
                       static_cast<double>(n) / static_cast<double>(n - 1);
    return std::sqrt(var / static_cast<double>(n));
  }
};

/// Samples are grouped into fixed chunks; chunk results are merged in chunk
/// order, which keeps floating-point sums identical for any worker count.
inline constexpr std::size_t kChunkSize = 2048;

template <class Acc, class F>
Acc chunked_reduce(std::uint64_t samples, int workers, F&& sample_range) {
  const std::size_t chunks = static_cast<std::size_t>((samples + kChunkSize - 1) / kChunkSize);
  std::vector<Acc> parts(chunks);
  parallel_for(chunks, workers, [&](std::size_t c) {
    const std::uint64_t begin = c * kChunkSize;
    const std::uint64_t end = std::min<std::uint64_t>(samples, begin + kChunkSize);
    parts[c] = sample_range(begin, end);
  });
  Acc total{};
  for (const auto& p : parts) total.merge(p);
  return total;
}

}  // namespace latcap

namespace latcap {

/// Monte Carlo mean with its standard error and a separately reported
/// truncation bias bound (not folded into the standard error).
struct McEstimate {
  double estimate = 0.0;
  double std_error = 0.0;
  double bias_bound = 0.0;
  std::uint64_t n = 0;
};

}  // namespace latcap
