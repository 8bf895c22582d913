#include "steinw/common.hpp"

#include <atomic>
#include <cmath>

namespace steinw {

namespace {
std::atomic<int> g_threads{1};
}

int default_threads() { return g_threads.load(); }

void set_default_threads(int threads) { g_threads.store(threads < 1 ? 1 : threads); }

double pairwise_sum(const double* data, std::size_t n) {
  if (n <= 16) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += data[i];
    return s;
  }
  const std::size_t half = n / 2;
  return pairwise_sum(data, half) + pairwise_sum(data + half, n - half);
}

MeanStderr mean_stderr(const std::vector<double>& samples) {
  MeanStderr out;
  const std::size_t n = samples.size();
  if (n == 0) return out;
  out.mean = pairwise_sum(samples) / static_cast<double>(n);
  if (n < 2) return out;
  std::vector<double> sq(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double dev = samples[i] - out.mean;
    sq[i] = dev * dev;
  }
  const double var = pairwise_sum(sq) / static_cast<double>(n - 1);
  out.se = std::sqrt(var / static_cast<double>(n));
  return out;
}

}  // namespace steinw
