#pragma once

#include <algorithm>
#include <cmath>
#include <exception>
#include <thread>
#include <vector>

namespace mps {

// Neumaier-compensated summation; order-fixed callers get bit-stable totals.
struct NeumaierSum {
  double sum = 0.0;
  double comp = 0.0;

  void add(double x) {
    const double t = sum + x;
    if (std::abs(sum) >= std::abs(x)) {
      comp += (sum - t) + x;
    } else {
      comp += (x - t) + sum;
    }
    sum = t;
  }

  double value() const { return sum + comp; }
};

// Runs fn(begin, end) over a contiguous partition of [0, n). With
// workers <= 1 the call happens inline. Callers must ensure fn writes are
// partitioned by index so results do not depend on the worker count.
template <typename Fn>
void parallel_for(int n, int workers, Fn&& fn) {
  if (n <= 0) return;
  const int w = std::max(1, std::min(workers, n));
  if (w == 1) {
    fn(0, n);
    return;
  }
  std::vector<std::thread> threads;
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(w));
  threads.reserve(static_cast<std::size_t>(w));
  const int base = n / w;
  const int rem = n % w;
  int start = 0;
  for (int t = 0; t < w; ++t) {
    const int len = base + (t < rem ? 1 : 0);
    const int b = start;
    const int e = start + len;
    start = e;
    threads.emplace_back([&fn, &errors, b, e, t] {
      try {
        fn(b, e);
      } catch (...) {
        errors[static_cast<std::size_t>(t)] = std::current_exception();
      }
    });
  }
  for (auto& th : threads) th.join();
  for (auto& ep : errors) {
    if (ep) std::rethrow_exception(ep);
  }
}

}  // namespace mps
