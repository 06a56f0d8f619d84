#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <complex>
#include <cstdint>
#include <cstdlib>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace cprand {

using Index = Eigen::Index;

// Tensor shape (I_1, ..., I_N). Entries are positive; order N >= 1.
using Shape = std::vector<Index>;

template <class Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <class Scalar>
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Matd = Mat<double>;
using Vecd = Vec<double>;
using Complex = std::complex<double>;
using Matcd = Mat<Complex>;
using Veccd = Vec<Complex>;

// Row-per-sample tables of multiindex components (0-based).
using IndexTable = Eigen::Matrix<Index, Eigen::Dynamic, Eigen::Dynamic>;

// Thrown when a value that must be real carries non-negligible imaginary
// mass. The CLI maps this to its own exit code, distinct from config errors.
class numerical_consistency_error : public std::runtime_error {
 public:
  explicit numerical_consistency_error(const std::string& what)
      : std::runtime_error(what) {}
};

namespace detail {

// Worker cap for internally parallel kernels. CPRAND_THREADS, when set to a
// positive integer, lowers (or raises) the default of hardware concurrency.
inline int max_threads() {
  static const int cached = [] {
    int n = static_cast<int>(std::thread::hardware_concurrency());
    if (n <= 0) n = 1;
    if (const char* env = std::getenv("CPRAND_THREADS")) {
      char* end = nullptr;
      long v = std::strtol(env, &end, 10);
      if (end != env && v > 0) n = static_cast<int>(v);
    }
    return n;
  }();
  return cached;
}

// Splits [begin, end) into contiguous chunks, one per worker. Each worker
// writes disjoint output, so results are identical to the sequential loop.
template <class F>
void parallel_for(Index begin, Index end, Index min_grain, F&& body) {
  const Index count = end - begin;
  int workers = max_threads();
  if (min_grain > 0 && count / min_grain < workers)
    workers = static_cast<int>(std::max<Index>(1, count / min_grain));
  if (workers <= 1) {
    for (Index i = begin; i < end; ++i) body(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  const Index chunk = (count + workers - 1) / workers;
  for (int w = 0; w < workers; ++w) {
    const Index lo = begin + chunk * w;
    const Index hi = std::min(end, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([lo, hi, &body] {
      for (Index i = lo; i < hi; ++i) body(i);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace detail
}  // namespace cprand
