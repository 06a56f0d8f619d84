#pragma once

#include <chrono>
#include <cmath>
#include <optional>
#include <random>
#include <vector>

#include "cprand/kr_linalg.hpp"
#include "cprand/kruskal.hpp"
#include "cprand/rng.hpp"
#include "cprand/tensor.hpp"

namespace cprand {

enum class Method { als, rand, mix, premix };
enum class InitKind { random, hosvd, given };
enum class TransformKind { fft, dct, wht, identity };

inline const char* method_name(Method m) {
  switch (m) {
    case Method::als: return "als";
    case Method::rand: return "rand";
    case Method::mix: return "mix";
    case Method::premix: return "premix";
  }
  return "?";
}

inline const char* transform_name(TransformKind t) {
  switch (t) {
    case TransformKind::fft: return "fft";
    case TransformKind::dct: return "dct";
    case TransformKind::wht: return "wht";
    case TransformKind::identity: return "identity";
  }
  return "?";
}

struct SolveOptions {
  int max_iters = 200;
  double fit_tolerance = 1e-4;           // ALS stop: |F_t - F_{t-1}| <= tol
  std::optional<double> fit_threshold;   // stop once fit reaches this
  std::uint64_t rng_seed = 0;
  InitKind init = InitKind::random;
  std::optional<KruskalModel> init_model;
  Index fit_sample_count = Index{1} << 14;  // sampled-fit entries (randomized)
  int stall_limit = 10;                     // best-fit stall stop (randomized)
  std::optional<TransformKind> transform;   // mix/premix; method default if unset
  bool bench_mode = false;         // run exactly max_iters, no fit evaluation
  bool exhaustive_samples = false;  // test hook: sample every row / every entry
  bool exact_fit_trace = false;     // test hook: exact fit in randomized trace

  void validate() const {
    if (max_iters < 1) throw std::invalid_argument("max_iters must be >= 1");
    if (!(fit_tolerance > 0.0))
      throw std::invalid_argument("fit_tolerance must be > 0");
    if (fit_sample_count < 1)
      throw std::invalid_argument("fit_sample_count must be >= 1");
    if (stall_limit < 1) throw std::invalid_argument("stall_limit must be >= 1");
    if (init == InitKind::given && !init_model)
      throw std::invalid_argument("init=given requires an init model");
  }
};

enum class StopReason {
  max_iterations,
  fit_stagnation,   // |F_t - F_{t-1}| <= fit_tolerance
  fit_threshold,
  best_fit_stall,   // no new best fit for stall_limit iterations
  zero_tensor,
  bench_complete,
};

struct TraceRecord {
  int iteration;            // 1-based outer iteration
  double elapsed_seconds;   // since solve start, nondecreasing
  double fit;
  bool fit_is_estimate;
  double best_fit_so_far;
};

struct SolveResult {
  KruskalModel model;
  std::vector<TraceRecord> trace;
  int iterations = 0;
  StopReason reason = StopReason::max_iterations;
  double setup_seconds = 0.0;  // init + any preprocessing, before iteration 1
  double total_seconds = 0.0;
};

namespace detail {

using Clock = std::chrono::steady_clock;

inline double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

}  // namespace detail

// Uniform [0,1) factors for modes 2..N; factor 1 is allocated but zero (the
// first inner solve defines it). lambda starts at ones.
inline KruskalModel init_random(const Shape& dims, Index r,
                                std::uint64_t seed) {
  if (r < 1) throw std::invalid_argument("rank must be >= 1");
  KruskalModel m;
  m.lambda = Vecd::Ones(r);
  m.factors.reserve(dims.size());
  auto rng = seeded_engine(seed, kInitStream);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (std::size_t n = 0; n < dims.size(); ++n) {
    Matd a(dims[n], r);
    if (n == 0) {
      a.setZero();
    } else {
      for (Index j = 0; j < r; ++j)
        for (Index i = 0; i < dims[n]; ++i) a(i, j) = unif(rng);
    }
    m.factors.push_back(std::move(a));
  }
  return m;
}

// HOSVD-style init: for each mode n >= 2, the top-R eigenvectors of
// X_(n) X_(n)^T. If R exceeds I_n the extra columns are random unit vectors
// orthogonalized against the leading block where possible. Mode 1 stays zero.
inline KruskalModel init_hosvd(const TensorD& x, Index r,
                               std::uint64_t seed = 0) {
  if (r < 1) throw std::invalid_argument("rank must be >= 1");
  for (Index n = 0; n < x.order(); ++n)
    if (r > x.size() / x.dim(n))
      throw std::invalid_argument("rank exceeds prod of other dims");
  KruskalModel m;
  m.lambda = Vecd::Ones(r);
  m.factors.resize(static_cast<std::size_t>(x.order()));
  m.factors[0] = Matd::Zero(x.dim(0), r);
  auto rng = seeded_engine(seed, kInitStream);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (Index n = 1; n < x.order(); ++n) {
    const Matd xn = matricize(x, n);
    const Matd gram = xn * xn.transpose();
    Eigen::SelfAdjointEigenSolver<Matd> eig(gram);
    const Index in = x.dim(n);
    const Index lead = std::min(r, in);
    Matd a(in, r);
    // eigenvalues ascend; take the top `lead` in descending order.
    for (Index j = 0; j < lead; ++j) a.col(j) = eig.eigenvectors().col(in - 1 - j);
    for (Index j = lead; j < r; ++j) {
      Vecd v(in);
      for (Index i = 0; i < in; ++i) v[i] = gauss(rng);
      v -= a.leftCols(lead) * (a.leftCols(lead).transpose() * v);
      const double norm = v.stableNorm();
      if (norm > 0) v /= norm;
      a.col(j) = v;
    }
    m.factors[static_cast<std::size_t>(n)] = std::move(a);
  }
  return m;
}

// Exact fit 1 - ||X - M|| / ||X|| via the Gram expansion
// ||X - M||^2 = ||X||^2 - 2 <W, A diag(lambda)> + lambda^T (V had A^T A) lambda
// with W the mode-1 MTTKRP and V the mode-1 Khatri-Rao Gram. Cost is one
// MTTKRP; the tensor is never reconstructed. Defined as 1 when ||X|| = 0.
inline double exact_fit(const TensorD& x, const KruskalModel& m) {
  m.validate();
  if (m.dims() != x.dims())
    throw std::invalid_argument("exact_fit: model dims do not match tensor");
  const double xnorm = x.norm();
  if (xnorm == 0.0) return 1.0;
  const Matd w = mttkrp(x, m.factors, 0);
  const Matd& a0 = m.factors[0];
  const Matd v = gram_of_khatri_rao(m.factors, 0);
  const double cross = (a0.cwiseProduct(w) * m.lambda.asDiagonal()).sum();
  const double model_sq =
      m.lambda.dot((v.cwiseProduct(a0.transpose() * a0)) * m.lambda);
  const double resid_sq =
      std::max(0.0, xnorm * xnorm - 2.0 * cross + model_sq);
  return 1.0 - std::sqrt(resid_sq) / xnorm;
}

namespace detail {

inline KruskalModel make_init(const TensorD& x, Index r,
                              const SolveOptions& opts) {
  switch (opts.init) {
    case InitKind::random:
      return init_random(x.dims(), r, opts.rng_seed);
    case InitKind::hosvd:
      return init_hosvd(x, r, opts.rng_seed);
    case InitKind::given: {
      KruskalModel m = *opts.init_model;
      m.validate();
      if (m.dims() != x.dims() || m.rank() != r)
        throw std::invalid_argument("init model does not match problem");
      return m;
    }
  }
  throw std::invalid_argument("unknown init kind");
}

// Zero tensor: every model fits exactly; return the lambda = 0 convention.
inline SolveResult zero_tensor_result(const TensorD& x, Index r,
                                      const SolveOptions& opts) {
  SolveResult res;
  res.model = init_random(x.dims(), r, opts.rng_seed);
  auto rng = seeded_engine(opts.rng_seed, kInitStream);
  for (Index n = 0; n < x.order(); ++n)
    normalize_columns(res.model, n, false, rng);
  res.model.lambda.setZero();
  res.trace.push_back({0, 0.0, 1.0, false, 1.0});
  res.iterations = 0;
  res.reason = StopReason::zero_tensor;
  return res;
}

}  // namespace detail

// Classical CP-ALS. Each mode solve uses the Gram normal equations
// A V = W with V = had_{m != n} A^(m)T A^(m), Cholesky first and a
// rank-revealing fallback when V is singular. Fit is exact each outer
// iteration; stops on |F_t - F_{t-1}| <= fit_tolerance, the optional fit
// threshold, or max_iters.
inline SolveResult cp_als(const TensorD& x, Index r, const SolveOptions& opts) {
  opts.validate();
  if (r < 1) throw std::invalid_argument("rank must be >= 1");
  if (x.norm() == 0.0 && !opts.bench_mode)
    return detail::zero_tensor_result(x, r, opts);

  const auto t0 = detail::Clock::now();
  SolveResult res;
  res.model = detail::make_init(x, r, opts);
  auto norm_rng = seeded_engine(opts.rng_seed, kInitStream + 7);
  res.setup_seconds = detail::seconds_since(t0);

  const Index n_modes = x.order();
  double prev_fit = std::numeric_limits<double>::quiet_NaN();
  double best = -std::numeric_limits<double>::infinity();
  for (int it = 1; it <= opts.max_iters; ++it) {
    for (Index n = 0; n < n_modes; ++n) {
      const Matd v = gram_of_khatri_rao(res.model.factors, n);
      const Matd w = mttkrp(x, res.model.factors, n);
      Eigen::LLT<Matd> llt(v);
      if (llt.info() == Eigen::Success) {
        res.model.factors[static_cast<std::size_t>(n)] =
            llt.solve(w.transpose()).transpose();
      } else {
        Eigen::CompleteOrthogonalDecomposition<Matd> cod(v);
        res.model.factors[static_cast<std::size_t>(n)] =
            cod.solve(w.transpose()).transpose();
      }
      normalize_columns(res.model, n, n == 0, norm_rng);
    }
    res.iterations = it;
    if (opts.bench_mode) continue;

    const double fit = exact_fit(x, res.model);
    best = std::max(best, fit);
    res.trace.push_back({it, detail::seconds_since(t0), fit, false, best});
    if (opts.fit_threshold && fit >= *opts.fit_threshold) {
      res.reason = StopReason::fit_threshold;
      res.total_seconds = detail::seconds_since(t0);
      return res;
    }
    if (it > 1 && std::abs(fit - prev_fit) <= opts.fit_tolerance) {
      res.reason = StopReason::fit_stagnation;
      res.total_seconds = detail::seconds_since(t0);
      return res;
    }
    prev_fit = fit;
  }
  res.reason = opts.bench_mode ? StopReason::bench_complete
                               : StopReason::max_iterations;
  res.total_seconds = detail::seconds_since(t0);
  return res;
}

}  // namespace cprand
