#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <unordered_set>
#include <vector>

#include "cprand/kruskal.hpp"
#include "cprand/rng.hpp"
#include "cprand/solver.hpp"
#include "cprand/tensor.hpp"

namespace cprand {

// Default row-sample budget: round(10 R ln R), with a floor of 10 so rank 1
// still draws a usable sample.
inline Index default_sample_count(Index r) {
  if (r < 1) throw std::invalid_argument("rank must be >= 1");
  if (r == 1) return 10;
  return static_cast<Index>(std::lround(10.0 * static_cast<double>(r) *
                                        std::log(static_cast<double>(r))));
}

// Rows of the mode-n Khatri-Rao product named by multiindex, not by flat row
// number. Column c holds the index for mode (c < mode ? c : c + 1).
struct SampleSet {
  Index mode = 0;
  IndexTable idxs;  // S x (N-1)
  Index count() const { return idxs.rows(); }
};

// `count` rows drawn uniformly with replacement from the index space of
// Z^(mode). Consumes the generator row-by-row, low mode first.
inline SampleSet draw_samples(const Shape& dims, Index mode, Index count,
                              std::mt19937_64& rng) {
  const Index n = static_cast<Index>(dims.size());
  if (mode < 0 || mode >= n) throw std::out_of_range("mode out of range");
  if (count < 1) throw std::invalid_argument("sample count must be >= 1");
  SampleSet s;
  s.mode = mode;
  s.idxs.resize(count, n - 1);
  std::vector<std::uniform_int_distribution<Index>> dist;
  for (Index k = 0; k < n; ++k)
    if (k != mode)
      dist.emplace_back(Index{0}, dims[static_cast<std::size_t>(k)] - 1);
  for (Index j = 0; j < count; ++j)
    for (Index c = 0; c < n - 1; ++c)
      s.idxs(j, c) = dist[static_cast<std::size_t>(c)](rng);
  return s;
}

// Every row of Z^(mode) exactly once, in unfolding column order.
inline SampleSet exhaustive_samples(const Shape& dims, Index mode) {
  const Index n = static_cast<Index>(dims.size());
  if (mode < 0 || mode >= n) throw std::out_of_range("mode out of range");
  const Index rows = shape_size(dims) / dims[static_cast<std::size_t>(mode)];
  SampleSet s;
  s.mode = mode;
  s.idxs.resize(rows, n - 1);
  std::vector<Index> idx(static_cast<std::size_t>(n), 0);
  for (Index j = 0; j < rows; ++j) {
    decode_column_index(mode, j, dims, idx);
    Index c = 0;
    for (Index k = 0; k < n; ++k)
      if (k != mode) s.idxs(j, c++) = idx[static_cast<std::size_t>(k)];
  }
  return s;
}

// Sampled Khatri-Rao rows: row j is the Hadamard product of the factor rows
// named by sample j, skipping the sample's mode. Equals Z^(mode) rows picked
// directly; the product is never formed.
template <class Scalar>
Mat<Scalar> skr(const SampleSet& s, const std::vector<Mat<Scalar>>& factors,
                Index mode) {
  const Index n = static_cast<Index>(factors.size());
  if (mode != s.mode) throw std::invalid_argument("skr: sample set mode mismatch");
  if (s.idxs.cols() != n - 1)
    throw std::invalid_argument("skr: sample table width mismatch");
  const Index r = factors[0].cols();
  Mat<Scalar> z = Mat<Scalar>::Ones(s.count(), r);
  Index c = 0;
  for (Index m = 0; m < n; ++m) {
    if (m == mode) continue;
    const Mat<Scalar>& a = factors[static_cast<std::size_t>(m)];
    for (Index j = 0; j < s.count(); ++j)
      z.row(j).array() *= a.row(s.idxs(j, c)).array();
    ++c;
  }
  return z;
}

// Sampled mode update: solves min_A || Z_s A^T - X_s^T || for the sampled
// rows Z_s (S x R) and gathered fibers X_s (I_n x S). Returns A, I_n x R.
inline Matd sampled_update(const Matd& zs, const Matd& xs) {
  if (zs.rows() < zs.cols())
    throw std::invalid_argument("sampled_update: need at least R samples");
  if (xs.cols() != zs.rows())
    throw std::invalid_argument("sampled_update: fiber count mismatch");
  return least_squares(zs, Matd(xs.transpose())).transpose();
}

// Fixed entry sample for fit estimation plus the best-fit stall state used
// by the stopping rule. Indices are drawn once per run, before iteration 1.
struct FitEstimator {
  IndexTable idxs;     // P_hat x N multiindices, fixed for the whole run
  Vecd x_values;       // tensor values at idxs
  double x_norm = 0;   // ||X||
  Index total_count = 0;  // P, number of tensor entries
  double best_fit = -std::numeric_limits<double>::infinity();
  int stall_count = 0;
  int stall_limit = 10;

  Index sample_count() const { return idxs.rows(); }
};

namespace detail {

// Distinct offsets, uniformly at random, sorted for gather locality.
inline std::vector<Index> sample_offsets_without_replacement(
    Index total, Index want, std::mt19937_64& rng) {
  std::vector<Index> out;
  if (want >= total) {
    out.resize(static_cast<std::size_t>(total));
    for (Index i = 0; i < total; ++i) out[static_cast<std::size_t>(i)] = i;
    return out;
  }
  if (total <= 4 * want) {
    std::vector<Index> pool(static_cast<std::size_t>(total));
    for (Index i = 0; i < total; ++i) pool[static_cast<std::size_t>(i)] = i;
    for (Index i = 0; i < want; ++i) {
      std::uniform_int_distribution<Index> pick(i, total - 1);
      std::swap(pool[static_cast<std::size_t>(i)],
                pool[static_cast<std::size_t>(pick(rng))]);
    }
    out.assign(pool.begin(), pool.begin() + want);
  } else {
    std::unordered_set<Index> seen;
    std::uniform_int_distribution<Index> pick(Index{0}, total - 1);
    out.reserve(static_cast<std::size_t>(want));
    while (static_cast<Index>(out.size()) < want) {
      const Index cand = pick(rng);
      if (seen.insert(cand).second) out.push_back(cand);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace detail

// Builds the estimator state for X with at most `sample_count` distinct
// entries (all of them when the tensor is smaller than the budget).
inline FitEstimator make_fit_estimator(const TensorD& x, Index sample_count,
                                       int stall_limit, std::mt19937_64& rng) {
  if (sample_count < 1)
    throw std::invalid_argument("fit sample count must be >= 1");
  if (stall_limit < 1) throw std::invalid_argument("stall limit must be >= 1");
  FitEstimator est;
  est.stall_limit = stall_limit;
  est.total_count = x.size();
  est.x_norm = x.norm();
  const auto offsets =
      detail::sample_offsets_without_replacement(x.size(), sample_count, rng);
  const Index n = x.order();
  const Index p = static_cast<Index>(offsets.size());
  est.idxs.resize(p, n);
  est.x_values.resize(p);
  for (Index j = 0; j < p; ++j) {
    Index rem = offsets[static_cast<std::size_t>(j)];
    for (Index k = 0; k < n; ++k) {
      est.idxs(j, k) = rem % x.dim(k);
      rem /= x.dim(k);
    }
    est.x_values[j] = x.value_at(offsets[static_cast<std::size_t>(j)]);
  }
  return est;
}

// Every entry of X; estimate_fit over this set equals exact_fit.
inline FitEstimator exhaustive_fit_estimator(const TensorD& x,
                                             int stall_limit) {
  auto rng = seeded_engine(0, kFitStream);
  return make_fit_estimator(x, x.size(), stall_limit, rng);
}

// Sampled fit: mu = mean squared error over the fixed entries, and
// fit = 1 - sqrt(P * mu) / ||X||. Cost O(P_hat R N); defined as 1 when
// ||X|| = 0.
inline double estimate_fit(const KruskalModel& m, const FitEstimator& est) {
  if (est.x_norm == 0.0) return 1.0;
  if (est.idxs.cols() != m.order())
    throw std::invalid_argument("estimate_fit: estimator order mismatch");
  const Index p_hat = est.sample_count();
  const Index r = m.rank();
  Eigen::RowVectorXd prod(r);
  double sq_sum = 0.0;
  for (Index j = 0; j < p_hat; ++j) {
    prod = m.lambda.transpose();
    for (Index n = 0; n < m.order(); ++n)
      prod.array() *=
          m.factors[static_cast<std::size_t>(n)].row(est.idxs(j, n)).array();
    const double e = est.x_values[j] - prod.sum();
    sq_sum += e * e;
  }
  const double mu = sq_sum / static_cast<double>(p_hat);
  return 1.0 - std::sqrt(static_cast<double>(est.total_count) * mu) /
                   est.x_norm;
}

// Smallest sample count P for which the sampled-fit tail bounds hold at the
// given confidence, evaluated in the conventional conservative form
// exp(-gamma^2 P / mu_max^2) <= 1 - confidence (the lower tail binds; the
// upper tail carries an extra factor 2 in the exponent). Rounded up, so the
// count scales as mu_max^2 / gamma^2.
inline Index chernoff_min_samples(double gamma, double mu, double mu_max,
                                  double confidence) {
  if (!(gamma > 0.0)) throw std::invalid_argument("gamma must be > 0");
  if (!(mu > 0.0) || !(mu <= mu_max))
    throw std::invalid_argument("need 0 < mu <= mu_max");
  if (!(confidence > 0.0 && confidence < 1.0))
    throw std::invalid_argument("confidence must be in (0, 1)");
  const double bound =
      std::log(1.0 / (1.0 - confidence)) * mu_max * mu_max / (gamma * gamma);
  return std::max(Index{1}, static_cast<Index>(std::ceil(bound)));
}

struct StopDecision {
  bool stop = false;
  StopReason reason = StopReason::max_iterations;
};

// Best-fit stall rule for the randomized solvers: track the best fit seen,
// reset the stall counter on improvement, stop after stall_limit iterations
// without one (or on threshold / iteration budget).
inline StopDecision should_stop(FitEstimator& est, double fit, int iteration,
                                const SolveOptions& opts) {
  if (fit > est.best_fit) {
    est.best_fit = fit;
    est.stall_count = 0;
  } else {
    ++est.stall_count;
  }
  if (opts.fit_threshold && fit >= *opts.fit_threshold)
    return {true, StopReason::fit_threshold};
  if (est.stall_count >= est.stall_limit)
    return {true, StopReason::best_fit_stall};
  if (iteration >= opts.max_iters) return {true, StopReason::max_iterations};
  return {false, StopReason::max_iterations};
}

// Randomized CP via sampled least squares. Per mode: draw fresh uniform
// rows, form the sampled Khatri-Rao rows, gather the matching fibers, solve
// the small S x R system, normalize. Fit is estimated on a fixed entry
// sample; stopping follows should_stop.
inline SolveResult cprand(const TensorD& x, Index r, Index s,
                          const SolveOptions& opts) {
  opts.validate();
  if (r < 1) throw std::invalid_argument("rank must be >= 1");
  if (s < r)
    throw std::invalid_argument("sample count must be at least the rank");
  if (x.norm() == 0.0 && !opts.bench_mode)
    return detail::zero_tensor_result(x, r, opts);

  const auto t0 = detail::Clock::now();
  SolveResult res;
  res.model = detail::make_init(x, r, opts);
  auto sample_rng = seeded_engine(opts.rng_seed, kSamplingStream);
  auto fit_rng = seeded_engine(opts.rng_seed, kFitStream);
  auto norm_rng = seeded_engine(opts.rng_seed, kInitStream + 7);
  FitEstimator est;
  if (!opts.bench_mode)
    est = opts.exhaustive_samples
              ? exhaustive_fit_estimator(x, opts.stall_limit)
              : make_fit_estimator(x, opts.fit_sample_count, opts.stall_limit,
                                   fit_rng);
  res.setup_seconds = detail::seconds_since(t0);

  const Index n_modes = x.order();
  for (int it = 1; it <= opts.max_iters; ++it) {
    for (Index n = 0; n < n_modes; ++n) {
      const SampleSet samples =
          opts.exhaustive_samples
              ? exhaustive_samples(x.dims(), n)
              : draw_samples(x.dims(), n, s, sample_rng);
      const Matd zs = skr(samples, res.model.factors, n);
      const Matd xs = gather_fibers(x, n, samples.idxs);
      res.model.factors[static_cast<std::size_t>(n)] = sampled_update(zs, xs);
      normalize_columns(res.model, n, n == 0, norm_rng);
    }
    res.iterations = it;
    if (opts.bench_mode) continue;

    const double fit = opts.exact_fit_trace ? exact_fit(x, res.model)
                                            : estimate_fit(res.model, est);
    const StopDecision d = should_stop(est, fit, it, opts);
    res.trace.push_back({it, detail::seconds_since(t0), fit,
                         !opts.exact_fit_trace, est.best_fit});
    if (d.stop) {
      res.reason = d.reason;
      res.total_seconds = detail::seconds_since(t0);
      return res;
    }
  }
  res.reason = opts.bench_mode ? StopReason::bench_complete
                               : StopReason::max_iterations;
  res.total_seconds = detail::seconds_since(t0);
  return res;
}

}  // namespace cprand
