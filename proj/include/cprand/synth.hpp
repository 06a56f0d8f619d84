#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include "cprand/kruskal.hpp"
#include "cprand/mixing.hpp"
#include "cprand/rng.hpp"
#include "cprand/sampling.hpp"
#include "cprand/solver.hpp"

namespace cprand {

// Random I x R factor with unit columns and pairwise column inner products
// exactly C: Q L^T for Q a random orthonormal basis and L the Cholesky
// factor of K = (1-C) I + C 11^T.
inline Matd gen_collinear_factor(Index i_dim, Index r, double c,
                                 std::mt19937_64& rng) {
  if (r < 1 || i_dim < r)
    throw std::invalid_argument("collinear factor needs 1 <= R <= I");
  if (!(c >= 0.0 && c < 1.0))
    throw std::invalid_argument("collinearity must be in [0, 1)");
  Matd k = Matd::Constant(r, r, c);
  k.diagonal().setOnes();
  Eigen::LLT<Matd> llt(k);
  if (llt.info() != Eigen::Success)
    throw std::invalid_argument("collinearity gram not positive definite");
  std::normal_distribution<double> gauss(0.0, 1.0);
  Matd g(i_dim, r);
  for (Index col = 0; col < r; ++col)
    for (Index row = 0; row < i_dim; ++row) g(row, col) = gauss(rng);
  Eigen::HouseholderQR<Matd> qr(g);
  const Matd q = qr.householderQ() * Matd::Identity(i_dim, r);
  return q * Matd(llt.matrixL()).transpose();
}

struct SynthParams {
  Shape dims;
  Index rank = 1;            // R_true
  double collinearity = 0.0; // C in [0, 1)
  double noise = 0.0;        // eta, realized noise-to-signal norm ratio
  std::uint64_t seed = 0;
};

struct SynthProblem {
  TensorD tensor;
  KruskalModel truth;
  double noise_norm_ratio = 0.0;  // ||X - X_true|| / ||X_true||, exact
};

// Synthetic problem: per-mode collinear factors, lambda ~ U[0.2, 0.8], plus
// Gaussian noise scaled so the realized noise-to-signal ratio is exactly
// `noise`.
inline SynthProblem gen_problem(const SynthParams& p) {
  if (p.dims.empty()) throw std::invalid_argument("gen_problem: empty shape");
  if (p.noise < 0.0) throw std::invalid_argument("noise must be >= 0");
  auto rng = seeded_engine(p.seed, kSynthStream);
  KruskalModel truth;
  truth.factors.reserve(p.dims.size());
  for (Index d : p.dims)
    truth.factors.push_back(gen_collinear_factor(d, p.rank, p.collinearity, rng));
  truth.lambda.resize(p.rank);
  std::uniform_real_distribution<double> unif(0.2, 0.8);
  for (Index r = 0; r < p.rank; ++r) truth.lambda[r] = unif(rng);

  TensorD x_true = reconstruct_dense(truth);
  if (p.noise == 0.0)
    return {std::move(x_true), std::move(truth), 0.0};

  std::normal_distribution<double> gauss(0.0, 1.0);
  Vecd nv(x_true.size());
  for (Index i = 0; i < nv.size(); ++i) nv[i] = gauss(rng);
  const double signal = x_true.norm();
  const double nn = nv.norm();
  Vecd values = x_true.values();
  if (signal > 0.0 && nn > 0.0) values += (p.noise * signal / nn) * nv;
  return {TensorD(p.dims, std::move(values)), std::move(truth),
          signal > 0.0 ? p.noise : 0.0};
}

namespace detail {

// Min-cost assignment with potentials, O(n^3). Returns col assigned to each
// row.
inline std::vector<Index> hungarian_min(const Matd& cost) {
  const Index n = cost.rows();
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
  std::vector<Index> p(n + 1, 0), way(n + 1, 0);
  for (Index i = 1; i <= n; ++i) {
    p[0] = i;
    Index j0 = 0;
    std::fill(minv.begin(), minv.end(), inf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const Index i0 = p[j0];
      Index j1 = 0;
      double delta = inf;
      for (Index j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (Index j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const Index j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<Index> row_to_col(static_cast<std::size_t>(n), 0);
  for (Index j = 1; j <= n; ++j)
    row_to_col[static_cast<std::size_t>(p[j] - 1)] = j - 1;
  return row_to_col;
}

}  // namespace detail

// Component match score in [-1, 1]: the best matching (exhaustive for
// R <= 8, Hungarian beyond) of mean per-component products of normalized
// column cosines across modes. lambda is ignored; 1 means every matched
// component pair is parallel in every mode.
inline double score(const KruskalModel& a, const KruskalModel& b) {
  a.validate();
  b.validate();
  if (a.order() != b.order() || a.dims() != b.dims() || a.rank() != b.rank())
    throw std::invalid_argument("score: models must share dims and rank");
  const Index r = a.rank();
  Matd pair_score = Matd::Ones(r, r);
  for (Index n = 0; n < a.order(); ++n) {
    const Matd& fa = a.factors[static_cast<std::size_t>(n)];
    const Matd& fb = b.factors[static_cast<std::size_t>(n)];
    Matd cos_n(r, r);
    for (Index i = 0; i < r; ++i) {
      const double na = fa.col(i).stableNorm();
      for (Index j = 0; j < r; ++j) {
        const double nb = fb.col(j).stableNorm();
        cos_n(i, j) = (na > 0 && nb > 0)
                          ? fa.col(i).dot(fb.col(j)) / (na * nb)
                          : 0.0;
      }
    }
    pair_score.array() *= cos_n.array();
  }
  if (r <= 8) {
    std::vector<Index> perm(static_cast<std::size_t>(r));
    std::iota(perm.begin(), perm.end(), Index{0});
    double best = -std::numeric_limits<double>::infinity();
    do {
      double total = 0.0;
      for (Index i = 0; i < r; ++i)
        total += pair_score(i, perm[static_cast<std::size_t>(i)]);
      best = std::max(best, total);
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best / static_cast<double>(r);
  }
  const auto match = detail::hungarian_min(Matd(-pair_score));
  double total = 0.0;
  for (Index i = 0; i < r; ++i)
    total += pair_score(i, match[static_cast<std::size_t>(i)]);
  return total / static_cast<double>(r);
}

struct GridCell {
  SynthParams params;
  Method method = Method::als;
  Index rank = 1;      // decomposition rank R (may differ from R_true)
  Index samples = 0;   // 0 = default_sample_count(R)
};

struct GridResult {
  SynthParams params;
  Method method = Method::als;
  Index rank = 1;
  double time_s = 0.0;
  int iters = 0;
  double fit = std::numeric_limits<double>::quiet_NaN();
  double score = std::numeric_limits<double>::quiet_NaN();
  std::string error;
};

// Runs one decomposition per cell with the standard experiment stopping rule
// (200-iteration cap unless overridden, |dF| <= 1e-4 for ALS, best-fit stall
// for the randomized methods, threshold 1 - 1.2 eta when eta > 0). Records
// wall time, iterations, final exact fit, and the truth-match score (defined
// only when R == R_true). A failed cell records its error and keeps NaNs.
inline std::vector<GridResult> run_experiment_grid(
    const std::vector<GridCell>& cells) {
  std::vector<GridResult> out;
  out.reserve(cells.size());
  for (const GridCell& cell : cells) {
    GridResult res;
    res.params = cell.params;
    res.method = cell.method;
    res.rank = cell.rank;
    try {
      const SynthProblem prob = gen_problem(cell.params);
      SolveOptions opts;
      opts.rng_seed = cell.params.seed;
      if (cell.params.noise > 0.0)
        opts.fit_threshold = 1.0 - 1.2 * cell.params.noise;
      const Index s =
          cell.samples > 0 ? cell.samples : default_sample_count(cell.rank);
      SolveResult sol;
      switch (cell.method) {
        case Method::als:
          sol = cp_als(prob.tensor, cell.rank, opts);
          break;
        case Method::rand:
          sol = cprand(prob.tensor, cell.rank, s, opts);
          break;
        case Method::mix:
          sol = cprand_mix(prob.tensor, cell.rank, s, opts);
          break;
        case Method::premix:
          sol = cprand_premix(prob.tensor, cell.rank, s, opts);
          break;
      }
      res.time_s = sol.total_seconds;
      res.iters = sol.iterations;
      res.fit = exact_fit(prob.tensor, sol.model);
      if (cell.rank == cell.params.rank)
        res.score = score(sol.model, prob.truth);
    } catch (const std::exception& e) {
      res.error = e.what();
    }
    out.push_back(std::move(res));
  }
  return out;
}

// One row per result. I reports the first mode length (experiment shapes are
// cubic).
inline void write_grid_csv(std::ostream& os,
                           const std::vector<GridResult>& results) {
  os << "method,N,I,R_true,R,C,eta,seed,time_s,iters,fit,score\n";
  for (const GridResult& r : results) {
    os << method_name(r.method) << ',' << r.params.dims.size() << ','
       << (r.params.dims.empty() ? 0 : r.params.dims[0]) << ','
       << r.params.rank << ',' << r.rank << ',' << r.params.collinearity
       << ',' << r.params.noise << ',' << r.params.seed << ',' << r.time_s
       << ',' << r.iters << ',' << r.fit << ',' << r.score << '\n';
  }
}

}  // namespace cprand
