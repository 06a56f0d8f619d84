#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <vector>

#include "cprand/solver.hpp"
#include "cprand/synth.hpp"
#include "test_util.hpp"

using cprand::GridCell;
using cprand::Index;
using cprand::KruskalModel;
using cprand::Matd;
using cprand::Method;
using cprand::Shape;
using cprand::SynthParams;
using cprand::Vecd;

namespace {

// Reference score: build the per-pair cosine-product matrix directly and
// take the max mean over every permutation, regardless of rank.
double brute_force_score(const KruskalModel& a, const KruskalModel& b) {
  const Index r = a.rank();
  Matd pair = Matd::Ones(r, r);
  for (Index n = 0; n < a.order(); ++n) {
    const Matd& fa = a.factors[static_cast<std::size_t>(n)];
    const Matd& fb = b.factors[static_cast<std::size_t>(n)];
    for (Index i = 0; i < r; ++i)
      for (Index j = 0; j < r; ++j)
        pair(i, j) *= fa.col(i).dot(fb.col(j)) /
                      (fa.col(i).norm() * fb.col(j).norm());
  }
  std::vector<Index> perm(static_cast<std::size_t>(r));
  std::iota(perm.begin(), perm.end(), Index{0});
  double best = -1e300;
  do {
    double total = 0.0;
    for (Index i = 0; i < r; ++i)
      total += pair(i, perm[static_cast<std::size_t>(i)]);
    best = std::max(best, total);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best / static_cast<double>(r);
}

KruskalModel random_model(const Shape& dims, Index rank, std::uint64_t seed) {
  auto g = testutil::rng(seed);
  KruskalModel m;
  m.lambda = Vecd::Ones(rank);
  for (Index d : dims) m.factors.push_back(testutil::random_matrix(d, rank, g));
  return m;
}

}  // namespace

TEST_CASE("collinear factor hits the requested gram matrix") {
  auto g = testutil::rng(91);
  SUBCASE("C=0 gives orthonormal columns") {
    const Matd a = cprand::gen_collinear_factor(12, 5, 0.0, g);
    CHECK((a.transpose() * a - Matd::Identity(5, 5)).cwiseAbs().maxCoeff() <=
          1e-10);
  }
  SUBCASE("C=0.9 gives 0.9 off the diagonal") {
    const Matd a = cprand::gen_collinear_factor(20, 5, 0.9, g);
    const Matd gram = a.transpose() * a;
    for (Index i = 0; i < 5; ++i) {
      CHECK(gram(i, i) == doctest::Approx(1.0).epsilon(1e-10));
      for (Index j = 0; j < 5; ++j)
        if (i != j) CHECK(gram(i, j) == doctest::Approx(0.9).epsilon(1e-10));
    }
  }
  SUBCASE("every column is unit norm") {
    const Matd a = cprand::gen_collinear_factor(9, 4, 0.37, g);
    for (Index r = 0; r < 4; ++r)
      CHECK(a.col(r).norm() == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("R=1 gives a unit column") {
    const Matd a = cprand::gen_collinear_factor(7, 1, 0.5, g);
    CHECK(a.cols() == 1);
    CHECK(a.col(0).norm() == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("rejects bad parameters") {
    CHECK_THROWS_AS(cprand::gen_collinear_factor(5, 6, 0.0, g),
                    std::invalid_argument);
    CHECK_THROWS_AS(cprand::gen_collinear_factor(5, 2, 1.0, g),
                    std::invalid_argument);
    CHECK_THROWS_AS(cprand::gen_collinear_factor(5, 2, -0.1, g),
                    std::invalid_argument);
    CHECK_THROWS_AS(cprand::gen_collinear_factor(5, 0, 0.0, g),
                    std::invalid_argument);
  }
}

TEST_CASE("generated problems match their parameters") {
  SynthParams p;
  p.dims = {8, 7, 6};
  p.rank = 3;
  p.collinearity = 0.5;
  p.seed = 17;

  SUBCASE("zero noise reproduces the truth tensor exactly") {
    p.noise = 0.0;
    const auto prob = cprand::gen_problem(p);
    const auto dense = cprand::reconstruct_dense(prob.truth);
    CHECK(prob.tensor.values() == dense.values());
    CHECK(prob.noise_norm_ratio == 0.0);
  }

  SUBCASE("realized noise ratio is exact") {
    p.noise = 0.25;
    const auto prob = cprand::gen_problem(p);
    const auto x_true = cprand::reconstruct_dense(prob.truth);
    const double ratio =
        (prob.tensor.values() - x_true.values()).norm() / x_true.norm();
    CHECK(ratio == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(prob.noise_norm_ratio == doctest::Approx(0.25).epsilon(1e-12));
  }

  SUBCASE("truth columns are unit norm with the requested gram") {
    p.noise = 0.01;
    const auto prob = cprand::gen_problem(p);
    for (const Matd& a : prob.truth.factors) {
      const Matd gram = a.transpose() * a;
      for (Index i = 0; i < p.rank; ++i) {
        CHECK(gram(i, i) == doctest::Approx(1.0).epsilon(1e-10));
        for (Index j = 0; j < p.rank; ++j)
          if (i != j)
            CHECK(gram(i, j) == doctest::Approx(0.5).epsilon(1e-10));
      }
    }
  }

  SUBCASE("lambda lands in [0.2, 0.8]") {
    const auto prob = cprand::gen_problem(p);
    for (Index r = 0; r < p.rank; ++r) {
      CHECK(prob.truth.lambda[r] >= 0.2);
      CHECK(prob.truth.lambda[r] <= 0.8);
    }
  }

  SUBCASE("deterministic per seed") {
    p.noise = 0.1;
    const auto a = cprand::gen_problem(p);
    const auto b = cprand::gen_problem(p);
    CHECK(a.tensor.values() == b.tensor.values());
    p.seed = 18;
    const auto c = cprand::gen_problem(p);
    CHECK(a.tensor.values() != c.tensor.values());
  }

  SUBCASE("truth fit under 1% noise stays near 0.99") {
    p.dims = {20, 20, 20};
    p.rank = 5;
    p.noise = 0.01;
    const auto prob = cprand::gen_problem(p);
    CHECK(cprand::exact_fit(prob.tensor, prob.truth) >= 0.985);
  }

  SUBCASE("rejects bad parameters") {
    SynthParams bad = p;
    bad.dims = {};
    CHECK_THROWS_AS(cprand::gen_problem(bad), std::invalid_argument);
    bad = p;
    bad.noise = -0.5;
    CHECK_THROWS_AS(cprand::gen_problem(bad), std::invalid_argument);
  }
}

TEST_CASE("score is invariant to component relabeling") {
  const Shape dims{6, 5, 4};
  const KruskalModel m = random_model(dims, 3, 5);

  SUBCASE("identical models score 1") {
    CHECK(cprand::score(m, m) == doctest::Approx(1.0).epsilon(1e-12));
  }

  SUBCASE("permutation, rescaling, and paired sign flips score 1") {
    KruskalModel shuffled = m;
    const Index perm[3] = {2, 0, 1};
    for (std::size_t n = 0; n < shuffled.factors.size(); ++n) {
      Matd a(dims[n], 3);
      for (Index r = 0; r < 3; ++r) a.col(perm[r]) = m.factors[n].col(r);
      shuffled.factors[n] = a;
    }
    // Positive column rescaling plus lambda noise; score ignores both.
    shuffled.factors[0].col(1) *= 3.5;
    shuffled.factors[2].col(0) *= 0.25;
    shuffled.lambda << 9.0, 0.1, 2.0;
    // Flip component 2 in two modes at once; the product of cosines is even
    // in the sign.
    shuffled.factors[0].col(2) *= -1.0;
    shuffled.factors[1].col(2) *= -1.0;
    CHECK(cprand::score(m, shuffled) == doctest::Approx(1.0).epsilon(1e-12));
  }

  SUBCASE("orthogonal components score 0") {
    KruskalModel a, b;
    a.lambda = Vecd::Ones(2);
    b.lambda = Vecd::Ones(2);
    for (Index d : dims) {
      Matd fa = Matd::Zero(d, 2), fb = Matd::Zero(d, 2);
      fa(0, 0) = 1.0;
      fa(1, 1) = 1.0;
      fb(2, 0) = 1.0;
      fb(3, 1) = 1.0;
      a.factors.push_back(fa);
      b.factors.push_back(fb);
    }
    CHECK(cprand::score(a, b) == doctest::Approx(0.0).epsilon(1e-15));
  }

  SUBCASE("hand-built rank-2 cosines give 0.512") {
    // Cosine 0.8 per mode on the matched pairs, 0 across; the best of the
    // two permutations averages 0.8^3 twice.
    KruskalModel a, b;
    a.lambda = Vecd::Ones(2);
    b.lambda = Vecd::Ones(2);
    for (int n = 0; n < 3; ++n) {
      Matd fa = Matd::Zero(3, 2), fb = Matd::Zero(3, 2);
      fa(0, 0) = 1.0;
      fa(1, 1) = 1.0;
      fb(0, 0) = 0.8;
      fb(2, 0) = 0.6;
      fb(1, 1) = 0.8;
      fb(2, 1) = 0.6;
      a.factors.push_back(fa);
      b.factors.push_back(fb);
    }
    CHECK(cprand::score(a, b) == doctest::Approx(0.512).epsilon(1e-12));
  }

  SUBCASE("rejects mismatched shapes") {
    CHECK_THROWS_AS(cprand::score(m, random_model({6, 5, 3}, 3, 7)),
                    std::invalid_argument);
    CHECK_THROWS_AS(cprand::score(m, random_model(dims, 2, 7)),
                    std::invalid_argument);
  }
}

TEST_CASE("hungarian matching agrees with exhaustive search") {
  // Rank 9 takes the assignment path; the oracle enumerates all 9!
  // permutations.
  const Shape dims{11, 10, 12};
  for (std::uint64_t seed : {1, 2, 3}) {
    const KruskalModel a = random_model(dims, 9, seed);
    const KruskalModel b = random_model(dims, 9, seed + 100);
    CHECK(cprand::score(a, b) ==
          doctest::Approx(brute_force_score(a, b)).epsilon(1e-12));
  }
}

TEST_CASE("experiment grid runs cells independently") {
  SUBCASE("empty grid gives an empty table") {
    CHECK(cprand::run_experiment_grid({}).empty());
    std::ostringstream os;
    cprand::write_grid_csv(os, {});
    CHECK(os.str() == "method,N,I,R_true,R,C,eta,seed,time_s,iters,fit,score\n");
  }

  SUBCASE("noiseless cell reaches fit near 1") {
    GridCell cell;
    cell.params.dims = {8, 8, 8};
    cell.params.rank = 2;
    cell.params.collinearity = 0.3;
    cell.params.noise = 0.0;
    cell.params.seed = 3;
    cell.method = Method::als;
    cell.rank = 2;
    const auto results = cprand::run_experiment_grid({cell});
    REQUIRE(results.size() == 1);
    CHECK(results[0].error.empty());
    CHECK(results[0].fit >= 0.999);
    CHECK(results[0].score >= 0.99);
    CHECK(results[0].iters >= 1);
    CHECK(results[0].time_s >= 0.0);
  }

  SUBCASE("failed cells record the error and keep NaNs") {
    GridCell good;
    good.params.dims = {6, 6, 6};
    good.params.rank = 1;
    good.params.seed = 5;
    good.rank = 1;
    GridCell bad = good;
    bad.params.dims = {};
    const auto results = cprand::run_experiment_grid({bad, good});
    REQUIRE(results.size() == 2);
    CHECK(!results[0].error.empty());
    CHECK(std::isnan(results[0].fit));
    CHECK(std::isnan(results[0].score));
    CHECK(results[1].error.empty());
    CHECK(results[1].fit >= 0.999);
  }

  SUBCASE("score is left NaN when the ranks differ") {
    GridCell cell;
    cell.params.dims = {6, 6, 6};
    cell.params.rank = 2;
    cell.params.seed = 11;
    cell.rank = 3;
    const auto results = cprand::run_experiment_grid({cell});
    REQUIRE(results.size() == 1);
    CHECK(results[0].error.empty());
    CHECK(std::isnan(results[0].score));
  }

  SUBCASE("csv carries one row per cell") {
    GridCell cell;
    cell.params.dims = {6, 6, 6};
    cell.params.rank = 1;
    cell.params.collinearity = 0.5;
    cell.params.noise = 0.1;
    cell.params.seed = 21;
    cell.method = Method::rand;
    cell.rank = 1;
    const auto results = cprand::run_experiment_grid({cell, cell});
    std::ostringstream os;
    cprand::write_grid_csv(os, results);
    std::istringstream is(os.str());
    std::string line;
    std::getline(is, line);
    CHECK(line == "method,N,I,R_true,R,C,eta,seed,time_s,iters,fit,score");
    int rows = 0;
    while (std::getline(is, line)) {
      ++rows;
      CHECK(line.substr(0, 5) == "rand,");
      CHECK(line.find(",3,6,1,1,0.5,0.1,21,") != std::string::npos);
    }
    CHECK(rows == 2);
  }
}
