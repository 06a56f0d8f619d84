#include <doctest.h>

#include <numeric>
#include <span>
#include <vector>

#include <cprand/cprand.hpp>

#include "test_util.hpp"

using namespace cprand;
using testutil::for_each_index;
using testutil::random_matrix;
using testutil::random_tensor;

namespace {

// Unfolding built entry-by-entry from the layout law, with the column index
// accumulated by explicit products, independent of unfold_column_index.
Matd brute_force_matricize(const TensorD& x, Index mode) {
  const Shape& dims = x.dims();
  const Index n = x.order();
  Matd out(x.dim(mode), x.size() / x.dim(mode));
  for_each_index(dims, [&](const Shape& idx) {
    Index j = 0;
    Index jk = 1;
    for (Index k = 0; k < n; ++k) {
      if (k == mode) continue;
      j += idx[static_cast<std::size_t>(k)] * jk;
      jk *= dims[static_cast<std::size_t>(k)];
    }
    out(idx[static_cast<std::size_t>(mode)], j) =
        x(std::span<const Index>(idx));
  });
  return out;
}

}  // namespace

TEST_CASE("layout: strides, offsets, and entry access") {
  TensorD x = random_tensor({3, 4, 5}, 11);
  CHECK(x.order() == 3);
  CHECK(x.size() == 60);
  CHECK(x.stride(0) == 1);
  CHECK(x.stride(1) == 3);
  CHECK(x.stride(2) == 12);
  Index off = 0;
  for_each_index(x.dims(), [&](const Shape& idx) {
    CHECK(x.offset_of(idx) == off);
    CHECK(x(std::span<const Index>(idx)) == x.values()[off]);
    ++off;
  });
  CHECK(x(2, 3, 4) == x.values()[2 + 3 * 3 + 4 * 12]);
  CHECK(x.norm() == doctest::Approx(x.values().norm()));
  CHECK(tensor_norm(x) == x.norm());
}

TEST_CASE("tensor constructor validates shape") {
  CHECK_THROWS_AS(TensorD({}, Vecd::Zero(1)), std::invalid_argument);
  CHECK_THROWS_AS(TensorD({2, 0}, Vecd::Zero(0)), std::invalid_argument);
  CHECK_THROWS_AS(TensorD({2, 3}, Vecd::Zero(5)), std::invalid_argument);
  CHECK_THROWS_AS(TensorD({2, 3}, Vecd::Zero(7)), std::invalid_argument);
  TensorD z = TensorD::zeros({2, 3, 4});
  CHECK(z.size() == 24);
  CHECK(z.norm() == 0.0);
}

TEST_CASE("unfold column index matches the worked example") {
  // dims (3,4,5), 1-based index (2,3,4), mode-1 unfolding: 1-based column 15.
  const Shape dims{3, 4, 5};
  const Shape idx{1, 2, 3};
  CHECK(unfold_column_index(0, idx, dims) == 14);
}

TEST_CASE("unfold column index round-trips through decode") {
  const Shape dims{3, 4, 5, 2};
  for (Index mode = 0; mode < 4; ++mode) {
    for_each_index(dims, [&](const Shape& idx) {
      const Index j = unfold_column_index(mode, idx, dims);
      Shape back(dims.size(), 0);
      decode_column_index(mode, j, dims, back);
      back[static_cast<std::size_t>(mode)] =
          idx[static_cast<std::size_t>(mode)];
      CHECK(back == idx);
    });
  }
}

TEST_CASE("unfold column index rejects bad input") {
  const Shape dims{3, 4};
  const Shape idx{1, 2};
  CHECK_THROWS_AS(unfold_column_index(2, idx, dims), std::out_of_range);
  const Shape bad{1, 4};
  CHECK_THROWS_AS(unfold_column_index(0, bad, dims), std::out_of_range);
}

TEST_CASE("matricize equals the brute-force unfolding on every mode") {
  for (const Shape& dims :
       {Shape{4}, Shape{3, 5}, Shape{3, 4, 5}, Shape{2, 3, 2, 4}}) {
    TensorD x = random_tensor(dims, 7 + dims.size());
    for (Index mode = 0; mode < x.order(); ++mode) {
      const Matd oracle = brute_force_matricize(x, mode);
      const Matd got = matricize(x, mode);
      REQUIRE(got.rows() == oracle.rows());
      REQUIRE(got.cols() == oracle.cols());
      CHECK((got - oracle).norm() == 0.0);
    }
  }
}

TEST_CASE("fold inverts matricize on every mode") {
  const Shape dims{3, 4, 5, 2};
  TensorD x = random_tensor(dims, 13);
  for (Index mode = 0; mode < x.order(); ++mode) {
    TensorD back = fold(matricize(x, mode), mode, dims);
    CHECK((back.values() - x.values()).norm() == 0.0);
  }
  CHECK_THROWS_AS(fold(Matd(Matd::Zero(3, 5)), 0, dims), std::invalid_argument);
}

TEST_CASE("ttm matches unfold-multiply-fold") {
  const Shape dims{3, 4, 5};
  TensorD x = random_tensor(dims, 17);
  auto g = testutil::rng(18);
  for (Index mode = 0; mode < 3; ++mode) {
    const Matd a = random_matrix(6, x.dim(mode), g);
    const TensorD y = ttm(x, a, mode);
    Shape odims = dims;
    odims[static_cast<std::size_t>(mode)] = a.rows();
    const TensorD oracle = fold(Matd(a * matricize(x, mode)), mode, odims);
    CHECK(y.dims() == odims);
    CHECK((y.values() - oracle.values()).norm() <=
          1e-13 * oracle.values().norm());
  }
  CHECK_THROWS_AS(ttm(x, Matd(Matd::Zero(2, 99)), 0), std::invalid_argument);
}

TEST_CASE("ttm on different modes commutes") {
  TensorD x = random_tensor({3, 4, 5}, 19);
  auto g = testutil::rng(20);
  const Matd a = random_matrix(2, 3, g);
  const Matd b = random_matrix(6, 5, g);
  const TensorD ab = ttm(ttm(x, a, 0), b, 2);
  const TensorD ba = ttm(ttm(x, b, 2), a, 0);
  CHECK(ab.dims() == ba.dims());
  CHECK((ab.values() - ba.values()).norm() <= 1e-13 * ab.values().norm());
}

TEST_CASE("multi ttm matches the Kronecker identity for unfoldings") {
  // Y = X x_1 B1 x_2 B2 x_3 B3 has Y_(n) = B_n X_(n) (kron of the others,
  // highest mode first, transposed).
  const Shape dims{3, 4, 5};
  TensorD x = random_tensor(dims, 23);
  auto g = testutil::rng(24);
  std::vector<Matd> bs;
  bs.push_back(random_matrix(2, 3, g));
  bs.push_back(random_matrix(6, 4, g));
  bs.push_back(random_matrix(4, 5, g));
  std::vector<const Matd*> ptrs{&bs[0], &bs[1], &bs[2]};
  const TensorD y = multi_ttm(x, ptrs);
  REQUIRE(y.dims() == Shape{2, 6, 4});
  for (Index mode = 0; mode < 3; ++mode) {
    std::vector<Matd> others;
    for (Index m = 2; m >= 0; --m)
      if (m != mode) others.push_back(bs[static_cast<std::size_t>(m)]);
    const Matd k = kron(others[0], others[1]);
    const Matd oracle = bs[static_cast<std::size_t>(mode)] *
                        matricize(x, mode) * k.transpose();
    const Matd got = matricize(y, mode);
    CHECK((got - oracle).norm() <= 1e-12 * oracle.norm());
  }
}

TEST_CASE("multi ttm skips null slots") {
  TensorD x = random_tensor({3, 4}, 29);
  auto g = testutil::rng(30);
  const Matd b = random_matrix(5, 4, g);
  std::vector<const Matd*> ptrs{nullptr, &b};
  const TensorD y = multi_ttm(x, ptrs);
  const TensorD oracle = ttm(x, b, 1);
  CHECK(y.dims() == oracle.dims());
  CHECK((y.values() - oracle.values()).norm() == 0.0);
}

TEST_CASE("fiber extracts a mode line") {
  const Shape dims{3, 4, 5};
  TensorD x = random_tensor(dims, 31);
  for (Index mode = 0; mode < 3; ++mode) {
    Shape idx{2, 1, 4};
    const Vecd f = fiber(x, mode, idx);
    REQUIRE(f.size() == x.dim(mode));
    for (Index i = 0; i < f.size(); ++i) {
      Shape at = idx;
      at[static_cast<std::size_t>(mode)] = i;
      CHECK(f[i] == x(std::span<const Index>(at)));
    }
  }
}

TEST_CASE("gather_fibers picks the named unfolding columns") {
  const Shape dims{3, 4, 5};
  TensorD x = random_tensor(dims, 37);
  auto g = testutil::rng(38);
  for (Index mode = 0; mode < 3; ++mode) {
    const Matd xm = matricize(x, mode);
    const Index s = 9;
    IndexTable idxs(s, 2);
    std::vector<Index> other_dims;
    for (Index k = 0; k < 3; ++k)
      if (k != mode) other_dims.push_back(dims[static_cast<std::size_t>(k)]);
    for (Index row = 0; row < s; ++row)
      for (Index c = 0; c < 2; ++c) {
        std::uniform_int_distribution<Index> u(
            0, other_dims[static_cast<std::size_t>(c)] - 1);
        idxs(row, c) = u(g);
      }
    const Matd got = gather_fibers(x, mode, idxs);
    REQUIRE(got.rows() == x.dim(mode));
    REQUIRE(got.cols() == s);
    for (Index row = 0; row < s; ++row) {
      Shape full(3, 0);
      Index c = 0;
      for (Index k = 0; k < 3; ++k)
        if (k != mode) full[static_cast<std::size_t>(k)] = idxs(row, c++);
      const Index j = unfold_column_index(mode, full, dims);
      CHECK((got.col(row) - xm.col(j)).norm() == 0.0);
    }
  }
  CHECK_THROWS_AS(gather_fibers(x, 0, IndexTable(2, 5)),
                  std::invalid_argument);
}

TEST_CASE("mode-0 matricize is a plain reshape") {
  TensorD x = random_tensor({4, 3, 2}, 41);
  const Matd m = matricize(x, 0);
  for (Index j = 0; j < m.cols(); ++j)
    for (Index i = 0; i < m.rows(); ++i)
      CHECK(m(i, j) == x.values()[i + 4 * j]);
}
