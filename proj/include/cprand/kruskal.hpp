#pragma once

#include <random>
#include <span>
#include <vector>

#include "cprand/kr_linalg.hpp"
#include "cprand/tensor.hpp"
#include "cprand/types.hpp"

namespace cprand {

// Weighted Kruskal model: X ~ sum_r lambda_r a_r^(1) o ... o a_r^(N).
// All factors share the column count R; after any normalization step every
// factor column has unit 2-norm and lambda is nonnegative.
struct KruskalModel {
  Vecd lambda;
  std::vector<Matd> factors;

  Index order() const { return static_cast<Index>(factors.size()); }
  Index rank() const { return lambda.size(); }
  Shape dims() const {
    Shape d(factors.size());
    for (std::size_t m = 0; m < factors.size(); ++m) d[m] = factors[m].rows();
    return d;
  }

  void validate() const {
    if (factors.empty()) throw std::invalid_argument("model has no factors");
    for (const Matd& a : factors)
      if (a.cols() != lambda.size())
        throw std::invalid_argument("factor rank does not match lambda");
  }
};

// Model value at one multiindex, sum_r lambda_r prod_n A^(n)(i_n, r).
inline double model_entry(const KruskalModel& m, std::span<const Index> idx) {
  Eigen::RowVectorXd p = m.lambda.transpose();
  for (Index n = 0; n < m.order(); ++n)
    p.array() *= m.factors[static_cast<std::size_t>(n)]
                     .row(idx[static_cast<std::size_t>(n)])
                     .array();
  return p.sum();
}

// Rescales mode n to unit columns, moving the norms into lambda. On the
// first mode of an outer pass the norms multiply into lambda; on later modes
// they overwrite it (the solve for each mode reabsorbs the full weight, so
// end-of-pass lambda always holds the current component weights). A zero
// column becomes a random unit vector with lambda_r = 0.
inline void normalize_columns(KruskalModel& m, Index mode, bool first_of_pass,
                              std::mt19937_64& rng) {
  Matd& a = m.factors[static_cast<std::size_t>(mode)];
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (Index r = 0; r < a.cols(); ++r) {
    const double norm = a.col(r).stableNorm();
    if (norm == 0.0) {
      Vecd fresh(a.rows());
      for (Index i = 0; i < a.rows(); ++i) fresh[i] = gauss(rng);
      a.col(r) = fresh / fresh.stableNorm();
      m.lambda[r] = 0.0;
      continue;
    }
    a.col(r) /= norm;
    m.lambda[r] = first_of_pass ? m.lambda[r] * norm : norm;
  }
}

// Dense reconstruction sum_r lambda_r a_r^(1) o ... o a_r^(N).
inline TensorD reconstruct_dense(const KruskalModel& m) {
  m.validate();
  const Shape dims = m.dims();
  if (m.order() == 1) {
    Vecd v = m.factors[0] * m.lambda;
    return TensorD(dims, std::move(v));
  }
  const auto seq = kr_factor_sequence(m.factors, Index{0});
  Matd unf = m.factors[0] * m.lambda.asDiagonal() *
             khatri_rao(seq).transpose();
  return fold(unf, Index{0}, dims);
}

}  // namespace cprand
