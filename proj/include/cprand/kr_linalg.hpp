#pragma once

#include <limits>
#include <vector>

#include "cprand/tensor.hpp"
#include "cprand/types.hpp"

namespace cprand {

// Kronecker product, (IK) x (JL); row (i,k) maps to i*K + k, i.e. the right
// factor's row index is fastest.
template <class Scalar>
Mat<Scalar> kron(const Mat<Scalar>& a, const Mat<Scalar>& b) {
  Mat<Scalar> out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Index i = 0; i < a.rows(); ++i)
    for (Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

// Columnwise Kronecker (Khatri-Rao), (IK) x R. Same row order as kron.
template <class Scalar>
Mat<Scalar> khatri_rao(const Mat<Scalar>& a, const Mat<Scalar>& b) {
  if (a.cols() != b.cols())
    throw std::invalid_argument("khatri_rao: column counts differ");
  Mat<Scalar> out(a.rows() * b.rows(), a.cols());
  for (Index r = 0; r < a.cols(); ++r)
    for (Index i = 0; i < a.rows(); ++i)
      out.col(r).segment(i * b.rows(), b.rows()) = a(i, r) * b.col(r);
  return out;
}

// Left-to-right pairwise Khatri-Rao of a factor list (associative).
template <class Scalar>
Mat<Scalar> khatri_rao(const std::vector<const Mat<Scalar>*>& mats) {
  if (mats.empty()) throw std::invalid_argument("khatri_rao: empty list");
  Mat<Scalar> out = *mats[0];
  for (std::size_t k = 1; k < mats.size(); ++k) out = khatri_rao(out, *mats[k]);
  return out;
}

template <class Scalar>
Mat<Scalar> hadamard(const Mat<Scalar>& a, const Mat<Scalar>& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw std::invalid_argument("hadamard: shape mismatch");
  return a.cwiseProduct(b);
}

// Factors ordered as they appear in Z^(n) = A^(N) kr ... kr A^(n+1) kr
// A^(n-1) kr ... kr A^(1): highest mode first, mode `skip` omitted. Under the
// layout law this makes row j of the product correspond to column j of the
// mode-n unfolding.
template <class Scalar>
std::vector<const Mat<Scalar>*> kr_factor_sequence(
    const std::vector<Mat<Scalar>>& factors, Index skip) {
  std::vector<const Mat<Scalar>*> seq;
  seq.reserve(factors.size());
  for (Index m = static_cast<Index>(factors.size()) - 1; m >= 0; --m)
    if (m != skip) seq.push_back(&factors[static_cast<std::size_t>(m)]);
  return seq;
}

// Gram matrix of the mode-n Khatri-Rao product without forming it:
// Z^(n)T Z^(n) = had_{m != n} A^(m)T A^(m). Empty product is all-ones.
inline Matd gram_of_khatri_rao(const std::vector<Matd>& factors, Index skip) {
  if (factors.empty()) throw std::invalid_argument("gram: empty factor list");
  const Index r = factors[0].cols();
  Matd v = Matd::Ones(r, r);
  for (Index m = 0; m < static_cast<Index>(factors.size()); ++m) {
    if (m == skip) continue;
    const Matd& a = factors[static_cast<std::size_t>(m)];
    if (a.cols() != r) throw std::invalid_argument("gram: rank mismatch");
    v.array() *= (a.transpose() * a).array();
  }
  return v;
}

// Matricized-tensor times Khatri-Rao product: X_(n) * Z^(n), I_n x R.
inline Matd mttkrp(const TensorD& x, const std::vector<Matd>& factors,
                   Index mode) {
  if (static_cast<Index>(factors.size()) != x.order())
    throw std::invalid_argument("mttkrp: need one factor per mode");
  if (x.order() == 1)
    return matricize(x, 0) *
           Matd::Ones(1, factors[0].cols());
  const auto seq = kr_factor_sequence(factors, mode);
  return matricize(x, mode) * khatri_rao(seq);
}

namespace detail {

template <class Scalar>
double rank_threshold(const Mat<Scalar>& a) {
  return static_cast<double>(std::max(a.rows(), a.cols())) *
         std::numeric_limits<double>::epsilon();
}

}  // namespace detail

// Least-squares solve of A X = B for tall A (n >= d) via column-pivoted QR.
// A pivot |R_ii| below max(n,d)*eps*|R_11| marks rank deficiency, in which
// case the minimum-norm solution is returned instead.
template <class Scalar>
Mat<Scalar> least_squares(const Mat<Scalar>& a, const Mat<Scalar>& b) {
  if (a.rows() < a.cols())
    throw std::invalid_argument("least_squares: system is underdetermined");
  if (b.rows() != a.rows())
    throw std::invalid_argument("least_squares: rhs row count mismatch");
  Eigen::ColPivHouseholderQR<Mat<Scalar>> qr;
  qr.setThreshold(detail::rank_threshold(a));
  qr.compute(a);
  if (qr.rank() == a.cols()) return qr.solve(b);
  Eigen::CompleteOrthogonalDecomposition<Mat<Scalar>> cod;
  cod.setThreshold(detail::rank_threshold(a));
  cod.compute(a);
  return cod.solve(b);
}

struct LeverageProfile {
  Vecd scores;       // l_i = squared row norm of a thin orthonormal basis
  double coherence;  // max_i l_i
};

// Leverage scores and coherence of a tall matrix, computed from the thin
// orthogonal factor of a column-pivoted QR. Scores sum to rank(A); for
// full-rank input, d/n <= coherence <= 1.
inline LeverageProfile leverage_and_coherence(const Matd& a) {
  if (a.rows() < a.cols())
    throw std::invalid_argument("leverage: matrix must be tall");
  Eigen::ColPivHouseholderQR<Matd> qr;
  qr.setThreshold(detail::rank_threshold(a));
  qr.compute(a);
  const Index r = qr.rank();
  LeverageProfile out;
  if (r == 0) {
    out.scores = Vecd::Zero(a.rows());
    out.coherence = 0.0;
    return out;
  }
  Matd q = qr.householderQ() * Matd::Identity(a.rows(), r);
  out.scores = q.rowwise().squaredNorm();
  out.coherence = out.scores.maxCoeff();
  return out;
}

struct CoherenceProducts {
  double kron_coherence;        // mu(A kron B); equals the product exactly
  double khatri_rao_coherence;  // mu(A kr B);   at most the product
  double coherence_product;     // mu(A) * mu(B)
};

// Evaluates the coherence of explicit Kronecker and Khatri-Rao products
// against mu(A) * mu(B).
inline CoherenceProducts coherence_product_checks(const Matd& a,
                                                  const Matd& b) {
  if (a.cols() != b.cols())
    throw std::invalid_argument("coherence_product_checks: column counts differ");
  CoherenceProducts out;
  out.kron_coherence = leverage_and_coherence(kron(a, b)).coherence;
  out.khatri_rao_coherence = leverage_and_coherence(khatri_rao(a, b)).coherence;
  out.coherence_product = leverage_and_coherence(a).coherence *
                          leverage_and_coherence(b).coherence;
  return out;
}

}  // namespace cprand
