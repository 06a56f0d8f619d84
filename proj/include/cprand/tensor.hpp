#pragma once

#include <numeric>
#include <span>
#include <utility>

#include "cprand/types.hpp"

namespace cprand {

// Dense tensor with generalized column-major storage: the mode-1 index is
// fastest, so offset(i) = sum_k i_k * stride_k with stride_k = prod_{m<k} I_m
// (all 0-based). Mode-n unfolding below is the literal layout law, i.e.
// matricize(X, 0) is a reshape.
//
// Instances are immutable after construction; operations return new tensors.
template <class Scalar>
class DenseTensor {
 public:
  DenseTensor(Shape dims, Vec<Scalar> values)
      : dims_(std::move(dims)), values_(std::move(values)) {
    if (dims_.empty()) throw std::invalid_argument("tensor order must be >= 1");
    strides_.resize(dims_.size());
    Index p = 1;
    for (std::size_t m = 0; m < dims_.size(); ++m) {
      if (dims_[m] < 1) throw std::invalid_argument("tensor dims must be >= 1");
      strides_[m] = p;
      if (p > values_.size()) throw std::invalid_argument("tensor size overflow");
      p *= dims_[m];
    }
    if (p != values_.size())
      throw std::invalid_argument("value count does not match dims");
  }

  static DenseTensor zeros(Shape dims) {
    Index p = 1;
    for (Index d : dims) {
      if (d < 1) throw std::invalid_argument("tensor dims must be >= 1");
      p *= d;
    }
    return DenseTensor(std::move(dims), Vec<Scalar>::Zero(p));
  }

  Index order() const { return static_cast<Index>(dims_.size()); }
  Index dim(Index mode) const { return dims_[static_cast<std::size_t>(mode)]; }
  const Shape& dims() const { return dims_; }
  Index size() const { return values_.size(); }
  const Vec<Scalar>& values() const { return values_; }

  // prod_{m<mode} I_m; distance between consecutive mode-m indices in memory.
  Index stride(Index mode) const { return strides_[static_cast<std::size_t>(mode)]; }

  Index offset_of(std::span<const Index> idx) const {
    Index off = 0;
    for (std::size_t m = 0; m < dims_.size(); ++m) off += idx[m] * strides_[m];
    return off;
  }

  Scalar value_at(Index offset) const { return values_[offset]; }
  Scalar operator()(std::span<const Index> idx) const {
    return values_[offset_of(idx)];
  }
  template <class... Ix>
  Scalar operator()(Ix... ix) const {
    const Index idx[] = {static_cast<Index>(ix)...};
    return values_[offset_of(std::span<const Index>(idx, sizeof...(Ix)))];
  }

  double norm() const { return values_.norm(); }

 private:
  Shape dims_;
  std::vector<Index> strides_;
  Vec<Scalar> values_;
};

using TensorD = DenseTensor<double>;
using TensorCd = DenseTensor<Complex>;

template <class Scalar>
double tensor_norm(const DenseTensor<Scalar>& x) {
  return x.norm();
}

inline Index shape_size(const Shape& dims) {
  return std::accumulate(dims.begin(), dims.end(), Index{1},
                         std::multiplies<Index>());
}

// Column index of entry idx in the mode-n unfolding:
// j = sum_{k != n} i_k * J_k with J_k = prod_{m<k, m != n} I_m (0-based).
inline Index unfold_column_index(Index mode, std::span<const Index> idx,
                                 const Shape& dims) {
  const Index n = static_cast<Index>(dims.size());
  if (mode < 0 || mode >= n) throw std::out_of_range("mode out of range");
  Index j = 0;
  Index jk = 1;
  for (Index k = 0; k < n; ++k) {
    if (k == mode) continue;
    if (idx[k] < 0 || idx[k] >= dims[k])
      throw std::out_of_range("multiindex out of range");
    j += idx[k] * jk;
    jk *= dims[k];
  }
  return j;
}

// Inverse of unfold_column_index: multiindex over modes != mode, written into
// idx (the slot for `mode` is left untouched).
inline void decode_column_index(Index mode, Index j, const Shape& dims,
                                std::span<Index> idx) {
  const Index n = static_cast<Index>(dims.size());
  for (Index k = 0; k < n; ++k) {
    if (k == mode) continue;
    idx[k] = j % dims[k];
    j /= dims[k];
  }
}

// Mode-n unfolding, I_n x (P / I_n). Column order follows the layout law, so
// this is a blockwise transposed copy; mode 0 is a straight reshape.
template <class Scalar>
Mat<Scalar> matricize(const DenseTensor<Scalar>& x, Index mode) {
  const Index n = x.order();
  if (mode < 0 || mode >= n) throw std::out_of_range("mode out of range");
  const Index in = x.dim(mode);
  const Index cols = x.size() / in;
  const Scalar* v = x.values().data();
  if (mode == 0)
    return Eigen::Map<const Mat<Scalar>>(v, in, cols);
  Mat<Scalar> out(in, cols);
  const Index stride = x.stride(mode);
  const Index blocks = x.size() / (stride * in);
  for (Index hi = 0; hi < blocks; ++hi) {
    Eigen::Map<const Mat<Scalar>> m(v + hi * stride * in, stride, in);
    out.block(0, hi * stride, in, stride) = m.transpose();
  }
  return out;
}

// Inverse of matricize for a tensor of shape `dims`.
template <class Scalar>
DenseTensor<Scalar> fold(const Mat<Scalar>& m, Index mode, const Shape& dims) {
  const Index n = static_cast<Index>(dims.size());
  if (mode < 0 || mode >= n) throw std::out_of_range("mode out of range");
  const Index p = shape_size(dims);
  const Index in = dims[static_cast<std::size_t>(mode)];
  if (m.rows() != in || m.cols() != p / in)
    throw std::invalid_argument("fold: matrix shape does not match dims");
  Vec<Scalar> values(p);
  if (mode == 0) {
    Eigen::Map<Mat<Scalar>>(values.data(), in, p / in) = m;
    return DenseTensor<Scalar>(dims, std::move(values));
  }
  Index stride = 1;
  for (Index k = 0; k < mode; ++k) stride *= dims[static_cast<std::size_t>(k)];
  const Index blocks = p / (stride * in);
  for (Index hi = 0; hi < blocks; ++hi) {
    Eigen::Map<Mat<Scalar>> block(values.data() + hi * stride * in, stride, in);
    block = m.block(0, hi * stride, in, stride).transpose();
  }
  return DenseTensor<Scalar>(dims, std::move(values));
}

// Mode-n fiber at the given multiindex; idx[mode] is ignored.
template <class Scalar>
Vec<Scalar> fiber(const DenseTensor<Scalar>& x, Index mode,
                  std::span<const Index> idx) {
  const Index in = x.dim(mode);
  const Index stride = x.stride(mode);
  Index base = 0;
  for (Index k = 0; k < x.order(); ++k) {
    if (k == mode) continue;
    base += idx[static_cast<std::size_t>(k)] * x.stride(k);
  }
  Vec<Scalar> out(in);
  const Scalar* v = x.values().data() + base;
  for (Index i = 0; i < in; ++i) out[i] = v[i * stride];
  return out;
}

// Gathers the mode-n fibers named by a sample table (one multiindex per row,
// columns ordered over modes != mode, low mode first). Returns I_n x S with
// column s = fiber s; equals columns of matricize(X, mode) picked by the
// table under the layout law. Columns are independent, so the copy loop may
// run on several workers without changing the result.
template <class Scalar>
Mat<Scalar> gather_fibers(const DenseTensor<Scalar>& x, Index mode,
                          const IndexTable& idxs) {
  const Index n = x.order();
  if (mode < 0 || mode >= n) throw std::out_of_range("mode out of range");
  if (idxs.cols() != n - 1)
    throw std::invalid_argument("gather_fibers: table must have order-1 columns");
  const Index s = idxs.rows();
  const Index in = x.dim(mode);
  const Index stride = x.stride(mode);
  Mat<Scalar> out(in, s);
  const Scalar* v = x.values().data();
  detail::parallel_for(Index{0}, s, Index{1 << 14} / std::max<Index>(in, 1),
                       [&](Index col) {
                         Index base = 0;
                         Index c = 0;
                         for (Index k = 0; k < n; ++k) {
                           if (k == mode) continue;
                           base += idxs(col, c++) * x.stride(k);
                         }
                         Scalar* dst = out.col(col).data();
                         for (Index i = 0; i < in; ++i)
                           dst[i] = v[base + i * stride];
                       });
  return out;
}

// Mode-n tensor-times-matrix: Y = X x_n A, so Y_(n) = A * X_(n). Works
// blockwise on the flat storage; no full matricization is formed.
template <class Scalar, class MatScalar>
auto ttm(const DenseTensor<Scalar>& x, const Mat<MatScalar>& a, Index mode)
    -> DenseTensor<decltype(Scalar{} * MatScalar{})> {
  using Out = decltype(Scalar{} * MatScalar{});
  const Index n = x.order();
  if (mode < 0 || mode >= n) throw std::out_of_range("mode out of range");
  const Index in = x.dim(mode);
  if (a.cols() != in) throw std::invalid_argument("ttm: matrix cols != I_n");
  Shape odims = x.dims();
  odims[static_cast<std::size_t>(mode)] = a.rows();
  Vec<Out> values(shape_size(odims));
  const Mat<Out> ao = a.template cast<Out>();
  if (mode == 0) {
    const Index cols = x.size() / in;
    Eigen::Map<const Mat<Scalar>> xm(x.values().data(), in, cols);
    Eigen::Map<Mat<Out>> ym(values.data(), a.rows(), cols);
    ym = ao * xm.template cast<Out>();
    return DenseTensor<Out>(std::move(odims), std::move(values));
  }
  const Index stride = x.stride(mode);
  const Index blocks = x.size() / (stride * in);
  for (Index hi = 0; hi < blocks; ++hi) {
    Eigen::Map<const Mat<Scalar>> xb(x.values().data() + hi * stride * in,
                                     stride, in);
    Eigen::Map<Mat<Out>> yb(values.data() + hi * stride * a.rows(), stride,
                            a.rows());
    yb = xb.template cast<Out>() * ao.transpose();
  }
  return DenseTensor<Out>(std::move(odims), std::move(values));
}

// Applies one matrix per mode: X x_1 U_1 x_2 ... x_N U_N. An identity slot
// may be passed as nullptr.
template <class Scalar, class MatScalar>
auto multi_ttm(const DenseTensor<Scalar>& x,
               const std::vector<const Mat<MatScalar>*>& mats)
    -> DenseTensor<decltype(Scalar{} * MatScalar{})> {
  using Out = decltype(Scalar{} * MatScalar{});
  if (static_cast<Index>(mats.size()) != x.order())
    throw std::invalid_argument("multi_ttm: need one matrix per mode");
  DenseTensor<Out> y(x.dims(), x.values().template cast<Out>());
  for (Index m = 0; m < x.order(); ++m) {
    if (mats[static_cast<std::size_t>(m)] == nullptr) continue;
    y = ttm(y, *mats[static_cast<std::size_t>(m)], m);
  }
  return y;
}

}  // namespace cprand
