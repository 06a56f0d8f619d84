#pragma once

#include <memory>
#include <random>
#include <vector>

#include "cprand/rng.hpp"
#include "cprand/sampling.hpp"
#include "cprand/solver.hpp"
#include "cprand/tensor.hpp"
#include "cprand/transforms.hpp"

namespace cprand {

// Per-mode randomized orthogonal mixing F_m D_m: a Rademacher sign flip
// followed by a fast unitary transform (FFT), an orthogonal one (DCT-II or
// WHT), or nothing (identity, a test-only kind whose signs are also forced
// to +1 so the operator is fully inert).
struct MixingOperator {
  TransformKind kind = TransformKind::fft;
  Shape dims;
  std::vector<Vecd> signs;  // entries exactly +-1, one vector per mode
};

inline MixingOperator make_mixing_operator(const Shape& dims,
                                           TransformKind kind,
                                           std::uint64_t seed) {
  if (dims.empty()) throw std::invalid_argument("mixing: empty shape");
  if (kind == TransformKind::wht)
    for (Index d : dims)
      if (!detail::is_pow2(d))
        throw std::invalid_argument("wht requires power-of-two mode lengths");
  MixingOperator op;
  op.kind = kind;
  op.dims = dims;
  op.signs.reserve(dims.size());
  auto rng = seeded_engine(seed, kMixingStream);
  std::bernoulli_distribution coin(0.5);
  for (Index d : dims) {
    Vecd s(d);
    if (kind == TransformKind::identity) {
      s.setOnes();
    } else {
      for (Index i = 0; i < d; ++i) s[i] = coin(rng) ? 1.0 : -1.0;
    }
    op.signs.push_back(std::move(s));
  }
  return op;
}

namespace detail {

// One mode's transform with unitary/orthogonal scaling. Complex instantiation
// serves the FFT path; the real one serves DCT-II / WHT / identity.
template <class Scalar>
class ModeTransform {
 public:
  ModeTransform(TransformKind kind, Index n) : kind_(kind), n_(n) {
    if constexpr (std::is_same_v<Scalar, Complex>) {
      if (kind != TransformKind::fft && kind != TransformKind::identity)
        throw std::invalid_argument("real transform applied on complex path");
      if (kind == TransformKind::fft) {
        fft_ = std::make_unique<Fft>(n);
        scale_ = 1.0 / std::sqrt(static_cast<double>(n));
      }
    } else {
      switch (kind) {
        case TransformKind::dct:
          dct_ = std::make_unique<Dct>(n);
          break;
        case TransformKind::wht:
          wht_ = std::make_unique<Wht>(n);
          break;
        case TransformKind::identity:
          break;
        default:
          throw std::invalid_argument("fft requires the complex path");
      }
    }
  }

  void forward(Scalar* v) const {
    if constexpr (std::is_same_v<Scalar, Complex>) {
      if (!fft_) return;
      fft_->forward(v);
      for (Index i = 0; i < n_; ++i) v[i] *= scale_;
    } else {
      if (dct_) dct_->forward(v);
      else if (wht_) wht_->forward(v);
    }
  }

  void adjoint(Scalar* v) const {
    if constexpr (std::is_same_v<Scalar, Complex>) {
      if (!fft_) return;
      fft_->backward(v);
      for (Index i = 0; i < n_; ++i) v[i] *= scale_;
    } else {
      if (dct_) dct_->adjoint(v);
      else if (wht_) wht_->adjoint(v);
    }
  }

 private:
  TransformKind kind_;
  Index n_;
  double scale_ = 1.0;
  std::unique_ptr<Fft> fft_;
  std::unique_ptr<Dct> dct_;
  std::unique_ptr<Wht> wht_;
};

template <class Scalar>
void require_mix_scalar(TransformKind kind) {
  if constexpr (std::is_same_v<Scalar, Complex>) {
    if (kind != TransformKind::fft && kind != TransformKind::identity)
      throw std::invalid_argument("real transforms mix on the real path");
  } else {
    if (kind == TransformKind::fft)
      throw std::invalid_argument("fft mixing produces a complex tensor");
  }
}

}  // namespace detail

// Mixed tensor X_hat = X x_1 F_1 D_1 x_2 ... x_N F_N D_N, applied with fast
// transforms along each mode's fibers (O(P sum log I_m)). Instantiate with
// Complex for the FFT kind and double for the real kinds; identity accepts
// either.
template <class Scalar>
DenseTensor<Scalar> mix_tensor(const TensorD& x, const MixingOperator& op) {
  detail::require_mix_scalar<Scalar>(op.kind);
  if (x.dims() != op.dims)
    throw std::invalid_argument("mix_tensor: operator shape mismatch");
  Vec<Scalar> buf = x.values().template cast<Scalar>();
  std::vector<Scalar> fiber_buf;
  for (Index m = 0; m < x.order(); ++m) {
    const Index in = x.dim(m);
    const Index stride = x.stride(m);
    const Index blocks = x.size() / (stride * in);
    const Vecd& d = op.signs[static_cast<std::size_t>(m)];
    detail::ModeTransform<Scalar> t(op.kind, in);
    fiber_buf.resize(static_cast<std::size_t>(in));
    for (Index hi = 0; hi < blocks; ++hi) {
      for (Index lo = 0; lo < stride; ++lo) {
        Scalar* base = buf.data() + hi * stride * in + lo;
        for (Index i = 0; i < in; ++i)
          fiber_buf[static_cast<std::size_t>(i)] = base[i * stride] * d[i];
        t.forward(fiber_buf.data());
        for (Index i = 0; i < in; ++i)
          base[i * stride] = fiber_buf[static_cast<std::size_t>(i)];
      }
    }
  }
  return DenseTensor<Scalar>(x.dims(), std::move(buf));
}

// Mixed factor F_m D_m A (columnwise).
template <class Scalar>
Mat<Scalar> mix_factor(const Matd& a, const MixingOperator& op, Index mode) {
  detail::require_mix_scalar<Scalar>(op.kind);
  const Index in = op.dims[static_cast<std::size_t>(mode)];
  if (a.rows() != in) throw std::invalid_argument("mix_factor: row mismatch");
  const Vecd& d = op.signs[static_cast<std::size_t>(mode)];
  detail::ModeTransform<Scalar> t(op.kind, in);
  Mat<Scalar> out(in, a.cols());
  Vec<Scalar> col(in);
  for (Index r = 0; r < a.cols(); ++r) {
    for (Index i = 0; i < in; ++i) col[i] = Scalar(a(i, r) * d[i]);
    t.forward(col.data());
    out.col(r) = col;
  }
  return out;
}

namespace detail {

inline double imag_mass(const Matd&) { return 0.0; }
inline double imag_mass(const Matcd& a) { return a.imag().norm(); }

inline Matd real_part(const Matd& a) { return a; }
inline Matd real_part(const Matcd& a) { return a.real(); }

}  // namespace detail

// Undoes mix_factor: D_m F_m^* A_hat (conjugate transpose for FFT, plain
// transpose for the orthogonal kinds). The result of unmixing a mixed real
// factor is real; imaginary residue above 1e-8 of the magnitude trips a
// numerical-consistency error before the real part is taken.
template <class Scalar>
Matd unmix_factor(const Mat<Scalar>& a_hat, const MixingOperator& op,
                  Index mode) {
  const Index in = op.dims[static_cast<std::size_t>(mode)];
  if (a_hat.rows() != in)
    throw std::invalid_argument("unmix_factor: row mismatch");
  const Vecd& d = op.signs[static_cast<std::size_t>(mode)];
  detail::ModeTransform<Scalar> t(op.kind, in);
  Mat<Scalar> out(in, a_hat.cols());
  Vec<Scalar> col(in);
  for (Index r = 0; r < a_hat.cols(); ++r) {
    col = a_hat.col(r);
    t.adjoint(col.data());
    for (Index i = 0; i < in; ++i) col[i] *= d[i];
    out.col(r) = col;
  }
  const double mag = out.norm();
  const double residue = detail::imag_mass(out);
  if (mag > 0 && residue > 1e-8 * mag)
    throw numerical_consistency_error(
        "unmix_factor: imaginary residue exceeds tolerance");
  return detail::real_part(out);
}

// Unmixes sampled right-hand sides: applies F_n^* then D_n along each
// length-I_n row slice of G (S x I_n). For the FFT kind the result is
// complex: the rows still carry the other modes' mixing, and their imaginary
// parts feed the real-constrained solve below.
template <class Scalar>
Mat<Scalar> unmix_sampled_rhs(const Mat<Scalar>& g, const MixingOperator& op,
                              Index mode) {
  detail::require_mix_scalar<Scalar>(op.kind);
  const Index in = op.dims[static_cast<std::size_t>(mode)];
  if (g.cols() != in)
    throw std::invalid_argument("unmix_sampled_rhs: row-slice length mismatch");
  const Vecd& d = op.signs[static_cast<std::size_t>(mode)];
  detail::ModeTransform<Scalar> t(op.kind, in);
  Mat<Scalar> out(g.rows(), in);
  Vec<Scalar> row(in);
  for (Index j = 0; j < g.rows(); ++j) {
    row = g.row(j).transpose();
    t.adjoint(row.data());
    for (Index i = 0; i < in; ++i) row[i] *= d[i];
    out.row(j) = row.transpose();
  }
  return out;
}

// Least squares with the solution constrained to be real: stacking the real
// and imaginary rows of A x = B solves min over real x, which matches the
// unconstrained solution of the unmixed system when A, B are a unitarily
// mixed pair. Real inputs degenerate to least_squares.
inline Matd real_least_squares(const Matd& a, const Matd& b) {
  return least_squares(a, b);
}

inline Matd real_least_squares(const Matcd& a, const Matcd& b) {
  if (a.rows() != b.rows())
    throw std::invalid_argument("real_least_squares: row mismatch");
  Matd as(2 * a.rows(), a.cols());
  as << a.real(), a.imag();
  Matd bs(2 * b.rows(), b.cols());
  bs << b.real(), b.imag();
  return least_squares(as, bs);
}

namespace detail {

template <class MixScalar>
SolveResult cprand_mix_impl(const TensorD& x, Index r, Index s,
                            const SolveOptions& opts,
                            const MixingOperator& op) {
  const auto t0 = Clock::now();
  SolveResult res;
  res.model = make_init(x, r, opts);
  auto sample_rng = seeded_engine(opts.rng_seed, kSamplingStream);
  auto fit_rng = seeded_engine(opts.rng_seed, kFitStream);
  auto norm_rng = seeded_engine(opts.rng_seed, kInitStream + 7);
  FitEstimator est;
  if (!opts.bench_mode)
    est = opts.exhaustive_samples
              ? exhaustive_fit_estimator(x, opts.stall_limit)
              : make_fit_estimator(x, opts.fit_sample_count, opts.stall_limit,
                                   fit_rng);

  const DenseTensor<MixScalar> x_hat = mix_tensor<MixScalar>(x, op);
  const Index n_modes = x.order();
  std::vector<Mat<MixScalar>> mixed(static_cast<std::size_t>(n_modes));
  for (Index n = 0; n < n_modes; ++n)
    mixed[static_cast<std::size_t>(n)] =
        mix_factor<MixScalar>(res.model.factors[static_cast<std::size_t>(n)],
                              op, n);
  res.setup_seconds = seconds_since(t0);

  for (int it = 1; it <= opts.max_iters; ++it) {
    for (Index n = 0; n < n_modes; ++n) {
      const SampleSet samples =
          opts.exhaustive_samples ? exhaustive_samples(x.dims(), n)
                                  : draw_samples(x.dims(), n, s, sample_rng);
      const Mat<MixScalar> zs = skr(samples, mixed, n);
      const Mat<MixScalar> gathered = gather_fibers(x_hat, n, samples.idxs);
      const Mat<MixScalar> rhs =
          unmix_sampled_rhs<MixScalar>(Mat<MixScalar>(gathered.transpose()),
                                       op, n);
      res.model.factors[static_cast<std::size_t>(n)] =
          real_least_squares(zs, rhs).transpose();
      normalize_columns(res.model, n, n == 0, norm_rng);
      mixed[static_cast<std::size_t>(n)] = mix_factor<MixScalar>(
          res.model.factors[static_cast<std::size_t>(n)], op, n);
    }
    res.iterations = it;
    if (opts.bench_mode) continue;

    const double fit = opts.exact_fit_trace ? exact_fit(x, res.model)
                                            : estimate_fit(res.model, est);
    const StopDecision d = should_stop(est, fit, it, opts);
    res.trace.push_back({it, seconds_since(t0), fit, !opts.exact_fit_trace,
                         est.best_fit});
    if (d.stop) {
      res.reason = d.reason;
      res.total_seconds = seconds_since(t0);
      return res;
    }
  }
  res.reason = opts.bench_mode ? StopReason::bench_complete
                               : StopReason::max_iterations;
  res.total_seconds = seconds_since(t0);
  return res;
}

}  // namespace detail

// Randomized CP on the mixed tensor: factors stay real, their mixed images
// are kept in step, and each sampled right-hand side is unmixed in the
// update mode before a real-constrained solve. Default transform is the
// unitary FFT.
inline SolveResult cprand_mix(const TensorD& x, Index r, Index s,
                              const SolveOptions& opts,
                              const MixingOperator& op) {
  opts.validate();
  if (r < 1) throw std::invalid_argument("rank must be >= 1");
  if (s < r)
    throw std::invalid_argument("sample count must be at least the rank");
  if (x.norm() == 0.0 && !opts.bench_mode)
    return detail::zero_tensor_result(x, r, opts);
  if (op.kind == TransformKind::fft)
    return detail::cprand_mix_impl<Complex>(x, r, s, opts, op);
  return detail::cprand_mix_impl<double>(x, r, s, opts, op);
}

inline SolveResult cprand_mix(const TensorD& x, Index r, Index s,
                              const SolveOptions& opts) {
  const TransformKind kind = opts.transform.value_or(TransformKind::fft);
  return cprand_mix(x, r, s, opts,
                    make_mixing_operator(x.dims(), kind, opts.rng_seed));
}

// Premixed variant: mixes once with a real orthogonal transform, runs plain
// cprand on the mixed tensor, then unmixes the factors. lambda is unchanged
// (orthogonal mixing preserves column norms). Default transform is DCT-II;
// the FFT is rejected since the mixed tensor would be complex.
inline SolveResult cprand_premix(const TensorD& x, Index r, Index s,
                                 const SolveOptions& opts,
                                 const MixingOperator& op) {
  opts.validate();
  if (op.kind == TransformKind::fft)
    throw std::invalid_argument("premix requires a real orthogonal transform");
  if (x.norm() == 0.0 && !opts.bench_mode)
    return detail::zero_tensor_result(x, r, opts);
  const auto t0 = detail::Clock::now();
  const TensorD x_hat = mix_tensor<double>(x, op);
  const double mix_seconds = detail::seconds_since(t0);
  SolveResult res = cprand(x_hat, r, s, opts);
  for (Index n = 0; n < x.order(); ++n)
    res.model.factors[static_cast<std::size_t>(n)] = unmix_factor(
        Matd(res.model.factors[static_cast<std::size_t>(n)]), op, n);
  res.setup_seconds += mix_seconds;
  res.total_seconds += mix_seconds;
  for (TraceRecord& t : res.trace) t.elapsed_seconds += mix_seconds;
  return res;
}

inline SolveResult cprand_premix(const TensorD& x, Index r, Index s,
                                 const SolveOptions& opts) {
  const TransformKind kind = opts.transform.value_or(TransformKind::dct);
  return cprand_premix(x, r, s, opts,
                       make_mixing_operator(x.dims(), kind, opts.rng_seed));
}

}  // namespace cprand
