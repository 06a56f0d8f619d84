// Command-line front end: synthetic tensor generation, CP decomposition with
// the classical and randomized solvers, timing benchmarks, and evaluation.
//
// Exit codes: 0 success, 2 usage or configuration error, 3 numerical
// consistency error (complex residue where a real result was required).

#include <cstdint>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include <cprand/cprand.hpp>

namespace {

using cprand::Index;
using cprand::Method;
using cprand::TransformKind;

const std::map<std::string, Method> kMethodNames{
    {"als", Method::als},
    {"rand", Method::rand},
    {"mix", Method::mix},
    {"premix", Method::premix}};

const std::map<std::string, cprand::InitKind> kInitNames{
    {"random", cprand::InitKind::random}, {"hosvd", cprand::InitKind::hosvd}};

const std::map<std::string, TransformKind> kTransformNames{
    {"fft", TransformKind::fft},
    {"dct", TransformKind::dct},
    {"wht", TransformKind::wht}};

const char* stop_reason_name(cprand::StopReason r) {
  switch (r) {
    case cprand::StopReason::max_iterations: return "max_iterations";
    case cprand::StopReason::fit_stagnation: return "fit_stagnation";
    case cprand::StopReason::fit_threshold: return "fit_threshold";
    case cprand::StopReason::best_fit_stall: return "best_fit_stall";
    case cprand::StopReason::zero_tensor: return "zero_tensor";
    case cprand::StopReason::bench_complete: return "bench_complete";
  }
  return "unknown";
}

cprand::Shape to_shape(const std::vector<std::int64_t>& dims) {
  cprand::Shape s;
  s.reserve(dims.size());
  for (std::int64_t d : dims) s.push_back(static_cast<Index>(d));
  return s;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::invalid_argument("cannot open for write: " + path);
  os << std::setprecision(17);
  return os;
}

struct GenConfig {
  std::vector<std::int64_t> dims;
  std::int64_t rank = 1;
  double collinearity = 0.0;
  double noise = 0.0;
  std::uint64_t seed = 0;
  std::string out;
  std::string truth_out;
};

int run_gen(const GenConfig& cfg) {
  cprand::SynthParams p;
  p.dims = to_shape(cfg.dims);
  p.rank = static_cast<Index>(cfg.rank);
  p.collinearity = cfg.collinearity;
  p.noise = cfg.noise;
  p.seed = cfg.seed;
  const cprand::SynthProblem prob = cprand::gen_problem(p);
  cprand::write_tensor_file(cfg.out, prob.tensor);
  if (!cfg.truth_out.empty())
    cprand::write_model_file(cfg.truth_out, prob.truth);
  std::cout << "wrote " << cfg.out << " (order " << prob.tensor.order()
            << ", " << prob.tensor.size() << " entries, noise ratio "
            << prob.noise_norm_ratio << ")\n";
  return 0;
}

struct SolveConfig {
  std::string in;
  Method method = Method::als;
  std::int64_t rank = 0;
  std::int64_t samples = 0;  // 0 = default_sample_count(rank)
  std::int64_t fit_samples = Index{1} << 14;
  int stall = 10;
  int max_iters = 200;
  double fit_tol = 1e-4;
  std::optional<double> fit_threshold;
  cprand::InitKind init = cprand::InitKind::random;
  std::optional<TransformKind> transform;
  std::uint64_t seed = 0;
  std::string out;
  std::string trace;
};

void warn_flag_mix(const SolveConfig& cfg, bool transform_given) {
  const bool randomized = cfg.method != Method::als;
  if (!randomized && transform_given)
    std::cerr << "warning: --transform has no effect with --method als\n";
  if (cfg.method == Method::rand && transform_given)
    std::cerr << "warning: --transform has no effect with --method rand\n";
  if (randomized && cfg.init == cprand::InitKind::hosvd)
    std::cerr << "warning: hosvd init gives the randomized methods no known "
                 "advantage over random init\n";
}

cprand::SolveOptions make_solve_options(const SolveConfig& cfg) {
  cprand::SolveOptions opts;
  opts.max_iters = cfg.max_iters;
  opts.fit_tolerance = cfg.fit_tol;
  opts.fit_threshold = cfg.fit_threshold;
  opts.rng_seed = cfg.seed;
  opts.init = cfg.init;
  opts.fit_sample_count = static_cast<Index>(cfg.fit_samples);
  opts.stall_limit = cfg.stall;
  opts.transform = cfg.transform;
  return opts;
}

cprand::SolveResult dispatch(const cprand::TensorD& x, const SolveConfig& cfg,
                             const cprand::SolveOptions& opts) {
  const Index r = static_cast<Index>(cfg.rank);
  const Index s = cfg.samples > 0 ? static_cast<Index>(cfg.samples)
                                  : cprand::default_sample_count(r);
  switch (cfg.method) {
    case Method::als: return cprand::cp_als(x, r, opts);
    case Method::rand: return cprand::cprand(x, r, s, opts);
    case Method::mix: return cprand::cprand_mix(x, r, s, opts);
    case Method::premix: return cprand::cprand_premix(x, r, s, opts);
  }
  throw std::invalid_argument("unknown method");
}

int run_decompose(const SolveConfig& cfg, bool transform_given) {
  warn_flag_mix(cfg, transform_given);
  const cprand::TensorD x = cprand::read_tensor_file(cfg.in);
  const cprand::SolveOptions opts = make_solve_options(cfg);
  const cprand::SolveResult res = dispatch(x, cfg, opts);
  cprand::write_model_file(cfg.out, res.model);
  if (!cfg.trace.empty()) {
    std::ofstream os = open_out(cfg.trace);
    cprand::write_trace_csv(os, res.trace);
  }
  const double final_fit = res.trace.empty()
                               ? cprand::exact_fit(x, res.model)
                               : res.trace.back().fit;
  std::cout << "method=" << cprand::method_name(cfg.method)
            << " iters=" << res.iterations << " fit=" << final_fit
            << " time_s=" << res.total_seconds
            << " stop=" << stop_reason_name(res.reason) << '\n';
  return 0;
}

struct BenchIterConfig {
  std::string in;
  std::vector<Method> methods{Method::als, Method::rand};
  std::int64_t rank = 0;
  std::int64_t samples = 0;
  int iters = 100;
  std::optional<TransformKind> transform;
  std::uint64_t seed = 0;
  std::string out;
};

int run_bench_iter(const BenchIterConfig& cfg) {
  const cprand::TensorD x = cprand::read_tensor_file(cfg.in);
  std::ostringstream csv;
  csv << std::setprecision(17);
  csv << "method,iters,setup_s,mean_iter_s\n";
  for (Method m : cfg.methods) {
    SolveConfig sc;
    sc.method = m;
    sc.rank = cfg.rank;
    sc.samples = cfg.samples;
    sc.max_iters = cfg.iters;
    sc.transform = cfg.transform;
    sc.seed = cfg.seed;
    cprand::SolveOptions opts = make_solve_options(sc);
    opts.bench_mode = true;
    const cprand::SolveResult res = dispatch(x, sc, opts);
    const double iter_total = res.total_seconds - res.setup_seconds;
    csv << cprand::method_name(m) << ',' << res.iterations << ','
        << res.setup_seconds << ','
        << iter_total / std::max(res.iterations, 1) << '\n';
  }
  if (cfg.out.empty()) {
    std::cout << csv.str();
  } else {
    open_out(cfg.out) << csv.str();
  }
  return 0;
}

struct BenchFitConfig {
  std::string in;
  std::string model;
  std::int64_t fit_samples = Index{1} << 14;
  int reps = 3;
  std::uint64_t seed = 0;
  std::string out;
};

int run_bench_fitcheck(const BenchFitConfig& cfg) {
  const cprand::TensorD x = cprand::read_tensor_file(cfg.in);
  const cprand::KruskalModel m = cprand::read_model_file(cfg.model);

  cprand::detail::Clock::time_point t0 = cprand::detail::Clock::now();
  double exact = 0.0;
  for (int i = 0; i < cfg.reps; ++i) exact = cprand::exact_fit(x, m);
  const double exact_s = cprand::detail::seconds_since(t0) / cfg.reps;

  auto rng = cprand::seeded_engine(cfg.seed, cprand::kFitStream);
  t0 = cprand::detail::Clock::now();
  const cprand::FitEstimator est = cprand::make_fit_estimator(
      x, static_cast<Index>(cfg.fit_samples), 10, rng);
  const double est_setup_s = cprand::detail::seconds_since(t0);

  t0 = cprand::detail::Clock::now();
  double estimated = 0.0;
  for (int i = 0; i < cfg.reps; ++i) estimated = cprand::estimate_fit(m, est);
  const double est_s = cprand::detail::seconds_since(t0) / cfg.reps;

  const double rel_err =
      std::abs(estimated - exact) / std::max(std::abs(exact), 1e-300);
  std::ostringstream csv;
  csv << std::setprecision(17);
  csv << "exact_s,est_s,est_setup_s,exact_fit,est_fit,rel_err\n"
      << exact_s << ',' << est_s << ',' << est_setup_s << ',' << exact << ','
      << estimated << ',' << rel_err << '\n';
  if (cfg.out.empty()) {
    std::cout << csv.str();
  } else {
    open_out(cfg.out) << csv.str();
  }
  return 0;
}

struct EvalConfig {
  std::string model;
  std::string truth;
  std::string in;
};

int run_eval(const EvalConfig& cfg) {
  const cprand::KruskalModel m = cprand::read_model_file(cfg.model);
  const cprand::TensorD x = cprand::read_tensor_file(cfg.in);
  std::cout << std::setprecision(17);
  std::cout << "fit," << cprand::exact_fit(x, m) << '\n';
  if (!cfg.truth.empty()) {
    const cprand::KruskalModel truth = cprand::read_model_file(cfg.truth);
    std::cout << "score," << cprand::score(m, truth) << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dense CP decomposition toolkit: classical alternating least "
               "squares plus sampled and mixed randomized variants"};
  app.require_subcommand(1);
  std::cout << std::setprecision(17);

  GenConfig gen;
  CLI::App* cmd_gen = app.add_subcommand("gen", "generate a synthetic tensor");
  cmd_gen->add_option("--dims", gen.dims, "mode sizes, e.g. --dims 50 50 50")
      ->required()
      ->check(CLI::PositiveNumber);
  cmd_gen->add_option("--rank", gen.rank, "true component count")
      ->required()
      ->check(CLI::PositiveNumber);
  cmd_gen->add_option("--collinearity", gen.collinearity,
                      "factor column collinearity C in [0,1)");
  cmd_gen->add_option("--noise", gen.noise,
                      "noise-to-signal norm ratio (exact)");
  cmd_gen->add_option("--seed", gen.seed, "RNG seed");
  cmd_gen->add_option("--out", gen.out, "output tensor path (DNT1)")
      ->required();
  cmd_gen->add_option("--truth-out", gen.truth_out,
                      "optional path for the generating model (JSON)");

  SolveConfig dec;
  CLI::App* cmd_dec =
      app.add_subcommand("decompose", "fit a CP model to a tensor");
  cmd_dec->add_option("--in", dec.in, "input tensor path (DNT1)")->required();
  cmd_dec->add_option("--method", dec.method, "als | rand | mix | premix")
      ->transform(CLI::CheckedTransformer(kMethodNames, CLI::ignore_case));
  cmd_dec->add_option("--rank", dec.rank, "decomposition rank R")
      ->required()
      ->check(CLI::PositiveNumber);
  cmd_dec->add_option("--samples", dec.samples,
                      "sampled rows per solve (default 10 R ln R)");
  cmd_dec->add_option("--fit-samples", dec.fit_samples,
                      "sampled entries for fit estimation");
  cmd_dec->add_option("--stall", dec.stall,
                      "stop after this many iterations without a new best fit");
  cmd_dec->add_option("--max-iters", dec.max_iters, "iteration cap");
  cmd_dec->add_option("--fit-tol", dec.fit_tol,
                      "stop when |fit change| falls below this (als)");
  cmd_dec->add_option("--fit-threshold", dec.fit_threshold,
                      "stop once fit reaches this value");
  cmd_dec->add_option("--init", dec.init, "random | hosvd")
      ->transform(CLI::CheckedTransformer(kInitNames, CLI::ignore_case));
  CLI::Option* transform_opt =
      cmd_dec->add_option("--transform", dec.transform, "fft | dct | wht")
          ->transform(
              CLI::CheckedTransformer(kTransformNames, CLI::ignore_case));
  cmd_dec->add_option("--seed", dec.seed, "RNG seed");
  cmd_dec->add_option("--out", dec.out, "output model path (JSON)")
      ->required();
  cmd_dec->add_option("--trace", dec.trace, "optional trace CSV path");

  BenchIterConfig bi;
  CLI::App* cmd_bi = app.add_subcommand(
      "bench-iter", "mean per-iteration time, no convergence checks");
  cmd_bi->add_option("--in", bi.in, "input tensor path (DNT1)")->required();
  cmd_bi->add_option("--method", bi.methods,
                     "methods to time (repeatable; default als rand)")
      ->transform(CLI::CheckedTransformer(kMethodNames, CLI::ignore_case));
  cmd_bi->add_option("--rank", bi.rank, "decomposition rank R")
      ->required()
      ->check(CLI::PositiveNumber);
  cmd_bi->add_option("--samples", bi.samples, "sampled rows per solve");
  cmd_bi->add_option("--iters", bi.iters, "iterations to average over")
      ->check(CLI::PositiveNumber);
  cmd_bi->add_option("--transform", bi.transform, "fft | dct | wht")
      ->transform(CLI::CheckedTransformer(kTransformNames, CLI::ignore_case));
  cmd_bi->add_option("--seed", bi.seed, "RNG seed");
  cmd_bi->add_option("--out", bi.out, "CSV path (default stdout)");

  BenchFitConfig bf;
  CLI::App* cmd_bf = app.add_subcommand(
      "bench-fitcheck", "time exact fit against the sampled estimate");
  cmd_bf->add_option("--in", bf.in, "input tensor path (DNT1)")->required();
  cmd_bf->add_option("--model", bf.model, "model to evaluate (JSON)")
      ->required();
  cmd_bf->add_option("--fit-samples", bf.fit_samples,
                     "sampled entries for fit estimation");
  cmd_bf->add_option("--reps", bf.reps, "timing repetitions")
      ->check(CLI::PositiveNumber);
  cmd_bf->add_option("--seed", bf.seed, "RNG seed");
  cmd_bf->add_option("--out", bf.out, "CSV path (default stdout)");

  EvalConfig ev;
  CLI::App* cmd_ev =
      app.add_subcommand("eval", "report fit (and score against a truth model)");
  cmd_ev->add_option("--model", ev.model, "model path (JSON)")->required();
  cmd_ev->add_option("--truth", ev.truth, "truth model path (JSON)");
  cmd_ev->add_option("--in", ev.in, "tensor path (DNT1)")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (app.got_subcommand(cmd_gen)) return run_gen(gen);
    if (app.got_subcommand(cmd_dec))
      return run_decompose(dec, transform_opt->count() > 0);
    if (app.got_subcommand(cmd_bi)) return run_bench_iter(bi);
    if (app.got_subcommand(cmd_bf)) return run_bench_fitcheck(bf);
    if (app.got_subcommand(cmd_ev)) return run_eval(ev);
  } catch (const cprand::numerical_consistency_error& e) {
    std::cerr << "numerical consistency error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 2;
}
