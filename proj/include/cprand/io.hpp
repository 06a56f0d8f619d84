#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "cprand/kruskal.hpp"
#include "cprand/solver.hpp"
#include "cprand/tensor.hpp"

namespace cprand {

// Binary tensor format: magic "DNT1", u64 LE order, order x u64 LE dims,
// then all values as f64 LE in storage order (mode-1 index fastest).

namespace detail {

static_assert(std::endian::native == std::endian::little,
              "tensor file io assumes a little-endian host");

inline void write_u64(std::ostream& os, std::uint64_t v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof v);
}

inline std::uint64_t read_u64(std::istream& is) {
  std::uint64_t v = 0;
  is.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!is) throw std::invalid_argument("tensor file truncated");
  return v;
}

}  // namespace detail

inline void write_tensor(std::ostream& os, const TensorD& x) {
  os.write("DNT1", 4);
  detail::write_u64(os, static_cast<std::uint64_t>(x.order()));
  for (Index d : x.dims()) detail::write_u64(os, static_cast<std::uint64_t>(d));
  os.write(reinterpret_cast<const char*>(x.values().data()),
           static_cast<std::streamsize>(sizeof(double)) * x.size());
  if (!os) throw std::runtime_error("tensor write failed");
}

inline void write_tensor_file(const std::string& path, const TensorD& x) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::invalid_argument("cannot open for write: " + path);
  write_tensor(os, x);
}

inline TensorD read_tensor(std::istream& is) {
  char magic[4] = {};
  is.read(magic, 4);
  if (!is || std::memcmp(magic, "DNT1", 4) != 0)
    throw std::invalid_argument("not a DNT1 tensor file");
  const std::uint64_t order = detail::read_u64(is);
  if (order < 1 || order > 64)
    throw std::invalid_argument("tensor order out of range");
  Shape dims(order);
  std::uint64_t total = 1;
  for (std::uint64_t m = 0; m < order; ++m) {
    const std::uint64_t d = detail::read_u64(is);
    if (d < 1 || d > (std::uint64_t{1} << 32))
      throw std::invalid_argument("tensor dim out of range");
    if (total > (std::uint64_t{1} << 40) / d)
      throw std::invalid_argument("tensor too large");
    total *= d;
    dims[m] = static_cast<Index>(d);
  }
  Vecd values(static_cast<Index>(total));
  is.read(reinterpret_cast<char*>(values.data()),
          static_cast<std::streamsize>(sizeof(double) * total));
  if (!is) throw std::invalid_argument("tensor file truncated");
  return TensorD(std::move(dims), std::move(values));
}

inline TensorD read_tensor_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::invalid_argument("cannot open tensor file: " + path);
  return read_tensor(is);
}

// Model document: {"lambda": [...], "factors": [[[row], ...], ...]} with each
// factor given as its rows (row-major nesting).
inline nlohmann::json model_to_json(const KruskalModel& m) {
  nlohmann::json j;
  j["lambda"] = std::vector<double>(m.lambda.data(),
                                    m.lambda.data() + m.lambda.size());
  nlohmann::json factors = nlohmann::json::array();
  for (const Matd& a : m.factors) {
    nlohmann::json rows = nlohmann::json::array();
    for (Index i = 0; i < a.rows(); ++i) {
      nlohmann::json row = nlohmann::json::array();
      for (Index r = 0; r < a.cols(); ++r) row.push_back(a(i, r));
      rows.push_back(std::move(row));
    }
    factors.push_back(std::move(rows));
  }
  j["factors"] = std::move(factors);
  return j;
}

inline KruskalModel model_from_json(const nlohmann::json& j) {
  if (!j.contains("lambda") || !j.contains("factors"))
    throw std::invalid_argument("model json needs lambda and factors");
  KruskalModel m;
  const auto& lam = j.at("lambda");
  m.lambda.resize(static_cast<Index>(lam.size()));
  for (std::size_t r = 0; r < lam.size(); ++r)
    m.lambda[static_cast<Index>(r)] = lam.at(r).get<double>();
  for (const auto& rows : j.at("factors")) {
    if (rows.empty()) throw std::invalid_argument("model factor has no rows");
    const std::size_t cols = rows.at(0).size();
    if (cols != static_cast<std::size_t>(m.lambda.size()))
      throw std::invalid_argument("model factor rank mismatch");
    Matd a(static_cast<Index>(rows.size()), static_cast<Index>(cols));
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (rows.at(i).size() != cols)
        throw std::invalid_argument("model factor is ragged");
      for (std::size_t r = 0; r < cols; ++r)
        a(static_cast<Index>(i), static_cast<Index>(r)) =
            rows.at(i).at(r).get<double>();
    }
    m.factors.push_back(std::move(a));
  }
  m.validate();
  return m;
}

inline void write_model_file(const std::string& path, const KruskalModel& m) {
  std::ofstream os(path);
  if (!os) throw std::invalid_argument("cannot open for write: " + path);
  os << model_to_json(m).dump(2) << '\n';
}

inline KruskalModel read_model_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::invalid_argument("cannot open model file: " + path);
  nlohmann::json j;
  is >> j;
  return model_from_json(j);
}

inline void write_trace_csv(std::ostream& os,
                            const std::vector<TraceRecord>& trace) {
  os << std::setprecision(17);
  os << "iter,time_s,fit,fit_kind,best_fit\n";
  for (const TraceRecord& t : trace)
    os << t.iteration << ',' << t.elapsed_seconds << ',' << t.fit << ','
       << (t.fit_is_estimate ? "estimated" : "exact") << ','
       << t.best_fit_so_far << '\n';
}

}  // namespace cprand
