#include "mdvt/kernels.hpp"

#include <cmath>

namespace mdvt::kernels {

std::vector<double> propagation_coefficients(const InteractionGraph& graph, Norm norm) {
  std::vector<double> coef(graph.num_vertices(), 0.0);
  for (std::size_t v = 0; v < coef.size(); ++v) {
    const auto d = static_cast<double>(graph.degree(v));
    if (d == 0.0) continue;
    coef[v] = norm == Norm::kInvDegree ? 1.0 / d : 1.0 / std::sqrt(d);
  }
  return coef;
}

std::vector<double> row_norms(const Matrix& m) {
  std::vector<double> out(m.rows);
  for (std::size_t r = 0; r < m.rows; ++r) out[r] = std::sqrt(dot(m.row(r), m.row(r)));
  return out;
}

namespace {

inline void propagate_vertex(const InteractionGraph& graph, std::span<const double> coef, const Matrix& in, Matrix& out,
                             std::size_t v) {
  auto dst = out.row(v);
  std::fill(dst.begin(), dst.end(), 0.0);
  for (auto j : graph.neighbors(v)) axpy(coef[j], in.row(j), dst);
  for (auto& x : dst) x *= coef[v];
}

inline void cosine_row(const Matrix& queries, const Matrix& items, std::span<const double> item_norms, Matrix& out,
                       std::size_t r) {
  const auto q = queries.row(r);
  const double qn = std::sqrt(dot(q, q));
  auto dst = out.row(r);
  for (std::size_t i = 0; i < items.rows; ++i) {
    const double denom = qn * item_norms[i];
    dst[i] = denom > 0.0 ? dot(q, items.row(i)) / denom : 0.0;
  }
}

inline void dot_row(const Matrix& queries, const Matrix& items, Matrix& out, std::size_t r) {
  const auto q = queries.row(r);
  auto dst = out.row(r);
  for (std::size_t i = 0; i < items.rows; ++i) dst[i] = dot(q, items.row(i));
}

void prepare(Matrix& out, std::size_t rows, std::size_t cols) {
  if (out.rows != rows || out.cols != cols) out = Matrix(rows, cols);
}

}  // namespace

namespace serial {

void propagate(const InteractionGraph& graph, std::span<const double> coef, const Matrix& in, Matrix& out) {
  prepare(out, in.rows, in.cols);
  for (std::size_t v = 0; v < in.rows; ++v) propagate_vertex(graph, coef, in, out, v);
}

void dot_rows(const Matrix& queries, const Matrix& items, Matrix& out) {
  prepare(out, queries.rows, items.rows);
  for (std::size_t r = 0; r < queries.rows; ++r) dot_row(queries, items, out, r);
}

void cosine_rows(const Matrix& queries, const Matrix& items, std::span<const double> item_norms, Matrix& out) {
  prepare(out, queries.rows, items.rows);
  for (std::size_t r = 0; r < queries.rows; ++r) cosine_row(queries, items, item_norms, out, r);
}

}  // namespace serial

namespace parallel {

void propagate(const InteractionGraph& graph, std::span<const double> coef, const Matrix& in, Matrix& out) {
  prepare(out, in.rows, in.cols);
  const auto n = static_cast<std::int64_t>(in.rows);
#pragma omp parallel for schedule(dynamic, 64)
  for (std::int64_t v = 0; v < n; ++v) propagate_vertex(graph, coef, in, out, static_cast<std::size_t>(v));
}

void dot_rows(const Matrix& queries, const Matrix& items, Matrix& out) {
  prepare(out, queries.rows, items.rows);
  const auto n = static_cast<std::int64_t>(queries.rows);
#pragma omp parallel for schedule(static)
  for (std::int64_t r = 0; r < n; ++r) dot_row(queries, items, out, static_cast<std::size_t>(r));
}

void cosine_rows(const Matrix& queries, const Matrix& items, std::span<const double> item_norms, Matrix& out) {
  prepare(out, queries.rows, items.rows);
  const auto n = static_cast<std::int64_t>(queries.rows);
#pragma omp parallel for schedule(static)
  for (std::int64_t r = 0; r < n; ++r) cosine_row(queries, items, item_norms, out, static_cast<std::size_t>(r));
}

}  // namespace parallel

}  // namespace mdvt::kernels
