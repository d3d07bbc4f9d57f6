#pragma once

// Data-parallel inner loops. Every kernel has a serial reference in
// kernels::serial and an OpenMP version in kernels::parallel; the two must
// agree bit-for-bit (each output row is produced by exactly one thread with
// the same summation order).

#include <cstdint>
#include <span>
#include <vector>

#include "mdvt/dataset.hpp"
#include "mdvt/matrix.hpp"

namespace mdvt::kernels {

enum class Norm {
  kInvDegree,      // (1/d_v)(1/d_j)
  kSymmetric,  // 1/sqrt(d_v d_j)
};

/// Per-vertex propagation coefficient; zero for isolated vertices.
std::vector<double> propagation_coefficients(const InteractionGraph& graph, Norm norm);

/// Row-wise L2 norms.
std::vector<double> row_norms(const Matrix& m);

namespace serial {

/// out[v] = coef[v] * sum_{j in N(v)} coef[j] * in[j]. `out` is resized.
void propagate(const InteractionGraph& graph, std::span<const double> coef, const Matrix& in, Matrix& out);

/// out(r, i) = <queries[r], items[i]>.
void dot_rows(const Matrix& queries, const Matrix& items, Matrix& out);

/// out(r, i) = cosine(queries[r], items[i]); zero-norm items give 0.
/// Every query row must have nonzero norm.
void cosine_rows(const Matrix& queries, const Matrix& items, std::span<const double> item_norms, Matrix& out);

}  // namespace serial

namespace parallel {

void propagate(const InteractionGraph& graph, std::span<const double> coef, const Matrix& in, Matrix& out);
void dot_rows(const Matrix& queries, const Matrix& items, Matrix& out);
void cosine_rows(const Matrix& queries, const Matrix& items, std::span<const double> item_norms, Matrix& out);

}  // namespace parallel

}  // namespace mdvt::kernels
