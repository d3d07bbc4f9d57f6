#include <doctest.h>

#include "mdvt/kernels.hpp"
#include "mdvt/rng.hpp"

using namespace mdvt;

namespace {

InteractionGraph random_graph(std::size_t nu, std::size_t ni, double density, Rng& rng) {
  std::vector<Interaction> edges;
  for (std::uint32_t u = 0; u < nu; ++u)
    for (std::uint32_t i = 0; i < ni; ++i)
      if ((u == 0 && i == 0) || rng.open_unit() < density) edges.push_back({u, i});
  return InteractionGraph(nu, ni, edges);
}

Matrix random_matrix(std::size_t r, std::size_t c, Rng& rng) {
  Matrix m(r, c);
  for (auto& x : m.data) x = rng.normal();
  return m;
}

}  // namespace

TEST_CASE("parallel kernels agree bit-for-bit with the serial references") {
  Rng rng(77);
  for (int trial = 0; trial < 5; ++trial) {
    const auto g = random_graph(150 + trial * 40, 90, 0.05, rng);
    const auto x = random_matrix(g.num_vertices(), 8, rng);
    for (auto norm : {kernels::Norm::kInvDegree, kernels::Norm::kSymmetric}) {
      const auto coef = kernels::propagation_coefficients(g, norm);
      Matrix a, b;
      kernels::serial::propagate(g, coef, x, a);
      kernels::parallel::propagate(g, coef, x, b);
      CHECK(a == b);
    }
    const auto q = random_matrix(37, 8, rng);
    const auto items = random_matrix(90, 8, rng);
    Matrix a, b;
    kernels::serial::dot_rows(q, items, a);
    kernels::parallel::dot_rows(q, items, b);
    CHECK(a == b);
    const auto norms = kernels::row_norms(items);
    kernels::serial::cosine_rows(q, items, norms, a);
    kernels::parallel::cosine_rows(q, items, norms, b);
    CHECK(a == b);
  }
}

TEST_CASE("cosine kernel stays within [-1, 1] and maps zero items to 0") {
  Rng rng(3);
  auto items = random_matrix(20, 5, rng);
  for (auto& x : items.row(4)) x = 0.0;
  const auto q = random_matrix(6, 5, rng);
  Matrix out;
  kernels::serial::cosine_rows(q, items, kernels::row_norms(items), out);
  for (double v : out.data) CHECK(std::abs(v) <= 1.0 + 1e-6);
  for (std::size_t r = 0; r < q.rows; ++r) CHECK(out.at(r, 4) == 0.0);
}
