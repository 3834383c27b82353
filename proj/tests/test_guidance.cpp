#include "doctest.h"

#include "psifield/guidance.hpp"
#include "psifield/schrodinger.hpp"

#include <cmath>

using namespace psifield;
using G = Grid<double>;
using W = WaveField<double>;

namespace {

Point<double> pt(double x) {
  Point<double> p(1);
  p << x;
  return p;
}

Index index_of(const G& g, double x) {
  for (Index i = 0; i < g.size(); ++i)
    if (std::abs(g.coordinate(0, i) - x) < 1e-12) return i;
  return -1;
}

}  // namespace

TEST_CASE("diffusion constant") {
  CHECK(diffusion_constant(DiffusionSpec<double>{1, 1}) == 1.0);
  CHECK(diffusion_constant(DiffusionSpec<double>{2, 0.5}) == 8.0);
  CHECK(diffusion_constant(DiffusionSpec<double>{1, 1e-6}) == doctest::Approx(1e6));
  CHECK_THROWS_AS(diffusion_constant(DiffusionSpec<double>{0, 1}), std::invalid_argument);
  CHECK_THROWS_AS(diffusion_constant(DiffusionSpec<double>{1, -1}), std::invalid_argument);
}

TEST_CASE("guidance params validation") {
  GuidanceParams<double> p;
  CHECK_NOTHROW(p.validate());
  p.lambda = 0;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  p.lambda = 1;
  p.epsilon = 0;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  p.epsilon = 1e-12;
  p.drift_cap = -1.0;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
}

TEST_CASE("potential field") {
  const G g = G::line(-4, 4, 8, Boundary::periodic);
  ComplexArray<double> v = ComplexArray<double>::Zero(g.size());
  v[3] = 1.0;
  GuidanceParams<double> p;
  p.relative_epsilon = false;
  const auto pot = potential_field(W(g, v), p);
  CHECK(pot.values[3] == doctest::Approx(-std::log1p(1e-12)).epsilon(1e-15));
  CHECK(std::abs(pot.values[3]) < 1e-11);
  CHECK(pot.values[0] == doctest::Approx(27.631).epsilon(1e-4));

  const G line = G::line(-5, 5, 200, Boundary::periodic);
  const auto gauss = potential_field(make_packet(line, pt(0), 1.0, pt(0)), GuidanceParams<double>{});
  for (Index i = 0; i < line.size(); i += 7) {
    const double x = line.coordinate(0, i);
    if (std::abs(x) <= 3) CHECK(std::abs(gauss.values[i] - x * x) <= 1e-6);
  }
}

TEST_CASE("drift field of a gaussian") {
  const G g = G::line(-8, 8, 64, Boundary::periodic);
  const W psi = make_packet(g, pt(0), 1.0, pt(0));
  GuidanceParams<double> p;
  const auto d = drift_field(psi, p);
  CHECK(d.vectors(index_of(g, 0.5), 0) == doctest::Approx(-1.0).epsilon(2e-3));
  CHECK(std::abs(d.vectors(index_of(g, 0.0), 0)) < 1e-10);

  SUBCASE("linear in lambda") {
    GuidanceParams<double> q = p;
    q.lambda = 2;
    CHECK((drift_field(psi, q).vectors == 2 * d.vectors).all());
  }
  SUBCASE("invariant under rescaling psi") {
    W scaled = psi;
    scaled.values *= std::complex<double>(3.0, -4.0);
    CHECK((drift_field(scaled, p).vectors - d.vectors).abs().maxCoeff() <= 1e-12);
  }
  SUBCASE("cap bounds every vector") {
    GuidanceParams<double> q = p;
    q.drift_cap = 0.75;
    const auto c = drift_field(psi, q);
    CHECK((c.vectors.rowwise().norm() <= 0.75 * (1 + 1e-15)).all());
    CHECK(c.max_magnitude() == doctest::Approx(0.75));
  }
}

TEST_CASE("drift separates for product states") {
  const G g({{-6, 6, 48, Boundary::periodic}, {-5, 5, 40, Boundary::periodic}});
  ComplexArray<double> v(g.size());
  for (Index i = 0; i < g.size(); ++i) {
    const auto x = g.node(i);
    v[i] = double_gaussian_value(DoubleGaussianParams<double>{0.8, 1.5}, x[0]) *
           std::polar(std::exp(-x[1] * x[1] / 2), 0.7 * x[1]);
  }
  // The corners of this grid sit near 1e-12 * max, so use a negligible eps
  // to test the log structure itself.
  GuidanceParams<double> p;
  p.relative_epsilon = false;
  p.epsilon = 1e-250;
  const auto d = drift_field(W(g, v), p);
  const Index nx = g.points(0), ny = g.points(1);
  double worst = 0;
  for (Index ix = 0; ix < nx; ++ix)
    for (Index iy = 1; iy < ny; ++iy)
      worst = std::max(worst, std::abs(d.vectors(ix * ny + iy, 0) - d.vectors(ix * ny, 0)));
  CHECK(worst <= 1e-10);
}

TEST_CASE("drift_at") {
  const G g = G::line(0, 1, 10, Boundary::reflecting);
  GuidanceParams<double> p;
  DriftField<double> a{g, VectorValues<double>::Constant(g.size(), 1, 2.0), 0.0, p};
  DriftField<double> b{g, VectorValues<double>::Constant(g.size(), 1, 4.0), 1.0, p};
  a.vectors(3, 0) = -7.0;
  CHECK(drift_at(a, &b, g.node(3), 0.0)[0] == -7.0);
  CHECK(drift_at(a, &b, pt(0.77), 0.5)[0] == 2.0);
  CHECK(drift_at(a, &b, pt(0.77), 0.5, TimeInterpolation::linear)[0] == doctest::Approx(3.0));
  CHECK(drift_at(a, static_cast<const DriftField<double>*>(nullptr), pt(0.77), 42.0)[0] == 2.0);
  CHECK_THROWS_AS(drift_at(a, &b, pt(0.5), 1.5), std::out_of_range);
  CHECK_THROWS_AS(drift_at(a, &b, pt(0.5), -0.1), std::out_of_range);

  DriftField<double> z{g, VectorValues<double>::Zero(g.size(), 1), 0.0, p};
  DriftField<double> z1 = z;
  z1.time = 1;
  CHECK(drift_at(z, &z1, pt(0.31), 0.4, TimeInterpolation::linear)[0] == 0.0);
}

TEST_CASE("node location") {
  const G g = G::line(-8, 8, 512, Boundary::periodic);
  SUBCASE("standing wave nodes") {
    ComplexArray<double> v(g.size());
    for (Index i = 0; i < g.size(); ++i) {
      const double x = g.coordinate(0, i);
      v[i] = std::exp(-x * x / 18) * std::cos(1.3 * x + 0.2) * std::complex<double>(0.6, 0.8);
    }
    const auto nodes = locate_nodes_1d(W(g, v));
    REQUIRE(nodes.size() >= 6);
    for (const auto& n : nodes) {
      // cos(1.3 x + 0.2) = 0
      const double phase = (1.3 * n.position + 0.2) / std::numbers::pi - 0.5;
      CHECK(std::abs(phase - std::round(phase)) * std::numbers::pi / 1.3 < 1e-3);
    }
  }
  SUBCASE("a shallow dip between unequal packets is not a node") {
    W a = make_packet(g, pt(-1.5), 1.0, pt(2.0));
    a.values += 0.5 * make_packet(g, pt(1.5), 1.0, pt(-2.0)).values;
    CHECK(locate_nodes_1d(a).empty());
  }
  SUBCASE("tails are ignored") {
    CHECK(locate_nodes_1d(make_packet(g, pt(0), 0.5, pt(0))).empty());
  }
  CHECK_THROWS_AS(locate_nodes_1d(W(G({{0, 1, 8}, {0, 1, 8}}), ComplexArray<double>::Ones(64))), std::invalid_argument);
}
