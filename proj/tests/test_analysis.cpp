#include "doctest.h"

#include "psifield/analysis.hpp"

#include <cmath>
#include <functional>
#include <random>

using namespace psifield;
using G = Grid<double>;
using D = DensityField<double>;

namespace {

Point<double> pt(double x) {
  Point<double> p(1);
  p << x;
  return p;
}

D random_density(const G& g, std::mt19937_64& gen) {
  std::exponential_distribution<double> e;
  D d(g, RealArray<double>::NullaryExpr(g.size(), [&] { return e(gen); }), 0);
  return normalized(d);
}

}  // namespace

TEST_CASE("histogram") {
  const G g = G::line(0, 1, 10, Boundary::reflecting);
  SUBCASE("one cell") {
    const auto h = histogram<double>({pt(0.31), pt(0.33), pt(0.39)}, g);
    CHECK(h.values[3] == doctest::Approx(1 / g.cell_volume()));
    CHECK((h.values.head(3) == 0).all());
    CHECK((h.values.tail(6) == 0).all());
  }
  SUBCASE("outside points are flagged") {
    Index out = 0;
    const auto h = histogram<double>({pt(-0.2), pt(0.5), pt(1.7)}, g, &out);
    CHECK(out == 2);
    CHECK(h.values[0] > 0);
    CHECK(h.values[9] > 0);
    CHECK(integrate(h) == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("uniform samples stay within Poisson noise") {
    const G fine = G::line(0, 1, 100, Boundary::reflecting);
    std::mt19937_64 gen(1);
    std::uniform_real_distribution<double> u;
    std::vector<Point<double>> pts(1000000);
    for (auto& p : pts) p = pt(u(gen));
    const auto h = histogram(pts, fine);
    // count per cell ~ Poisson(10^4): density sd = 1e-2.
    CHECK((h.values - 1).abs().maxCoeff() < 5 * 1e-2);
    CHECK(std::abs(integrate(h) - 1) <= 1e-9);
  }
  CHECK_THROWS_AS(histogram<double>({}, g), std::invalid_argument);
}

TEST_CASE("total variation") {
  SUBCASE("examples") {
    // Two cells of volume 1: (0.5, 0.5) vs (0.3, 0.7).
    const G cells = G::line(0, 16, 16, Boundary::reflecting);
    RealArray<double> a = RealArray<double>::Zero(16), b = RealArray<double>::Zero(16);
    a[0] = 0.5;
    a[1] = 0.5;
    b[0] = 0.3;
    b[1] = 0.7;
    CHECK(total_variation(D(cells, a), D(cells, b)) == doctest::Approx(0.2).epsilon(1e-12));
    CHECK(total_variation(D(cells, a), D(cells, a)) == 0.0);
    RealArray<double> c = RealArray<double>::Zero(16);
    c[5] = 1.0;
    CHECK(total_variation(D(cells, a), D(cells, c)) == doctest::Approx(1.0));
  }
  SUBCASE("grid mismatch") {
    const G a = G::line(0, 1, 10, Boundary::reflecting), b = G::line(0, 1, 12, Boundary::reflecting);
    CHECK_THROWS_AS(total_variation(D::zeros(a), D::zeros(b)), std::invalid_argument);
  }
  SUBCASE("metric on random triples") {
    std::mt19937_64 gen(9);
    const G g({{-1, 1, 12, Boundary::periodic}, {0, 3, 10, Boundary::reflecting}});
    double worst = 0;
    for (int k = 0; k < 200; ++k) {
      const D p = random_density(g, gen), q = random_density(g, gen), r = random_density(g, gen);
      worst = std::max(worst, std::abs(total_variation(p, q) - total_variation(q, p)));
      worst = std::max(worst, total_variation(p, r) - total_variation(p, q) - total_variation(q, r));
    }
    CHECK(worst <= 1e-12);
  }
  SUBCASE("histogram TV shrinks as n^-1/2") {
    const G g = G::line(-4, 4, 40, Boundary::reflecting);
    RealArray<double> w(g.size());
    for (Index i = 0; i < g.size(); ++i) w[i] = std::exp(-std::pow(g.coordinate(0, i), 2) / 2);
    const D target = normalized(D(g, w));
    std::mt19937_64 gen(4);
    std::discrete_distribution<Index> pick(w.begin(), w.end());
    auto tv_at = [&](int n) {
      std::vector<Point<double>> pts(static_cast<std::size_t>(n));
      for (auto& p : pts) p = g.node(pick(gen));
      return total_variation(histogram(pts, g), target);
    };
    const double t3 = tv_at(1000), t4 = tv_at(10000), t5 = tv_at(100000);
    const double ideal = std::sqrt(10.0);
    CHECK(t3 / t4 > ideal / 2);
    CHECK(t3 / t4 < ideal * 2);
    CHECK(t4 / t5 > ideal / 2);
    CHECK(t4 / t5 < ideal * 2);
  }
}

TEST_CASE("kramers prediction") {
  const DoubleGaussianParams<double> p{1, 3};
  CHECK(kramers_prediction(p, 1.0) == doctest::Approx(2701.0).epsilon(0.1 / 2701));
  CHECK(kramers_prediction(p, 1.0) == doctest::Approx(std::exp(9.0) / 3));
  CHECK(kramers_prediction(p, 2.0) == doctest::Approx(kramers_prediction(p, 1.0) / 2));
  CHECK(kramers_prediction(DoubleGaussianParams<double>{1, 1}, 1.0) == doctest::Approx(std::exp(1.0)));
  CHECK_FALSE(kramers_in_validity_regime(DoubleGaussianParams<double>{1, 1}));
  CHECK(kramers_in_validity_regime(p));
  double last = 0;
  for (double b = 1.1; b < 5; b += 0.3) {
    const double t = kramers_prediction(DoubleGaussianParams<double>{1, b}, 1.0);
    CHECK(t > last);
    last = t;
    CHECK(kramers_prediction(DoubleGaussianParams<double>{1, b}, 1.5) < t);
  }
  CHECK_THROWS_AS(kramers_prediction(p, 0.0), std::invalid_argument);
}

TEST_CASE("mfpt estimate") {
  const auto e = mfpt_estimate<double>({{2, false}, {4, false}});
  REQUIRE(e.mean);
  CHECK(*e.mean == 3.0);
  CHECK(e.standard_error == doctest::Approx(1.0));
  CHECK(e.censored_fraction == 0.0);

  const auto c = mfpt_estimate<double>({{10, true}, {10, true}, {10, true}});
  CHECK_FALSE(c.mean);
  CHECK(c.censored_fraction == 1.0);
  CHECK(c.n == 3);

  const auto r = mfpt_estimate<double>({{2, false}, {4, false}, {50, true}, {6, false}}, 8.0);
  CHECK(*r.mean == 4.0);
  CHECK(r.censored_fraction == 0.25);
  CHECK(*r.ratio == 0.5);
  CHECK(r.uncensored == 3);
}

TEST_CASE("independence") {
  auto make_paths = [](std::function<double(double)> y_of, int seed) {
    std::mt19937_64 gen(static_cast<std::uint64_t>(seed));
    std::normal_distribution<double> n01;
    PathRecord<double> p;
    double x = 0;
    for (int i = 0; i < 20000; ++i) {
      x += n01(gen);
      Point<double> q(2);
      q << x, y_of(x);
      p.positions.push_back(q);
    }
    return std::vector<PathRecord<double>>{p};
  };
  SUBCASE("independent white noise") {
    std::mt19937_64 gen(3);
    std::normal_distribution<double> n01;
    PathRecord<double> p;
    Point<double> q = Point<double>::Zero(2);
    for (int i = 0; i < 20000; ++i) {
      q[0] += n01(gen);
      q[1] += n01(gen);
      p.positions.push_back(q);
    }
    const auto r = independence_test<double>({p});
    CHECK(std::abs(r.increments.rho) < 3 / std::sqrt(static_cast<double>(r.increments.samples)));
  }
  SUBCASE("identical series") {
    const auto r = independence_test(make_paths([](double x) { return x; }, 5));
    CHECK(r.increments.rho == doctest::Approx(1.0));
    CHECK(r.occupancy.rho == doctest::Approx(1.0));
  }
  SUBCASE("degenerate") {
    const auto r = independence_test(make_paths([](double) { return 2.0; }, 5));
    CHECK(r.increments.degenerate);
  }
}

TEST_CASE("well occupancy") {
  const std::vector<Interval<double>> wells{{-10, -0.5}, {0.5, 10}};
  SUBCASE("never leaves") {
    const auto r = well_occupancy<double>({-3, -2, -2.5, -1, -0.7}, wells);
    CHECK(r.jumps == 0);
    REQUIRE(r.dwell_records.size() == 1);
    CHECK(r.dwell_records[0] == 5);
  }
  SUBCASE("alternating") {
    std::vector<double> path;
    for (int i = 0; i < 11; ++i) path.push_back(i % 2 ? 3.0 : -3.0);
    CHECK(well_occupancy(path, wells).jumps == 10);
  }
  SUBCASE("excursions into the gap are not jumps") {
    const auto r = well_occupancy<double>({-3, 0, -3, 0.2, -2, 0.1, 3}, wells);
    CHECK(r.jumps == 1);
    CHECK(r.labels[1] == -1);
  }
}

TEST_CASE("relaxation fit") {
  std::vector<double> t, y;
  for (int i = 0; i < 20; ++i) {
    t.push_back(0.5 * i);
    y.push_back(0.8 * std::exp(-t.back() / 2.5));
  }
  const auto f = fit_relaxation_time(t, y);
  CHECK(f.tau == doctest::Approx(2.5));
  CHECK(f.amplitude == doctest::Approx(0.8));
  CHECK(fit_relaxation_time<double>({1.0}, {1.0}).points == 1);
}

TEST_CASE("adiabatic residual") {
  const G g = G::line(-5, 5, 64, Boundary::periodic);
  ComplexArray<double> v(g.size());
  for (Index i = 0; i < g.size(); ++i) v[i] = std::exp(-std::pow(g.coordinate(0, i), 2) / 2);
  const WaveField<double> w(g, v, 0.0);
  const GuidanceParams<double> params;
  const auto eq = equilibrium_density(w, params);
  const auto r = adiabatic_residual<double>({eq}, {w}, params);
  REQUIRE(r.size() == 1);
  CHECK(r[0].tv <= 1e-14);
  CHECK(r[0].max_norm <= 1e-14);
  D shifted = eq;
  shifted.time = 1.0;
  WaveField<double> w1 = w;
  w1.time = 2.0;
  CHECK_THROWS_AS(adiabatic_residual<double>({shifted}, {w, w1}, params), std::invalid_argument);
}
