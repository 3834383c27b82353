#include "doctest.h"

#include "psifield/grid.hpp"
#include "psifield/snapshot_io.hpp"

#include <cmath>
#include <cstring>
#include <filesystem>
#include <numbers>
#include <random>

using namespace psifield;
using G = Grid<double>;

namespace {

Point<double> pt(double x) {
  Point<double> p(1);
  p << x;
  return p;
}

RealArray<double> sample(const G& g, auto f) {
  RealArray<double> v(g.size());
  for (Index i = 0; i < g.size(); ++i) v[i] = f(g.node(i));
  return v;
}

}  // namespace

TEST_CASE("grid construction checks") {
  CHECK_THROWS_AS(G(std::vector<Axis<double>>{}), std::invalid_argument);
  CHECK_THROWS_AS(G::line(0, 1, 4, Boundary::periodic), std::invalid_argument);
  CHECK_THROWS_AS(G::line(1, 1, 16, Boundary::periodic), std::invalid_argument);
  CHECK_THROWS_AS(G({{0, 1, 8}, {0, 1, 8}, {0, 1, 8}, {0, 1, 8}}), std::invalid_argument);
  CHECK_THROWS_AS(G({{0, 1, 1 << 20}, {0, 1, 1 << 20}}), std::length_error);
  const G g({{0, 2, 10, Boundary::reflecting}, {-1, 1, 20, Boundary::periodic}});
  CHECK(g.size() == 200);
  CHECK(g.spacing(0) == doctest::Approx(0.2));
  CHECK(g.spacing(1) == doctest::Approx(0.1));
  CHECK(g.coordinate(0, 0) == doctest::Approx(0.1));
  CHECK(g.coordinate(1, 0) == doctest::Approx(-1.0));
  CHECK(g.ravel(g.unravel(137)) == 137);
}

TEST_CASE("integrate") {
  SUBCASE("constant field is exact") {
    const G g = G::line(0, 1, 100, Boundary::reflecting);
    CHECK(std::abs(integrate(g, RealArray<double>(RealArray<double>::Ones(g.size()))) - 1.0) <= 1e-12);
    const G g3({{-1, 2, 9, Boundary::periodic}, {0, 5, 11, Boundary::reflecting}, {3, 4, 8, Boundary::periodic}});
    CHECK(std::abs(integrate(g3, RealArray<double>(RealArray<double>::Constant(g3.size(), 2.5))) / (2.5 * 15.0) - 1.0) <= 1e-12);
  }
  SUBCASE("gaussian against sqrt(pi)") {
    const G g = G::line(-10, 10, 512, Boundary::periodic);
    const auto v = sample(g, [](const Point<double>& x) { return std::exp(-x[0] * x[0]); });
    CHECK(integrate(g, v) == doctest::Approx(std::sqrt(std::numbers::pi)).epsilon(1e-6));
  }
  SUBCASE("zero field") {
    const G g = G::line(0, 1, 16, Boundary::periodic);
    CHECK(integrate(DensityField<double>::zeros(g)) == 0.0);
  }
  SUBCASE("normalization") {
    const G g = G::line(-3, 3, 64, Boundary::reflecting);
    auto p = normalized(DensityField<double>(g, sample(g, [](const Point<double>& x) { return 1 + x[0] * x[0]; })));
    CHECK(std::abs(integrate(p) - 1.0) <= 1e-12);
    CHECK_THROWS_AS(normalized(DensityField<double>::zeros(g)), std::domain_error);
  }
}

TEST_CASE("gradient_log examples") {
  // dx = 0.25 so that x = 0 and x = 0.5 are nodes.
  const G g = G::line(-8, 8, 64, Boundary::periodic);
  const auto v = sample(g, [](const Point<double>& x) { return std::exp(-x[0] * x[0]); });
  const auto grad = gradient_log(g, v, 1e-12);
  Index i0 = -1, ihalf = -1;
  for (Index i = 0; i < g.size(); ++i) {
    if (std::abs(g.coordinate(0, i)) < 1e-12) i0 = i;
    if (std::abs(g.coordinate(0, i) - 0.5) < 1e-12) ihalf = i;
  }
  REQUIRE(i0 >= 0);
  REQUIRE(ihalf >= 0);
  CHECK(std::abs(grad(i0, 0)) <= 1e-10);
  CHECK(grad(ihalf, 0) == doctest::Approx(-1.0).epsilon(2e-3));

  const auto zero = gradient_log(g, RealArray<double>(RealArray<double>::Zero(g.size())), 1e-12);
  CHECK((zero == 0).all());
  CHECK_THROWS_AS(gradient_log(g, v, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(gradient_log(g, v, -1.0), std::invalid_argument);
}

TEST_CASE("gradient_log converges at second order") {
  auto max_error = [](Index n, Boundary b) {
    double lo = b == Boundary::periodic ? 0.0 : -1.0;
    double hi = b == Boundary::periodic ? 2 * std::numbers::pi : 1.0;
    const G g = G::line(lo, hi, n, b);
    RealArray<double> v(g.size());
    for (Index i = 0; i < g.size(); ++i) {
      const double x = g.coordinate(0, i);
      v[i] = b == Boundary::periodic ? std::exp(std::sin(x)) : std::exp(x * x * x + x);
    }
    const auto grad = gradient_log(g, v, 1e-300);
    double err = 0;
    for (Index i = 0; i < g.size(); ++i) {
      const double x = g.coordinate(0, i);
      const double exact = b == Boundary::periodic ? std::cos(x) : 3 * x * x + 1;
      err = std::max(err, std::abs(grad(i, 0) - exact));
    }
    return err;
  };
  for (Boundary b : {Boundary::periodic, Boundary::reflecting}) {
    const double e1 = max_error(32, b), e2 = max_error(64, b), e3 = max_error(128, b);
    CAPTURE(to_string(b));
    CHECK(e1 / e2 == doctest::Approx(4.0).epsilon(0.15));
    CHECK(e2 / e3 == doctest::Approx(4.0).epsilon(0.15));
  }
}

TEST_CASE("interpolate") {
  SUBCASE("linear field is reproduced") {
    const G g = G::line(0, 1, 100, Boundary::reflecting);
    const auto v = sample(g, [](const Point<double>& x) { return 3 * x[0]; });
    CHECK(std::abs(interpolate(g, v, pt(0.37)) - 1.11) <= 1e-12);
  }
  SUBCASE("multilinear field in 3-D") {
    const G g({{0, 1, 10, Boundary::reflecting}, {-1, 1, 12, Boundary::reflecting}, {0, 2, 8, Boundary::reflecting}});
    auto f = [](const Point<double>& x) { return 1 + 2 * x[0] - x[1] + 0.5 * x[2] + x[0] * x[1] * x[2]; };
    const auto v = sample(g, f);
    Point<double> q(3);
    q << 0.41, -0.33, 1.07;
    CHECK(std::abs(interpolate(g, v, q) - f(q)) <= 1e-12);
  }
  SUBCASE("periodic wrap") {
    const G g = G::line(-2, 3, 40, Boundary::periodic);
    std::mt19937_64 gen(7);
    std::uniform_real_distribution<double> u(-1, 1);
    RealArray<double> v(g.size());
    for (auto& x : v) x = u(gen);
    const double dx = g.spacing(0);
    CHECK(interpolate(g, v, pt(3 + 0.1 * dx)) == doctest::Approx(interpolate(g, v, pt(-2 + 0.1 * dx))).epsilon(1e-14));
  }
  SUBCASE("reflecting fold never extrapolates") {
    const G g = G::line(0, 1, 20, Boundary::reflecting);
    const auto v = sample(g, [](const Point<double>& x) { return x[0] * x[0]; });
    CHECK(interpolate(g, v, pt(1.3)) == doctest::Approx(interpolate(g, v, pt(0.7))));
    CHECK(interpolate(g, v, pt(-0.2)) == doctest::Approx(interpolate(g, v, pt(0.2))));
    CHECK(interpolate(g, v, pt(0.0)) == v[0]);
  }
}

TEST_CASE("interpolation is the identity on nodes, bit for bit") {
  std::mt19937_64 gen(11);
  std::normal_distribution<double> n01;
  for (Boundary b : {Boundary::periodic, Boundary::reflecting}) {
    const G g({{-1.3, 2.9, 13, b}, {0.1, 0.7, 9, b}});
    RealArray<double> v(g.size());
    for (auto& x : v) x = n01(gen);
    VectorValues<double> vv(g.size(), 2);
    vv.col(0) = v;
    vv.col(1) = -v;
    for (Index i = 0; i < g.size(); ++i) {
      const auto x = g.node(i);
      CHECK(interpolate(g, v, x) == v[i]);
      const auto w = interpolate(g, vv, x);
      CHECK(w[0] == v[i]);
      CHECK(w[1] == -v[i]);
    }
  }
}

TEST_CASE("snapshot round trip is bit exact") {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "psifield_snapshot_test";
  fs::create_directories(dir);
  std::mt19937_64 gen(3);
  std::normal_distribution<double> n01;
  const G g({{-1.0 / 3.0, 2.0, 10, Boundary::periodic}, {0, 1e-3, 12, Boundary::reflecting}});

  DensityField<double> d(g, RealArray<double>::NullaryExpr(g.size(), [&] { return std::abs(n01(gen)); }), 0.1 + 0.2);
  write_snapshot(dir / "d", d);
  const auto rd = std::get<DensityField<double>>(read_snapshot(dir / "d"));
  CHECK(rd.grid == g);
  CHECK(rd.time == d.time);
  CHECK(std::memcmp(rd.values.data(), d.values.data(), sizeof(double) * static_cast<std::size_t>(g.size())) == 0);

  WaveField<double> w(g, ComplexArray<double>::NullaryExpr(g.size(), [&] { return std::complex<double>(n01(gen), n01(gen)); }),
                      std::numbers::pi);
  write_snapshot(dir / "w", w);
  const auto rw = std::get<WaveField<double>>(read_snapshot(dir / "w"));
  CHECK(rw.time == w.time);
  CHECK(std::memcmp(rw.values.data(), w.values.data(), sizeof(std::complex<double>) * static_cast<std::size_t>(g.size())) == 0);
  CHECK(fs::file_size(dir / "w.bin") == static_cast<std::uintmax_t>(16 * g.size()));

  DriftSnapshot s{g, VectorValues<double>::NullaryExpr(g.size(), 2, [&] { return n01(gen); }), 1e-300};
  write_snapshot(dir / "v", s);
  const auto rv = std::get<DriftSnapshot>(read_snapshot(dir / "v"));
  CHECK(rv.time == s.time);
  CHECK((rv.values == s.values).all());

  fs::resize_file(dir / "d.bin", 8);
  CHECK_THROWS(read_snapshot(dir / "d"));
  fs::remove_all(dir);
}

TEST_CASE("cell index and fold") {
  const G g = G::line(0, 1, 10, Boundary::reflecting);
  bool out = false;
  CHECK(cell_index(g, pt(0.05), &out) == 0);
  CHECK_FALSE(out);
  CHECK(cell_index(g, pt(1.5), &out) == 9);
  CHECK(out);
  CHECK(g.fold(0, 2.3) == doctest::Approx(0.3));
  CHECK(g.fold(0, -0.25) == doctest::Approx(0.25));
  const G p = G::line(0, 1, 10, Boundary::periodic);
  CHECK(cell_index(p, pt(0.97)) == 0);
  CHECK(cell_index(p, pt(0.94)) == 9);
  CHECK(p.fold(0, -0.25) == doctest::Approx(0.75));
}
