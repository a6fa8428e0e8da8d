#include "helpers.hpp"

#include "kcpc/error.hpp"
#include "kcpc/oracle.hpp"
#include "kcpc/permittivity.hpp"
#include "kcpc/spectral.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace kcpc;

TEST_CASE("circulant symbols") {
  SUBCASE("difference row sums to zero") {
    const std::vector<cd> row{4, 0, 0, -4};
    CHECK(std::abs(circulant_symbols(row)[0]) == 0.0);
  }
  SUBCASE("four-point average") {
    // lambda_m = (1 + w^{3m}) / 2 with w = i.
    const std::vector<cd> row{0.5, 0, 0, 0.5};
    const auto l = circulant_symbols(row);
    CHECK(std::abs(l[0] - cd(1, 0)) <= 1e-15);
    CHECK(std::abs(l[1] - cd(0.5, -0.5)) <= 1e-15);
    CHECK(std::abs(l[2]) <= 1e-15);
    CHECK(std::abs(l[3] - cd(0.5, 0.5)) <= 1e-15);
  }
  SUBCASE("two points") {
    const std::vector<cd> row{cd(2, 1), cd(-0.5, 3)};
    const auto l = circulant_symbols(row);
    CHECK(std::abs(l[0] - (row[0] + row[1])) <= 1e-15);
    CHECK(std::abs(l[1] - (row[0] - row[1])) <= 1e-15);
  }
  SUBCASE("circulant equals F diag F^H") {
    std::mt19937_64 rng(1);
    for (int n : {3, 4, 8}) {
      for (int t = 0; t < 5; ++t) {
        const auto row = test::random_values(static_cast<std::size_t>(n), rng);
        const auto lam = circulant_symbols(row);
        const auto f = oracle::dft_matrix(n);
        const oracle::Dense d = f * test::to_eigen(lam).asDiagonal() * f.adjoint();
        CHECK((d - oracle::circulant(row)).cwiseAbs().maxCoeff() <= 1e-12);
      }
    }
  }
}

TEST_CASE("symbol set") {
  const auto sc = build_lattice(LatticeFamily::SC);
  SUBCASE("zero mode at k = 0") {
    const auto s = build_symbols(GridSpec::make(6), WaveVector(), sc, 1.0);
    CHECK(s.lambda1[0] == cd(0, 0));
    CHECK(s.lambda0[0] == cd(1, 0));
    for (int i = 0; i < 3; ++i) CHECK(s.kappa[i][0] == cd(0, 0));
  }
  SUBCASE("minimum |kappa|^2 at the zone corner") {
    for (int n : {4, 6, 8, 16}) {
      const auto s = build_symbols(GridSpec::make(n), WaveVector(kPi, kPi, kPi), sc, 1.0);
      double m = 1e300;
      for (std::size_t p = 0; p < s.modes(); ++p) m = std::min(m, s.kappa_sq(p));
      CHECK(m == doctest::Approx(3 * kPi * kPi).epsilon(1e-12));
    }
  }
  SUBCASE("per-axis closed form") {
    const int n = 8;
    const double h = 1.0 / n;
    const WaveVector k(0.3, 1.1, -2.0);
    const auto s = build_symbols(GridSpec::make(n), k, sc, 1.0);
    for (int axis = 0; axis < 3; ++axis) {
      const double ki = k[axis];
      const double phi = std::atan2(4 * ki * h, 4 - ki * ki * h * h);
      for (int j = 0; j < n; ++j) {
        std::size_t stride = axis == 0 ? 1 : axis == 1 ? n : n * n;
        const double expected = (2 / (h * h) + ki * ki / 2) * (1 - std::cos(phi + 2 * j * kPi * h));
        CHECK(std::norm(s.kappa[axis][j * stride]) == doctest::Approx(expected).epsilon(1e-12));
      }
    }
  }
  SUBCASE("min nonzero |kappa|^2 equals |k|^2 inside the zone") {
    std::mt19937_64 rng(2);
    for (int n : {4, 6, 8}) {
      for (int t = 0; t < 10; ++t) {
        const WaveVector k = test::random_k(rng, kPi);
        const auto s = build_symbols(GridSpec::make(n), k, sc, 1.0);
        CHECK(s.min_nonzero_kappa_sq() == doctest::Approx(k.norm() * k.norm()).epsilon(1e-10));
      }
    }
  }
  SUBCASE("invalid inputs") {
    CHECK_THROWS_AS(build_symbols(GridSpec::make(4), WaveVector(), sc, 0.0), ConfigError);
    CHECK_THROWS_AS(build_symbols(GridSpec::make(4), WaveVector(NAN, 0, 0), sc, 1.0), ConfigError);
  }
}

TEST_CASE("unitary DFT") {
  std::mt19937_64 rng(3);
  SUBCASE("constants land on the zero mode") {
    const int n = 6;
    FieldVector v(n, Space::Physical, std::vector<cd>(3 * 216, cd(1, 0)));
    const auto f = dft3_forward(v);
    CHECK(f.space() == Space::Fourier);
    for (int c = 0; c < 3; ++c) {
      const auto comp = f.component(c);
      CHECK(std::abs(comp[0] - std::pow(n, 1.5)) <= 1e-12);
      for (std::size_t i = 1; i < comp.size(); ++i) CHECK(std::abs(comp[i]) <= 1e-12);
    }
  }
  SUBCASE("round trip and Parseval") {
    for (int n : {4, 5, 8}) {
      const auto v = test::random_field(n, Space::Physical, rng);
      const auto f = dft3_forward(v);
      CHECK(std::abs(f.norm() - v.norm()) <= 1e-13 * v.norm());
      const auto back = dft3_inverse(f);
      CHECK(test::max_abs_diff(back.values(), v.values()) <= 1e-13);
    }
  }
  SUBCASE("matches the dense DFT") {
    const int n = 4;
    const auto v = test::random_field(n, Space::Fourier, rng);
    const Eigen::VectorXcd expected = test::field_dft(n) * test::to_eigen(v.values());
    const auto got = dft3_inverse(v);
    CHECK((test::to_eigen(got.values()) - expected).cwiseAbs().maxCoeff() <= 1e-13);
  }
  SUBCASE("space tags are enforced") {
    const auto v = test::random_field(4, Space::Fourier, rng);
    CHECK_THROWS_AS(dft3_forward(v), ContractViolation);
  }
}

TEST_CASE("curl and divergence symbols") {
  std::mt19937_64 rng(4);
  const int n = 4;
  const auto grid = GridSpec::make(n);
  for (auto family : {LatticeFamily::SC, LatticeFamily::FCC, LatticeFamily::BCC}) {
    const auto lat = build_lattice(family);
    const WaveVector k(1.0, 2.0, 3.0);
    const auto s = build_symbols(grid, k, lat, 2.5);
    const auto u = test::random_field(n, Space::Fourier, rng);
    const auto v = test::random_field(n, Space::Fourier, rng);

    SUBCASE("adjoint pair") {
      const cd lhs = inner(apply_KA(s, u, false).values(), v.values());
      const cd rhs = inner(u.values(), apply_KA(s, v, true).values());
      CHECK(std::abs(lhs - rhs) <= 1e-12 * u.norm() * v.norm() * s.kappa_sq_max);
    }
    SUBCASE("divergence of curl vanishes") {
      const auto w = apply_KB(s, apply_KA(s, u, false));
      CHECK(w.norm() <= 1e-12 * s.kappa_sq_max * s.kappa_sq_max * u.norm());
      // Fields parallel to conj(kappa) lie in the range of K_B and are annihilated by K_A^H.
      FieldVector par(n, Space::Fourier);
      const std::size_t g = grid.cells();
      for (std::size_t p = 0; p < g; ++p) {
        for (int c = 0; c < 3; ++c) par[c * g + p] = std::conj(s.kappa[c][p]) * u[p];
      }
      CHECK(apply_KA(s, par, true).norm() <= 1e-12 * s.kappa_sq_max * par.norm());
    }
    SUBCASE("K_B is positive semidefinite") {
      CHECK(std::abs(inner(u.values(), apply_KB(s, u).values()).imag()) <= 1e-10 * s.kappa_sq_max * u.norm() * u.norm());
      CHECK(inner(u.values(), apply_KB(s, u).values()).real() >= -1e-12);
    }
    SUBCASE("K_B annihilates fields orthogonal to kappa") {
      FieldVector w = u;
      const std::size_t g = grid.cells();
      for (std::size_t p = 0; p < g; ++p) {
        const double ks = s.kappa_sq(p);
        if (ks == 0.0) continue;
        cd dot = 0;
        for (int c = 0; c < 3; ++c) dot += s.kappa[c][p] * w[c * g + p];
        for (int c = 0; c < 3; ++c) w[c * g + p] -= std::conj(s.kappa[c][p]) * dot / ks;
      }
      CHECK(apply_KB(s, w).norm() <= 1e-12 * s.kappa_sq_max * u.norm());
    }
    SUBCASE("zero vector") {
      FieldVector z(n, Space::Fourier);
      CHECK(apply_KA(s, z, false).norm() == 0.0);
      CHECK(apply_KB(s, z).norm() == 0.0);
    }
    SUBCASE("dense equivalence") {
      const auto dense = oracle::assemble_dense(grid, k, lat, PermittivityOperator::vacuum(n), 2.5);
      const auto uu = test::field_dft(n);
      const Eigen::VectorXcd x = test::to_eigen(u.values());
      const Eigen::VectorXcd ka = uu.adjoint() * (dense.a * (uu * x));
      const Eigen::VectorXcd kah = uu.adjoint() * (dense.a.adjoint() * (uu * x));
      const Eigen::VectorXcd kb = uu.adjoint() * (dense.b.adjoint() * (dense.b * (uu * x)));
      const double scale = s.kappa_sq_max;
      CHECK((test::to_eigen(apply_KA(s, u, false).values()) - ka).cwiseAbs().maxCoeff() <= 1e-12 * scale);
      CHECK((test::to_eigen(apply_KA(s, u, true).values()) - kah).cwiseAbs().maxCoeff() <= 1e-12 * scale);
      CHECK((test::to_eigen(apply_KB(s, u).values()) - kb).cwiseAbs().maxCoeff() <= 1e-12 * scale);
    }
  }
}

TEST_CASE("preconditioner") {
  std::mt19937_64 rng(5);
  const int n = 6;
  const auto grid = GridSpec::make(n);
  const auto sc = build_lattice(LatticeFamily::SC);
  SUBCASE("gamma = 1 divides by |kappa|^2") {
    const auto s = build_symbols(grid, WaveVector(0.4, -0.7, 1.9), sc, 1.0);
    const auto v = test::random_field(n, Space::Fourier, rng);
    const auto x = apply_precond(s, v);
    const std::size_t g = grid.cells();
    double dev = 0;
    for (std::size_t p = 0; p < g; ++p) {
      for (int c = 0; c < 3; ++c) dev = std::max(dev, std::abs(x[c * g + p] - v[c * g + p] / s.kappa_sq(p)));
    }
    CHECK(dev <= 1e-14);
  }
  SUBCASE("round trip") {
    for (auto family : {LatticeFamily::SC, LatticeFamily::FCC, LatticeFamily::BCC}) {
      const WaveVector k = test::random_k(rng, kPi);
      const auto s = build_symbols(grid, k, build_lattice(family), 39.0);
      const auto v = test::random_field(n, Space::Fourier, rng);
      const auto back = apply_precond(s, apply_KP(s, v));
      CHECK(test::max_abs_diff(back.values(), v.values()) <= 1e-11 * v.norm());
    }
  }
  SUBCASE("zero mode passes through at k = 0") {
    const auto s = build_symbols(grid, WaveVector(), sc, 4 * kPi * kPi);
    const auto v = test::random_field(n, Space::Fourier, rng);
    const auto x = apply_precond(s, v);
    const std::size_t g = grid.cells();
    for (int c = 0; c < 3; ++c) CHECK(x[c * g] == v[c * g]);
  }
}
