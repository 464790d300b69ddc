#include <doctest.h>

#include <cmath>

#include "fsc/basis.hpp"
#include "fsc/grid.hpp"
#include "fsc/rng.hpp"

using namespace fsc;

namespace {
constexpr double kPi = 3.14159265358979323846;

HilbertElement from_function(const GridPtr& grid, double (*f)(double)) {
    Eigen::VectorXd v(grid->size());
    for (int j = 0; j < grid->size(); ++j) v[j] = f(grid->points()[j]);
    return HilbertElement(grid, std::move(v));
}
} // namespace

TEST_CASE("grid construction invariants") {
    CHECK_THROWS_AS(Grid(Eigen::Vector2d(1.0, 1.0), Eigen::Vector2d(1.0, 1.0)), DomainError);
    CHECK_THROWS_AS(Grid(Eigen::Vector2d(2.0, 1.0), Eigen::Vector2d(1.0, 1.0)), DomainError);
    CHECK_THROWS_AS(Grid(Eigen::Vector2d(1.0, 2.0), Eigen::Vector2d(-1.0, 1.0)), DomainError);
    CHECK_THROWS_AS(Grid(Eigen::Vector2d(1.0, 2.0), Eigen::Vector2d(0.0, 0.0)), DomainError);

    auto g = Grid::uniform(100, 0.0, 1.0);
    CHECK(g->size() == 100);
    CHECK(g->quad_weights().sum() == doctest::Approx(1.0).epsilon(1e-14));
    // Midpoint nodes stay clear of the endpoints.
    CHECK(g->points()[0] > 0.0);
    CHECK(g->points()[99] < 1.0);

    auto tr = Grid::uniform(5, 0.0, 1.0, QuadRule::trapezoid);
    CHECK(tr->points()[0] == 0.0);
    CHECK(tr->points()[4] == 1.0);
    CHECK(tr->quad_weights().sum() == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("inner product: identity, orthogonality, quadrature accuracy") {
    const int d = 7;
    auto rd = Grid::standard(d);
    HilbertElement ones(rd, Eigen::VectorXd::Ones(d));
    CHECK(inner(ones, ones) == doctest::Approx(d).epsilon(1e-15));

    auto g = Grid::uniform(100, 0.0, 1.0);
    auto c1 = from_function(g, +[](double x) { return std::sqrt(2.0) * std::cos(kPi * x); });
    auto c2 = from_function(g, +[](double) { return 1.0; });
    CHECK(std::abs(inner(c1, c2)) < 1e-10); // orthogonal cosine pair

    // int_0^1 x^2 dx = 1/3 within quadrature error.
    auto lin = from_function(g, +[](double x) { return x; });
    CHECK(inner(lin, lin) == doctest::Approx(1.0 / 3.0).epsilon(1e-3));

    auto other = Grid::uniform(50, 0.0, 1.0);
    CHECK_THROWS_AS(inner(lin, HilbertElement(other, Eigen::VectorXd::Zero(50))),
                    DimensionError);
}

TEST_CASE("norm examples") {
    const int d = 5;
    auto rd = Grid::standard(d);
    CHECK(norm(HilbertElement(rd, Eigen::VectorXd::Zero(d))) == 0.0);
    CHECK(norm(HilbertElement(rd, Eigen::VectorXd::Constant(d, -2.5))) ==
          doctest::Approx(2.5 * std::sqrt(double(d))).epsilon(1e-14));

    auto g = Grid::uniform(100, 0.0, 1.0);
    auto s = from_function(g, +[](double x) { return std::sin(2.0 * kPi * x); });
    CHECK(norm(s) == doctest::Approx(std::sqrt(0.5)).epsilon(1e-3));
}

TEST_CASE("lincomb basics") {
    auto rd = Grid::standard(3);
    HilbertElement a(rd, Eigen::Vector3d(1.0, 2.0, 3.0));
    HilbertElement b(rd, Eigen::Vector3d(0.5, -1.0, 4.0));

    Eigen::VectorXd one(1);
    one << 1.0;
    CHECK(lincomb(one, {a}).values == a.values);

    Eigen::VectorXd half(2);
    half << 0.5, 0.5;
    CHECK(lincomb(half, {a, a}).values.isApprox(a.values, 1e-15));

    Eigen::VectorXd diff(2);
    diff << 1.0, -1.0;
    CHECK(lincomb(diff, {a, b}).values.isApprox((a.values - b.values).eval(), 1e-15));

    CHECK_THROWS_AS(lincomb(one, {a, b}), DimensionError);
}

TEST_CASE("standard basis is the identity on R^d") {
    auto rd = Grid::standard(3);
    BasisSystem basis = build_basis(BasisKind::standard, 3, rd);
    CHECK(basis.basis_matrix.isApprox(Eigen::MatrixXd::Identity(3, 3), 1e-15));
    // Zero rows beyond the dimension.
    BasisSystem wide = build_basis(BasisKind::standard, 5, rd);
    CHECK(wide.basis_matrix.row(4).norm() == 0.0);
}

TEST_CASE("fourier basis orthonormal, first rows match the cosine system") {
    auto g = Grid::uniform(100, 0.0, 1.0);
    BasisSystem basis = build_basis(BasisKind::fourier, 2, g);
    Eigen::MatrixXd gram = basis.gram();
    CHECK((gram - Eigen::MatrixXd::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-10);
    for (int j = 0; j < g->size(); ++j) {
        CHECK(basis.basis_matrix(0, j) == doctest::Approx(1.0).epsilon(1e-10));
        CHECK(basis.basis_matrix(1, j) ==
              doctest::Approx(std::sqrt(2.0) * std::cos(kPi * g->points()[j])).epsilon(1e-9));
    }
}

TEST_CASE("cubic B-spline basis: K=50 on a 100-point grid has identity Gram") {
    auto g = Grid::uniform(100, 0.0, 1.0);
    BasisSystem basis = build_basis(BasisKind::bspline_cubic, 50, g);
    Eigen::MatrixXd gram = basis.gram();
    CHECK((gram - Eigen::MatrixXd::Identity(50, 50)).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("build_basis rejects K above the grid size") {
    auto g = Grid::uniform(10, 0.0, 1.0);
    CHECK_THROWS_AS(build_basis(BasisKind::fourier, 11, g), NumericError);
    CHECK_THROWS_AS(build_basis(BasisKind::bspline_cubic, 11, g), NumericError);
    CHECK_THROWS_AS(build_basis(BasisKind::fourier, 0, g), DimensionError);
}

TEST_CASE("build_basis is deterministic") {
    auto g = Grid::uniform(40, 0.0, 1.0);
    BasisSystem b1 = build_basis(BasisKind::bspline_cubic, 12, g);
    BasisSystem b2 = build_basis(BasisKind::bspline_cubic, 12, g);
    CHECK(b1.basis_matrix == b2.basis_matrix);
}

TEST_CASE("coefficients: unit vectors, zero, reconstruction at complete K") {
    auto g = Grid::uniform(32, 0.0, 1.0);
    BasisSystem basis = build_basis(BasisKind::fourier, 8, g);
    Eigen::VectorXd r = coefficients(basis.element(1), basis);
    for (int k = 0; k < 8; ++k) {
        CHECK(r[k] == doctest::Approx(k == 1 ? 1.0 : 0.0).epsilon(1e-12));
    }
    CHECK(coefficients(HilbertElement(g, Eigen::VectorXd::Zero(32)), basis).norm() == 0.0);

    // Complete basis: reconstruction recovers the element.
    BasisSystem full = build_basis(BasisKind::fourier, 32, g);
    Rng rng(7);
    Eigen::VectorXd v(32);
    for (int j = 0; j < 32; ++j) v[j] = rng.normal();
    HilbertElement f(g, v);
    Eigen::VectorXd rf = coefficients(f, full);
    Eigen::VectorXd recon = full.basis_matrix.transpose() * rf;
    CHECK((recon - v).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("Cauchy-Schwarz and truncated Parseval on random elements") {
    auto g = Grid::uniform(25, 0.0, 1.0);
    BasisSystem partial = build_basis(BasisKind::bspline_cubic, 10, g);
    BasisSystem full = build_basis(BasisKind::fourier, 25, g);
    Rng rng(41);
    for (int rep = 0; rep < 200; ++rep) {
        Eigen::VectorXd a(25), b(25);
        for (int j = 0; j < 25; ++j) {
            a[j] = rng.normal();
            b[j] = rng.normal();
        }
        HilbertElement f(g, a), h(g, b);
        CHECK(std::abs(inner(f, h)) <= norm(f) * norm(h) + 1e-12);
        const double n2 = norm(f) * norm(f);
        CHECK(coefficients(f, partial).squaredNorm() <= n2 + 1e-10);
        CHECK(coefficients(f, full).squaredNorm() == doctest::Approx(n2).epsilon(1e-8));
    }
}
