#include "fsc/basis.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace fsc {

namespace {

constexpr double kPi = 3.14159265358979323846;

// Modified Gram-Schmidt under the weighted inner product, run twice for
// numerical orthogonality. Rows of M are orthonormalized in place.
void orthonormalize_rows(Eigen::MatrixXd& M, const Eigen::VectorXd& w) {
    const int K = static_cast<int>(M.rows());
    auto dot = [&](const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
        return (w.array() * a.array() * b.array()).sum();
    };
    for (int k = 0; k < K; ++k) {
        Eigen::VectorXd v = M.row(k).transpose();
        const double initial = std::sqrt(std::max(dot(v, v), 0.0));
        for (int pass = 0; pass < 2; ++pass) {
            for (int j = 0; j < k; ++j) {
                Eigen::VectorXd q = M.row(j).transpose();
                v -= dot(v, q) * q;
            }
        }
        const double nv = std::sqrt(std::max(dot(v, v), 0.0));
        if (!(nv > 1e-12 * std::max(initial, 1.0))) {
            throw NumericError("build_basis: infeasible orthonormalization "
                               "(rank-deficient design at row " + std::to_string(k + 1) + ")");
        }
        M.row(k) = (v / nv).transpose();
    }
}

} // namespace

Eigen::MatrixXd bspline_design(const Eigen::VectorXd& pts, int K, int degree) {
    const int n = static_cast<int>(pts.size());
    const double a = pts[0], b = pts[n - 1];
    const int p = degree;
    // Clamped knot vector with K + p + 1 knots, interior knots uniform.
    const int n_knots = K + p + 1;
    std::vector<double> knots(n_knots);
    const int n_interior = K - p - 1;
    for (int i = 0; i <= p; ++i) knots[i] = a;
    for (int i = 0; i < n_interior; ++i) {
        knots[p + 1 + i] = a + (b - a) * (i + 1) / static_cast<double>(n_interior + 1);
    }
    for (int i = 0; i <= p; ++i) knots[n_knots - 1 - i] = b;

    Eigen::MatrixXd design = Eigen::MatrixXd::Zero(K, n);
    std::vector<double> N0(K + p, 0.0), N1(K + p, 0.0);
    for (int j = 0; j < n; ++j) {
        const double x = pts[j];
        // Degree-0 seed: indicator of the knot span (right-closed at b).
        for (int i = 0; i < K + p; ++i) {
            const bool last = (knots[i] < b && knots[i + 1] >= b);
            N0[i] = (x >= knots[i] && (x < knots[i + 1] || (last && x <= b))) ? 1.0 : 0.0;
        }
        for (int d = 1; d <= p; ++d) {
            for (int i = 0; i + d < K + p; ++i) {
                double left = 0.0, right = 0.0;
                const double den_l = knots[i + d] - knots[i];
                const double den_r = knots[i + d + 1] - knots[i + 1];
                if (den_l > 0.0) left = (x - knots[i]) / den_l * N0[i];
                if (den_r > 0.0) right = (knots[i + d + 1] - x) / den_r * N0[i + 1];
                N1[i] = left + right;
            }
            std::swap(N0, N1);
        }
        for (int i = 0; i < K; ++i) design(i, j) = N0[i];
    }
    return design;
}

BasisSystem build_basis(BasisKind kind, int K, const GridPtr& grid) {
    if (!grid) throw DimensionError("build_basis: null grid");
    if (K < 1) throw DimensionError("build_basis: K must be >= 1");
    const int n = grid->size();

    BasisSystem basis;
    basis.kind = kind;
    basis.K = K;
    basis.grid = grid;

    switch (kind) {
        case BasisKind::standard: {
            // Coordinate vectors of R^d; zero rows beyond d. Only meaningful
            // for unit-weight grids.
            if (!grid->unit_weights()) {
                throw DomainError("build_basis: standard basis requires a unit-weight grid");
            }
            basis.basis_matrix = Eigen::MatrixXd::Zero(K, n);
            for (int k = 0; k < std::min(K, n); ++k) basis.basis_matrix(k, k) = 1.0;
            return basis;
        }
        case BasisKind::fourier: {
            if (K > n) {
                throw NumericError("build_basis: infeasible orthonormalization (K > grid size)");
            }
            // Half-range cosine system over the grid's span. The span is
            // padded by half a cell so midpoint grids map back to [a, b].
            const double lo = grid->points()[0];
            const double hi = grid->points()[n - 1];
            const double pad = (n > 1) ? 0.5 * (grid->points()[1] - lo) : 0.0;
            const double left = lo - pad, width = (hi + pad) - left;
            Eigen::MatrixXd M(K, n);
            for (int k = 0; k < K; ++k) {
                for (int j = 0; j < n; ++j) {
                    const double u = (grid->points()[j] - left) / width;
                    M(k, j) = (k == 0) ? 1.0 : std::sqrt(2.0) * std::cos(k * kPi * u);
                }
            }
            orthonormalize_rows(M, grid->quad_weights());
            basis.basis_matrix = std::move(M);
            return basis;
        }
        case BasisKind::bspline_cubic: {
            if (K > n) {
                throw NumericError("build_basis: infeasible orthonormalization (K > grid size)");
            }
            // Raw B-splines are not orthonormal; orthonormalize against the
            // weighted inner product. Degree drops below cubic only when K
            // is too small to support it.
            const int degree = std::min(3, K - 1);
            Eigen::MatrixXd M = bspline_design(grid->points(), K, degree);
            orthonormalize_rows(M, grid->quad_weights());
            basis.basis_matrix = std::move(M);
            return basis;
        }
    }
    throw DomainError("build_basis: unknown basis kind");
}

HilbertElement BasisSystem::element(int k) const {
    if (k < 0 || k >= K) throw DimensionError("BasisSystem::element: index out of range");
    return HilbertElement(grid, basis_matrix.row(k).transpose());
}

Eigen::MatrixXd BasisSystem::gram() const {
    return basis_matrix * grid->quad_weights().asDiagonal() * basis_matrix.transpose();
}

Eigen::VectorXd coefficients(const HilbertElement& f, const BasisSystem& basis) {
    if (!f.grid || !basis.grid) throw DimensionError("coefficients: null grid");
    if (f.grid.get() != basis.grid.get() && !f.grid->same_as(*basis.grid)) {
        throw DimensionError("coefficients: element and basis live on different grids");
    }
    return basis.basis_matrix *
           (basis.grid->quad_weights().array() * f.values.array()).matrix();
}

} // namespace fsc
