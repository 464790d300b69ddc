#pragma once

#include <Eigen/Core>

#include "fsc/grid.hpp"

namespace fsc {

enum class BasisKind { bspline_cubic, fourier, standard };

// K basis elements stored as rows of a K x grid-size matrix, orthonormal
// under the grid's weighted inner product. For kind standard on R^d, row k
// is the k-th coordinate vector (and the zero vector for k > d).
struct BasisSystem {
    BasisKind kind;
    int K = 0;
    GridPtr grid;
    Eigen::MatrixXd basis_matrix; // K x grid size

    HilbertElement element(int k) const; // 0-based row as HilbertElement
    // Gram matrix under the weighted inner product; identity when orthonormal.
    Eigen::MatrixXd gram() const;
};

BasisSystem build_basis(BasisKind kind, int K, const GridPtr& grid);

// Coefficient vector r with r_k = <phi_k, f>.
Eigen::VectorXd coefficients(const HilbertElement& f, const BasisSystem& basis);

// Raw (non-orthonormal) clamped B-spline design matrix, K functions of the
// given degree evaluated at pts in [pts_min, pts_max]. Exposed for tests.
Eigen::MatrixXd bspline_design(const Eigen::VectorXd& pts, int K, int degree);

} // namespace fsc
