#pragma once

#include <Eigen/Core>
#include <memory>
#include <vector>

#include "fsc/errors.hpp"

namespace fsc {

enum class QuadRule { riemann, trapezoid };

// Discretization of the domain carrying the inner product: ordered abscissae
// plus nonnegative quadrature weights. For R^d the points are 1..d with unit
// weights. Immutable after construction.
class Grid {
public:
    Grid(Eigen::VectorXd points, Eigen::VectorXd quad_weights);

    // n midpoints of equal cells over [a, b]; each weight (b-a)/n. With
    // QuadRule::trapezoid, n endpoint-inclusive nodes with trapezoid weights.
    static std::shared_ptr<const Grid> uniform(int n, double a, double b,
                                               QuadRule rule = QuadRule::riemann);
    // Coordinate grid for R^d: points 1..d, unit weights.
    static std::shared_ptr<const Grid> standard(int d);

    int size() const { return static_cast<int>(points_.size()); }
    const Eigen::VectorXd& points() const { return points_; }
    const Eigen::VectorXd& quad_weights() const { return weights_; }
    bool unit_weights() const { return unit_weights_; }

    bool same_as(const Grid& other) const;

private:
    Eigen::VectorXd points_;
    Eigen::VectorXd weights_;
    bool unit_weights_ = false;
};

using GridPtr = std::shared_ptr<const Grid>;

// One discretized element of the latent Hilbert space: values aligned with a
// Grid. Pure value type; all operations are free functions.
struct HilbertElement {
    GridPtr grid;
    Eigen::VectorXd values;

    HilbertElement() = default;
    HilbertElement(GridPtr g, Eigen::VectorXd v);

    int size() const { return static_cast<int>(values.size()); }
};

void require_same_grid(const HilbertElement& f, const HilbertElement& g);

// Weighted inner product sum_j w_j f_j g_j.
double inner(const HilbertElement& f, const HilbertElement& g);

double norm(const HilbertElement& f);

// Pointwise sum_i coeffs[i] * elems[i]; all elements must share one grid.
HilbertElement lincomb(const Eigen::VectorXd& coeffs,
                       const std::vector<HilbertElement>& elems);

} // namespace fsc
