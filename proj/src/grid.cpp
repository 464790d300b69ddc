#include "fsc/grid.hpp"

#include <cmath>

namespace fsc {

Grid::Grid(Eigen::VectorXd points, Eigen::VectorXd quad_weights)
    : points_(std::move(points)), weights_(std::move(quad_weights)) {
    if (points_.size() == 0) {
        throw DimensionError("Grid: must contain at least one point");
    }
    if (points_.size() != weights_.size()) {
        throw DimensionError("Grid: points and quad_weights lengths differ");
    }
    for (int j = 0; j + 1 < points_.size(); ++j) {
        if (!(points_[j] < points_[j + 1])) {
            throw DomainError("Grid: points must be strictly increasing (degenerate grid)");
        }
    }
    double wsum = 0.0;
    for (int j = 0; j < weights_.size(); ++j) {
        if (!(weights_[j] >= 0.0) || !std::isfinite(weights_[j])) {
            throw DomainError("Grid: quadrature weights must be finite and nonnegative");
        }
        wsum += weights_[j];
    }
    if (!(wsum > 0.0)) {
        throw DomainError("Grid: quadrature weights must have positive sum");
    }
    unit_weights_ = (weights_.array() == 1.0).all();
}

std::shared_ptr<const Grid> Grid::uniform(int n, double a, double b, QuadRule rule) {
    if (n < 1) throw DimensionError("Grid::uniform: n must be >= 1");
    if (!(a < b)) throw DomainError("Grid::uniform: need a < b");
    Eigen::VectorXd pts(n), w(n);
    if (rule == QuadRule::riemann) {
        // Cell midpoints; keeps quantile grids clear of {0,1} and makes the
        // half-range cosine system exactly orthonormal in the discrete sense.
        const double h = (b - a) / n;
        for (int j = 0; j < n; ++j) pts[j] = a + (j + 0.5) * h;
        w.setConstant(h);
    } else {
        if (n < 2) throw DimensionError("Grid::uniform: trapezoid rule needs n >= 2");
        const double h = (b - a) / (n - 1);
        for (int j = 0; j < n; ++j) pts[j] = a + j * h;
        w.setConstant(h);
        w[0] = h / 2.0;
        w[n - 1] = h / 2.0;
    }
    return std::make_shared<Grid>(std::move(pts), std::move(w));
}

std::shared_ptr<const Grid> Grid::standard(int d) {
    if (d < 1) throw DimensionError("Grid::standard: d must be >= 1");
    Eigen::VectorXd pts(d);
    for (int j = 0; j < d; ++j) pts[j] = j + 1;
    return std::make_shared<Grid>(std::move(pts), Eigen::VectorXd::Ones(d));
}

bool Grid::same_as(const Grid& other) const {
    if (this == &other) return true;
    return points_.size() == other.points_.size() && points_ == other.points_ &&
           weights_ == other.weights_;
}

HilbertElement::HilbertElement(GridPtr g, Eigen::VectorXd v)
    : grid(std::move(g)), values(std::move(v)) {
    if (!grid) throw DimensionError("HilbertElement: null grid");
    if (values.size() != grid->size()) {
        throw DimensionError("HilbertElement: value length does not match grid size");
    }
    if (!values.allFinite()) {
        throw DomainError("HilbertElement: values must be finite");
    }
}

void require_same_grid(const HilbertElement& f, const HilbertElement& g) {
    if (!f.grid || !g.grid) throw DimensionError("HilbertElement: null grid");
    if (f.grid.get() == g.grid.get()) return;
    if (!f.grid->same_as(*g.grid)) {
        throw DimensionError("HilbertElement: operands live on different grids");
    }
}

double inner(const HilbertElement& f, const HilbertElement& g) {
    require_same_grid(f, g);
    return (f.grid->quad_weights().array() * f.values.array() * g.values.array()).sum();
}

double norm(const HilbertElement& f) {
    if (!f.grid) throw DimensionError("HilbertElement: null grid");
    double s = (f.grid->quad_weights().array() * f.values.array().square()).sum();
    return std::sqrt(std::max(s, 0.0));
}

HilbertElement lincomb(const Eigen::VectorXd& coeffs,
                       const std::vector<HilbertElement>& elems) {
    if (static_cast<size_t>(coeffs.size()) != elems.size()) {
        throw DimensionError("lincomb: coefficient count does not match element count");
    }
    if (elems.empty()) throw DimensionError("lincomb: need at least one element");
    for (size_t i = 1; i < elems.size(); ++i) require_same_grid(elems[0], elems[i]);
    Eigen::VectorXd out = Eigen::VectorXd::Zero(elems[0].size());
    for (size_t i = 0; i < elems.size(); ++i) out += coeffs[static_cast<int>(i)] * elems[i].values;
    return HilbertElement(elems[0].grid, std::move(out));
}

} // namespace fsc
