#pragma once

#include <Eigen/Core>
#include <variant>

#include "fsc/grid.hpp"

namespace fsc {

enum class SpaceKind {
    l2,                // square-integrable functions, identity embedding
    wasserstein,       // 1-d distributions via quantile functions on (0,1)
    spd_frobenius,     // symmetric PSD matrices, Frobenius metric
    spd_power,         // PSD matrices, power metric d_F(A^p, B^p)
    spd_log_euclidean, // PD matrices, Frobenius metric of matrix logs
    laplacian,         // graph Laplacians with bounded edge weights
    composition        // strictly positive compositions, Aitchison metric
};

struct FunctionObj {
    Eigen::VectorXd values;
};
struct DistributionObj {
    Eigen::VectorXd quantiles; // nondecreasing, on the adapter's (0,1) grid
};
struct SpdMatrixObj {
    Eigen::MatrixXd mat;
};
struct GraphLaplacianObj {
    Eigen::MatrixXd mat;
};
struct CompositionObj {
    Eigen::VectorXd parts; // strictly positive, sums to 1
};

using MetricObject = std::variant<FunctionObj, DistributionObj, SpdMatrixObj,
                                  GraphLaplacianObj, CompositionObj>;

// Embedding Psi, its inverse, and the projection onto the closed convex
// image, for one of the supported metric spaces. Immutable; operations on
// adapters are pure functions.
class SpaceAdapter {
public:
    static SpaceAdapter l2(GridPtr grid);
    static SpaceAdapter wasserstein(int n_quantile_points);
    static SpaceAdapter spd_frobenius(int m);
    static SpaceAdapter spd_power(int m, double p);
    static SpaceAdapter spd_log_euclidean(int m);
    static SpaceAdapter laplacian(int m, double weight_cap);
    static SpaceAdapter composition(int d);

    SpaceKind kind() const { return kind_; }
    const GridPtr& grid() const { return grid_; }
    int matrix_dim() const { return matrix_dim_; }
    double power() const { return power_; }
    double weight_cap() const { return weight_cap_; }

private:
    SpaceAdapter(SpaceKind k, GridPtr g) : kind_(k), grid_(std::move(g)) {}
    SpaceKind kind_;
    GridPtr grid_;
    int matrix_dim_ = 0;
    double power_ = 1.0;
    double weight_cap_ = 0.0;
};

HilbertElement embed(const SpaceAdapter& adapter, const MetricObject& obj);

// Exact inverse of embed; the element must lie in the image (project first).
MetricObject inverse(const SpaceAdapter& adapter, const HilbertElement& h);

// Nearest point of the image in the Hilbert norm.
HilbertElement project(const SpaceAdapter& adapter, const HilbertElement& h);

double distance(const SpaceAdapter& adapter, const MetricObject& a, const MetricObject& b);

// Psi^{-1}((1-s) Psi(a) + s Psi(b)) for s in [0,1].
MetricObject geodesic(const SpaceAdapter& adapter, const MetricObject& a,
                      const MetricObject& b, double s);

} // namespace fsc
