#include "fsc/spaces.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

namespace fsc {

namespace {

Eigen::VectorXd flatten(const Eigen::MatrixXd& M) {
    return Eigen::Map<const Eigen::VectorXd>(M.data(), M.size());
}

Eigen::MatrixXd unflatten(const Eigen::VectorXd& v, int m) {
    return Eigen::Map<const Eigen::MatrixXd>(v.data(), m, m);
}

double asymmetry(const Eigen::MatrixXd& M) {
    return (M - M.transpose()).cwiseAbs().maxCoeff();
}

void require_symmetric(const Eigen::MatrixXd& M, const char* what) {
    const double scale = std::max(1.0, M.cwiseAbs().maxCoeff());
    if (asymmetry(M) > 1e-9 * scale) {
        throw DomainError(std::string(what) + ": matrix is not symmetric");
    }
}

// Symmetric matrix function through the eigendecomposition.
Eigen::MatrixXd sym_fun(const Eigen::MatrixXd& M,
                        const std::function<double(double)>& f) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (M + M.transpose()));
    Eigen::VectorXd d = es.eigenvalues();
    for (int i = 0; i < d.size(); ++i) d[i] = f(d[i]);
    return es.eigenvectors() * d.asDiagonal() * es.eigenvectors().transpose();
}

constexpr double kLogFloor = 1e-12;

Eigen::MatrixXd spd_power_map(const Eigen::MatrixXd& A, double p, const char* what) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (A + A.transpose()));
    Eigen::VectorXd d = es.eigenvalues();
    const double scale = std::max(1.0, d.cwiseAbs().maxCoeff());
    for (int i = 0; i < d.size(); ++i) {
        if (d[i] < -1e-10 * scale) {
            throw DomainError(std::string(what) + ": matrix is not positive semidefinite");
        }
        d[i] = std::pow(std::max(d[i], 0.0), p);
    }
    return es.eigenvectors() * d.asDiagonal() * es.eigenvectors().transpose();
}

Eigen::MatrixXd spd_log_map(const Eigen::MatrixXd& A, const char* what) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (A + A.transpose()));
    Eigen::VectorXd d = es.eigenvalues();
    for (int i = 0; i < d.size(); ++i) {
        if (d[i] < kLogFloor) {
            throw DomainError(std::string(what) +
                              ": matrix is not strictly positive definite (eigenvalue " +
                              std::to_string(d[i]) + " below floor)");
        }
        d[i] = std::log(d[i]);
    }
    return es.eigenvectors() * d.asDiagonal() * es.eigenvectors().transpose();
}

void check_quantiles_nondecreasing(const Eigen::VectorXd& q, const char* what) {
    const double scale = std::max(1.0, q.cwiseAbs().maxCoeff());
    for (int j = 0; j + 1 < q.size(); ++j) {
        if (q[j + 1] < q[j] - 1e-12 * scale) {
            throw DomainError(std::string(what) + ": quantile values are not nondecreasing");
        }
    }
}

Eigen::VectorXd running_max(Eigen::VectorXd v) {
    for (int j = 1; j < v.size(); ++j) v[j] = std::max(v[j], v[j - 1]);
    return v;
}

void validate_laplacian(const Eigen::MatrixXd& L, double W, const char* what) {
    require_symmetric(L, what);
    const int m = static_cast<int>(L.rows());
    const double scale = std::max(1.0, L.cwiseAbs().maxCoeff());
    for (int i = 0; i < m; ++i) {
        if (std::abs(L.row(i).sum()) > 1e-8 * scale) {
            throw DomainError(std::string(what) + ": row sums are not zero");
        }
        for (int j = 0; j < m; ++j) {
            if (i == j) continue;
            if (L(i, j) > 1e-8 * scale || L(i, j) < -W - 1e-8 * scale) {
                throw DomainError(std::string(what) +
                                  ": off-diagonal entries must lie in [-W, 0]");
            }
        }
    }
}

// Exact feasibility snap for a Laplacian that is already within tolerance:
// symmetrize, clamp off-diagonals, rebuild the diagonal from row sums.
Eigen::MatrixXd snap_laplacian(Eigen::MatrixXd L, double W) {
    const int m = static_cast<int>(L.rows());
    L = 0.5 * (L + L.transpose()).eval();
    for (int i = 0; i < m; ++i) {
        double offsum = 0.0;
        for (int j = 0; j < m; ++j) {
            if (i == j) continue;
            L(i, j) = std::clamp(L(i, j), -W, 0.0);
        }
        for (int j = 0; j < m; ++j)
            if (i != j) offsum += L(i, j);
        L(i, i) = -offsum;
    }
    return 0.5 * (L + L.transpose()).eval();
}

// Dykstra's alternating projection onto
//   {symmetric} ∩ {row sums 0} ∩ {off-diag in [-W, 0]}.
// Iterated well past the documented 1e-9 change so the limit is accurate to
// the tolerances asserted by the projection property tests.
Eigen::MatrixXd dykstra_laplacian(const Eigen::MatrixXd& M0, double W) {
    const int m = static_cast<int>(M0.rows());
    const int max_iter = 10000;
    Eigen::MatrixXd x = M0;
    Eigen::MatrixXd q1 = Eigen::MatrixXd::Zero(m, m);
    Eigen::MatrixXd q2 = q1, q3 = q1;

    auto proj_sym = [](const Eigen::MatrixXd& M) {
        return (0.5 * (M + M.transpose())).eval();
    };
    auto proj_rowsum = [m](const Eigen::MatrixXd& M) {
        Eigen::VectorXd rmean = M.rowwise().mean();
        return (M - rmean * Eigen::RowVectorXd::Ones(m)).eval();
    };
    auto proj_box = [W, m](Eigen::MatrixXd M) {
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < m; ++j)
                if (i != j) M(i, j) = std::clamp(M(i, j), -W, 0.0);
        return M;
    };

    double change = std::numeric_limits<double>::infinity();
    for (int it = 0; it < max_iter; ++it) {
        const Eigen::MatrixXd prev = x;
        Eigen::MatrixXd y = proj_sym(x + q1);
        q1 = x + q1 - y;
        Eigen::MatrixXd z = proj_rowsum(y + q2);
        q2 = y + q2 - z;
        x = proj_box(z + q3);
        q3 = z + q3 - x;
        change = (x - prev).cwiseAbs().maxCoeff();
        if (change <= 1e-13) return snap_laplacian(x, W);
    }
    throw SolverError("project: Dykstra projection did not converge within 10000 "
                      "iterations (last change " + std::to_string(change) + ")");
}

const FunctionObj& as_function(const MetricObject& o, const char* what) {
    if (auto* p = std::get_if<FunctionObj>(&o)) return *p;
    throw DomainError(std::string(what) + ": expected a Function object");
}
const DistributionObj& as_distribution(const MetricObject& o, const char* what) {
    if (auto* p = std::get_if<DistributionObj>(&o)) return *p;
    throw DomainError(std::string(what) + ": expected a Distribution object");
}
const SpdMatrixObj& as_spd(const MetricObject& o, const char* what) {
    if (auto* p = std::get_if<SpdMatrixObj>(&o)) return *p;
    throw DomainError(std::string(what) + ": expected an SpdMatrix object");
}
const GraphLaplacianObj& as_laplacian(const MetricObject& o, const char* what) {
    if (auto* p = std::get_if<GraphLaplacianObj>(&o)) return *p;
    throw DomainError(std::string(what) + ": expected a GraphLaplacian object");
}
const CompositionObj& as_composition(const MetricObject& o, const char* what) {
    if (auto* p = std::get_if<CompositionObj>(&o)) return *p;
    throw DomainError(std::string(what) + ": expected a Composition object");
}

} // namespace

SpaceAdapter SpaceAdapter::l2(GridPtr grid) {
    if (!grid) throw DimensionError("SpaceAdapter::l2: null grid");
    return SpaceAdapter(SpaceKind::l2, std::move(grid));
}

SpaceAdapter SpaceAdapter::wasserstein(int n) {
    SpaceAdapter a(SpaceKind::wasserstein, Grid::uniform(n, 0.0, 1.0));
    return a;
}

SpaceAdapter SpaceAdapter::spd_frobenius(int m) {
    SpaceAdapter a(SpaceKind::spd_frobenius, Grid::standard(m * m));
    a.matrix_dim_ = m;
    return a;
}

SpaceAdapter SpaceAdapter::spd_power(int m, double p) {
    if (!(p > 0.0)) throw DomainError("SpaceAdapter::spd_power: power must be positive");
    SpaceAdapter a(SpaceKind::spd_power, Grid::standard(m * m));
    a.matrix_dim_ = m;
    a.power_ = p;
    return a;
}

SpaceAdapter SpaceAdapter::spd_log_euclidean(int m) {
    SpaceAdapter a(SpaceKind::spd_log_euclidean, Grid::standard(m * m));
    a.matrix_dim_ = m;
    return a;
}

SpaceAdapter SpaceAdapter::laplacian(int m, double weight_cap) {
    if (!(weight_cap > 0.0)) {
        throw DomainError("SpaceAdapter::laplacian: weight cap W must be positive");
    }
    SpaceAdapter a(SpaceKind::laplacian, Grid::standard(m * m));
    a.matrix_dim_ = m;
    a.weight_cap_ = weight_cap;
    return a;
}

SpaceAdapter SpaceAdapter::composition(int d) {
    if (d < 2) throw DimensionError("SpaceAdapter::composition: need d >= 2 parts");
    return SpaceAdapter(SpaceKind::composition, Grid::standard(d));
}

HilbertElement embed(const SpaceAdapter& adapter, const MetricObject& obj) {
    switch (adapter.kind()) {
        case SpaceKind::l2: {
            const auto& f = as_function(obj, "embed");
            return HilbertElement(adapter.grid(), f.values);
        }
        case SpaceKind::wasserstein: {
            const auto& d = as_distribution(obj, "embed");
            check_quantiles_nondecreasing(d.quantiles, "embed");
            return HilbertElement(adapter.grid(), running_max(d.quantiles));
        }
        case SpaceKind::spd_frobenius: {
            const auto& s = as_spd(obj, "embed");
            require_symmetric(s.mat, "embed");
            spd_power_map(s.mat, 1.0, "embed"); // PSD validation only
            return HilbertElement(adapter.grid(), flatten(s.mat));
        }
        case SpaceKind::spd_power: {
            const auto& s = as_spd(obj, "embed");
            require_symmetric(s.mat, "embed");
            return HilbertElement(adapter.grid(),
                                  flatten(spd_power_map(s.mat, adapter.power(), "embed")));
        }
        case SpaceKind::spd_log_euclidean: {
            const auto& s = as_spd(obj, "embed");
            require_symmetric(s.mat, "embed");
            return HilbertElement(adapter.grid(), flatten(spd_log_map(s.mat, "embed")));
        }
        case SpaceKind::laplacian: {
            const auto& l = as_laplacian(obj, "embed");
            validate_laplacian(l.mat, adapter.weight_cap(), "embed");
            return HilbertElement(adapter.grid(),
                                  flatten(snap_laplacian(l.mat, adapter.weight_cap())));
        }
        case SpaceKind::composition: {
            const auto& c = as_composition(obj, "embed");
            if (c.parts.size() != adapter.grid()->size()) {
                throw DimensionError("embed: composition has wrong number of parts");
            }
            if ((c.parts.array() <= 0.0).any()) {
                throw DomainError("embed: composition parts must be strictly positive");
            }
            if (std::abs(c.parts.sum() - 1.0) > 1e-10) {
                throw DomainError("embed: composition parts must sum to 1");
            }
            // Centered log-ratio transform.
            Eigen::VectorXd lg = c.parts.array().log();
            return HilbertElement(adapter.grid(), lg.array() - lg.mean());
        }
    }
    throw DomainError("embed: unknown space kind");
}

MetricObject inverse(const SpaceAdapter& adapter, const HilbertElement& h) {
    if (h.grid.get() != adapter.grid().get() && !h.grid->same_as(*adapter.grid())) {
        throw DimensionError("inverse: element does not live on the adapter's grid");
    }
    const double scale = std::max(1.0, h.values.cwiseAbs().maxCoeff());
    const double tol = 1e-8 * scale;
    switch (adapter.kind()) {
        case SpaceKind::l2:
            return FunctionObj{h.values};
        case SpaceKind::wasserstein: {
            for (int j = 0; j + 1 < h.size(); ++j) {
                if (h.values[j + 1] < h.values[j] - tol) {
                    throw DomainError("inverse: element is not a nondecreasing quantile "
                                      "function; apply project() first");
                }
            }
            return DistributionObj{running_max(h.values)};
        }
        case SpaceKind::spd_frobenius: {
            Eigen::MatrixXd M = unflatten(h.values, adapter.matrix_dim());
            if (asymmetry(M) > tol) {
                throw DomainError("inverse: element is not a symmetric matrix; "
                                  "apply project() first");
            }
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (M + M.transpose()));
            if (es.eigenvalues().minCoeff() < -tol) {
                throw DomainError("inverse: element is not positive semidefinite; "
                                  "apply project() first");
            }
            return SpdMatrixObj{spd_power_map(M, 1.0, "inverse")};
        }
        case SpaceKind::spd_power: {
            Eigen::MatrixXd M = unflatten(h.values, adapter.matrix_dim());
            if (asymmetry(M) > tol) {
                throw DomainError("inverse: element is not a symmetric matrix; "
                                  "apply project() first");
            }
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (M + M.transpose()));
            if (es.eigenvalues().minCoeff() < -tol) {
                throw DomainError("inverse: element is not positive semidefinite; "
                                  "apply project() first");
            }
            return SpdMatrixObj{spd_power_map(M, 1.0 / adapter.power(), "inverse")};
        }
        case SpaceKind::spd_log_euclidean: {
            Eigen::MatrixXd M = unflatten(h.values, adapter.matrix_dim());
            if (asymmetry(M) > tol) {
                throw DomainError("inverse: element is not a symmetric matrix; "
                                  "apply project() first");
            }
            return SpdMatrixObj{sym_fun(M, [](double x) { return std::exp(x); })};
        }
        case SpaceKind::laplacian: {
            Eigen::MatrixXd M = unflatten(h.values, adapter.matrix_dim());
            validate_laplacian(M, adapter.weight_cap(), "inverse (apply project() first)");
            return GraphLaplacianObj{snap_laplacian(M, adapter.weight_cap())};
        }
        case SpaceKind::composition: {
            if (std::abs(h.values.sum()) > tol * h.size()) {
                throw DomainError("inverse: element does not lie on the zero-sum "
                                  "hyperplane; apply project() first");
            }
            Eigen::VectorXd centered = h.values.array() - h.values.mean();
            Eigen::VectorXd e = centered.array().exp();
            return CompositionObj{e / e.sum()};
        }
    }
    throw DomainError("inverse: unknown space kind");
}

HilbertElement project(const SpaceAdapter& adapter, const HilbertElement& h) {
    if (h.grid.get() != adapter.grid().get() && !h.grid->same_as(*adapter.grid())) {
        throw DimensionError("project: element does not live on the adapter's grid");
    }
    switch (adapter.kind()) {
        case SpaceKind::l2:
            return h;
        case SpaceKind::wasserstein: {
            // Increasing rearrangement: exact L2 projection onto the monotone
            // cone for a uniform grid.
            Eigen::VectorXd v = h.values;
            std::sort(v.data(), v.data() + v.size());
            return HilbertElement(adapter.grid(), std::move(v));
        }
        case SpaceKind::spd_frobenius:
        case SpaceKind::spd_power: {
            // Symmetrize, then clip negative eigenvalues: the exact Frobenius
            // projection onto the PSD cone.
            Eigen::MatrixXd M = unflatten(h.values, adapter.matrix_dim());
            Eigen::MatrixXd P = sym_fun(M, [](double x) { return std::max(x, 0.0); });
            return HilbertElement(adapter.grid(), flatten(P));
        }
        case SpaceKind::spd_log_euclidean: {
            // The image is the whole space of symmetric matrices.
            Eigen::MatrixXd M = unflatten(h.values, adapter.matrix_dim());
            return HilbertElement(adapter.grid(), flatten((0.5 * (M + M.transpose())).eval()));
        }
        case SpaceKind::laplacian: {
            Eigen::MatrixXd M = unflatten(h.values, adapter.matrix_dim());
            return HilbertElement(adapter.grid(),
                                  flatten(dykstra_laplacian(M, adapter.weight_cap())));
        }
        case SpaceKind::composition: {
            return HilbertElement(adapter.grid(),
                                  (h.values.array() - h.values.mean()).matrix());
        }
    }
    throw DomainError("project: unknown space kind");
}

double distance(const SpaceAdapter& adapter, const MetricObject& a, const MetricObject& b) {
    HilbertElement ha = embed(adapter, a);
    HilbertElement hb = embed(adapter, b);
    return norm(HilbertElement(ha.grid, ha.values - hb.values));
}

MetricObject geodesic(const SpaceAdapter& adapter, const MetricObject& a,
                      const MetricObject& b, double s) {
    if (!(s >= 0.0 && s <= 1.0)) {
        throw DomainError("geodesic: parameter s must lie in [0, 1]");
    }
    HilbertElement ha = embed(adapter, a);
    HilbertElement hb = embed(adapter, b);
    HilbertElement mix(ha.grid, (1.0 - s) * ha.values + s * hb.values);
    return inverse(adapter, mix);
}

} // namespace fsc
