#pragma once

#include <Eigen/Core>
#include <optional>
#include <vector>

#include "fsc/basis.hpp"
#include "fsc/panel.hpp"

namespace fsc {

enum class WeightKind { simplex, sum_to_one };

// Control-unit weights, either simplex-constrained (balance weights) or
// merely sum-to-one (ridge-augmented weights, which may go negative).
struct WeightVector {
    Eigen::VectorXd weights; // length N-1, control units in panel order
    WeightKind kind = WeightKind::simplex;
};

struct ScmSolveInfo {
    double objective = 0.0;
    double pg_norm = 0.0; // projected-gradient norm at the returned point
    int iterations = 0;
};

// Centered pre-treatment outcomes expanded in an orthonormal basis.
// Row i of r0 concatenates, over the pre-treatment periods, the K
// coefficients of control unit i+1's centered outcome; r1 is the treated
// unit's counterpart.
struct CoefficientBlock {
    Eigen::MatrixXd r0; // (N-1) x (K*T0)
    Eigen::VectorXd r1; // K*T0
    int K = 0;
    int T0 = 0;
    std::vector<Eigen::VectorXd> centered_means; // per-period control means
};

struct CvResult {
    double best_lambda = 0.0;
    std::vector<double> lambdas;   // in input order
    std::vector<double> cv_values; // aligned with lambdas
};

struct Diagnostics {
    double prefit = 0.0;
    double l1_norm = 0.0;
    double l2_norm = 0.0;
    double covariate_imbalance = 0.0;
    Eigen::VectorXd singular_values; // of r0
};

// Euclidean projection onto the probability simplex (exact, O(n log n)).
Eigen::VectorXd project_to_simplex(const Eigen::VectorXd& v);

// Simplex-constrained balance weights: minimize the summed squared
// pre-treatment discrepancies via accelerated projected gradient.
WeightVector fit_scm(const Panel& panel, ScmSolveInfo* info = nullptr);

// Same objective restricted to a subset of pre-treatment periods (0-based);
// used by cross-validation folds.
WeightVector fit_scm_periods(const Panel& panel, const std::vector<int>& periods,
                             ScmSolveInfo* info = nullptr);

// Covariate-extended balance weights with penalty weight w >= 0.
WeightVector fit_scm_cov(const Panel& panel, double w, ScmSolveInfo* info = nullptr);

CoefficientBlock center_and_expand(const Panel& panel, const BasisSystem& basis);

// Closed-form ridge-augmented weights from the coefficient block.
WeightVector fit_ridge_augmented(const CoefficientBlock& block,
                                 const WeightVector& gamma_scm, double lambda);
WeightVector fit_ridge_augmented(const Panel& panel, const BasisSystem& basis,
                                 double lambda);

// Exact minimizer of ||r1 - r0' g||^2 + lambda ||g - gamma_scm||^2 subject to
// sum(g) = 1, solved through the dense KKT system. Test oracle for
// fit_ridge_augmented.
WeightVector penalized_qp_oracle(const CoefficientBlock& block,
                                 const WeightVector& gamma_scm, double lambda);

// Ridge-augmented weights with exact covariate balance.
WeightVector fit_ridge_augmented_cov(const Panel& panel, const BasisSystem& basis,
                                     double lambda);

// Leave-one-out cross-validation over the pre-treatment periods. Ties are
// broken toward the larger lambda.
CvResult cv_lambda(const Panel& panel, const BasisSystem& basis,
                   const std::vector<double>& lambda_grid);

// 20 log-spaced points spanning [1e-4, 1e4] x (largest squared singular
// value of r0).
std::vector<double> default_lambda_grid(const Panel& panel, const BasisSystem& basis);

Diagnostics diagnostics(const Panel& panel, const WeightVector& weights,
                        const BasisSystem& basis);

// sqrt of the summed squared pre-treatment discrepancies for given weights.
double prefit(const Panel& panel, const WeightVector& weights);

} // namespace fsc
