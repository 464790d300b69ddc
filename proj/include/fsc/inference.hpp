#pragma once

#include <Eigen/Core>
#include <vector>

#include "fsc/basis.hpp"
#include "fsc/panel.hpp"
#include "fsc/weights.hpp"

namespace fsc {

// Pointwise conformal prediction band for one post-treatment period:
// [center - q, center + q] per grid coordinate.
struct PredictionBand {
    int period = 0;
    double alpha = 0.0;
    Eigen::VectorXd center;
    Eigen::VectorXd lower;
    Eigen::VectorXd upper;
    Eigen::VectorXd quantile_radius;
};

struct PlaceboResult {
    Eigen::VectorXd residual_norms; // length N, treated unit first
    double p_value = 0.0;           // on the lattice {1/N, ..., 1}
};

enum class EstimatorKind { fsc, afsc };

struct LambdaPolicy {
    enum class Kind { fixed, cv };
    Kind kind = Kind::cv;
    double fixed_value = 1.0;
    std::vector<double> grid; // empty: default 20-point log grid
    double scale = 1.0;       // multiplies the cross-validated choice
};

// Everything needed to reproduce a weight fit from scratch, so placebo
// refits run the same algorithm as the original fit.
struct FitConfig {
    EstimatorKind estimator = EstimatorKind::fsc;
    LambdaPolicy lambda;
    BasisKind basis_kind = BasisKind::bspline_cubic;
    int K = 50;
    // When false, a cv lambda policy is resolved once on the original panel
    // and the resulting value is reused for every placebo refit.
    bool reselect_lambda_in_placebo = true;
};

WeightVector fit_weights(const Panel& panel, const FitConfig& config);

// Conformal band that inverts the sharp-null test at level alpha, using the
// given fixed weights for every null.
PredictionBand conformal_band(const Panel& panel, const WeightVector& weights,
                              int period, double alpha);

// p-value of the sharp null Y_1t^N(x) = y0 at one grid coordinate.
double conformal_pvalue(double y0, int coord, const Panel& panel,
                        const WeightVector& weights, int period);

// Permutation test that refits the estimator with each unit in the treated
// role and ranks the treated unit's post-treatment residual norm.
PlaceboResult placebo_test(const Panel& panel, const FitConfig& config, int period);

} // namespace fsc
