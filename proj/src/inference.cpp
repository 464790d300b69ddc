#include "fsc/inference.hpp"

#include <algorithm>
#include <cmath>

namespace fsc {

namespace {

void check_alpha(double alpha, int T0) {
    if (!(alpha < 1.0)) {
        throw DomainError("conformal: alpha must be below 1");
    }
    if (!(alpha > 1.0 / (T0 + 1))) {
        throw DomainError("conformal: alpha must exceed 1/(T0+1) = " +
                          std::to_string(1.0 / (T0 + 1)) + " to be feasible");
    }
}

// Weighted combination of control outcomes at one period.
Eigen::VectorXd weighted_outcome(const Panel& panel, const Eigen::VectorXd& g, int t) {
    Eigen::VectorXd v = Eigen::VectorXd::Zero(panel.grid->size());
    for (int i = 0; i + 1 < panel.n_units(); ++i) v += g[i] * panel.outcomes[i + 1][t];
    return v;
}

// Order statistic rank of the pre-treatment residual quantile. Chosen so
// that [center - q, center + q] coincides exactly with the p-value sublevel
// set {y : p(y) >= alpha}.
int conformal_rank(double alpha, int T0) {
    const double g = (T0 + 1) * alpha - 1.0;
    const int gc = static_cast<int>(std::ceil(g - 1e-9));
    return std::clamp(T0 - gc + 1, 1, T0);
}

double resolve_lambda(const Panel& panel, const BasisSystem& basis,
                      const LambdaPolicy& policy) {
    if (policy.kind == LambdaPolicy::Kind::fixed) return policy.fixed_value;
    std::vector<double> grid =
        policy.grid.empty() ? default_lambda_grid(panel, basis) : policy.grid;
    return policy.scale * cv_lambda(panel, basis, grid).best_lambda;
}

} // namespace

WeightVector fit_weights(const Panel& panel, const FitConfig& config) {
    if (config.estimator == EstimatorKind::fsc) return fit_scm(panel);
    BasisSystem basis = build_basis(config.basis_kind, config.K, panel.grid);
    const double lambda = resolve_lambda(panel, basis, config.lambda);
    return fit_ridge_augmented(panel, basis, lambda);
}

PredictionBand conformal_band(const Panel& panel, const WeightVector& weights,
                              int period, double alpha) {
    panel.validate();
    const int T0 = panel.T0;
    check_alpha(alpha, T0);
    if (period < T0 || period >= panel.n_periods()) {
        throw DomainError("conformal_band: period must be post-treatment");
    }
    const int G = panel.grid->size();
    const int rank = conformal_rank(alpha, T0);

    PredictionBand band;
    band.period = period;
    band.alpha = alpha;
    band.center = weighted_outcome(panel, weights.weights, period);
    band.quantile_radius.resize(G);

    // Pre-treatment absolute residuals per grid coordinate.
    Eigen::MatrixXd rho(T0, G);
    for (int s = 0; s < T0; ++s) {
        rho.row(s) =
            (panel.outcomes[0][s] - weighted_outcome(panel, weights.weights, s))
                .cwiseAbs();
    }
    std::vector<double> col(T0);
    for (int x = 0; x < G; ++x) {
        for (int s = 0; s < T0; ++s) col[s] = rho(s, x);
        std::nth_element(col.begin(), col.begin() + (rank - 1), col.end());
        band.quantile_radius[x] = col[rank - 1];
    }
    band.lower = band.center - band.quantile_radius;
    band.upper = band.center + band.quantile_radius;
    return band;
}

double conformal_pvalue(double y0, int coord, const Panel& panel,
                        const WeightVector& weights, int period) {
    panel.validate();
    const int T0 = panel.T0;
    if (period < T0 || period >= panel.n_periods()) {
        throw DomainError("conformal_pvalue: period must be post-treatment");
    }
    if (coord < 0 || coord >= panel.grid->size()) {
        throw DimensionError("conformal_pvalue: grid coordinate out of range");
    }
    const double center = weighted_outcome(panel, weights.weights, period)[coord];
    const double post_resid = std::abs(y0 - center);
    int count = 0;
    for (int s = 0; s < T0; ++s) {
        const double pre =
            std::abs(panel.outcomes[0][s][coord] -
                     weighted_outcome(panel, weights.weights, s)[coord]);
        if (post_resid <= pre) ++count;
    }
    return (count + 1.0) / (T0 + 1.0);
}

PlaceboResult placebo_test(const Panel& panel, const FitConfig& config, int period) {
    panel.validate();
    const int N = panel.n_units();
    if (period < panel.T0 || period >= panel.n_periods()) {
        throw DomainError("placebo_test: period must be post-treatment");
    }

    FitConfig placebo_config = config;
    if (config.estimator == EstimatorKind::afsc &&
        config.lambda.kind == LambdaPolicy::Kind::cv && !config.reselect_lambda_in_placebo) {
        BasisSystem basis = build_basis(config.basis_kind, config.K, panel.grid);
        placebo_config.lambda.kind = LambdaPolicy::Kind::fixed;
        placebo_config.lambda.fixed_value = resolve_lambda(panel, basis, config.lambda);
    }

    PlaceboResult result;
    result.residual_norms.resize(N);
    const Eigen::VectorXd& qw = panel.grid->quad_weights();
    for (int i = 0; i < N; ++i) {
        // Swap unit i into the treated slot; everyone else is a donor.
        Panel swapped = panel;
        if (i != 0) {
            std::swap(swapped.outcomes[0], swapped.outcomes[i]);
            std::swap(swapped.unit_ids[0], swapped.unit_ids[i]);
            if (swapped.covariates) swapped.covariates->row(0).swap(swapped.covariates->row(i));
        }
        WeightVector w;
        try {
            w = fit_weights(swapped, placebo_config);
        } catch (const Error& e) {
            throw SolverError("placebo_test: refit failed for placebo unit " +
                              panel.unit_ids[i] + ": " + e.what());
        }
        Eigen::VectorXd resid =
            swapped.outcomes[0][period] - weighted_outcome(swapped, w.weights, period);
        result.residual_norms[i] = std::sqrt((qw.array() * resid.array().square()).sum());
    }

    int count = 0;
    for (int i = 1; i < N; ++i) {
        if (result.residual_norms[0] <= result.residual_norms[i]) ++count;
    }
    result.p_value = (count + 1.0) / N;
    return result;
}

} // namespace fsc
