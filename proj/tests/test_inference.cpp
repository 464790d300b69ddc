#include <doctest.h>

#include <cmath>

#include "fsc/inference.hpp"
#include "test_helpers.hpp"

using namespace fsc;
using fsc_test::random_panel;

namespace {

// Panel whose treated unit is a fixed mix of controls plus i.i.d. noise, so
// pre/post residuals are exchangeable.
Panel exchangeable_panel(Rng& rng, int N, int T, int T0, int dim, double noise_sd,
                         Eigen::VectorXd* mix_out = nullptr) {
    auto grid = Grid::standard(dim);
    std::vector<std::vector<Eigen::VectorXd>> outcomes(N);
    Eigen::VectorXd mix = fsc_test::random_simplex_point(rng, N - 1);
    for (int i = 1; i < N; ++i) {
        for (int t = 0; t < T; ++t) {
            Eigen::VectorXd v(dim);
            for (int j = 0; j < dim; ++j) v[j] = rng.normal();
            outcomes[i].push_back(std::move(v));
        }
    }
    for (int t = 0; t < T; ++t) {
        Eigen::VectorXd v = Eigen::VectorXd::Zero(dim);
        for (int i = 1; i < N; ++i) v += mix[i - 1] * outcomes[i][t];
        for (int j = 0; j < dim; ++j) v[j] += rng.normal(0.0, noise_sd);
        outcomes[0].push_back(std::move(v));
    }
    if (mix_out) *mix_out = mix;
    return make_panel(grid, std::move(outcomes), T0);
}

} // namespace

TEST_CASE("conformal_band: degenerate residuals give a degenerate band") {
    Rng rng(3);
    Panel panel = random_panel(rng, 4, 5, 4, 2);
    // Treated exactly equals control 1 in pre periods: zero residuals under
    // the unit-weight vector.
    for (int t = 0; t < panel.T0; ++t) panel.outcomes[0][t] = panel.outcomes[1][t];
    WeightVector unit{Eigen::VectorXd::Zero(3), WeightKind::simplex};
    unit.weights[0] = 1.0;
    PredictionBand band = conformal_band(panel, unit, 4, 0.3);
    CHECK(band.quantile_radius.cwiseAbs().maxCoeff() == 0.0);
    CHECK(band.lower == band.center);
    CHECK(band.upper == band.center);
}

TEST_CASE("conformal_band: T0=9 alpha=0.2 uses the exact inversion rank") {
    // With (T0+1)alpha - 1 = 1, {y : p(y) >= alpha} reaches the largest
    // pre-treatment residual.
    Rng rng(5);
    Panel panel = random_panel(rng, 5, 10, 9, 1);
    WeightVector w = fit_scm(panel);
    PredictionBand band = conformal_band(panel, w, 9, 0.2);
    std::vector<double> rho;
    for (int s = 0; s < 9; ++s) {
        Eigen::VectorXd est = Eigen::VectorXd::Zero(1);
        for (int i = 0; i < 4; ++i) est += w.weights[i] * panel.outcomes[i + 1][s];
        rho.push_back(std::abs(panel.outcomes[0][s][0] - est[0]));
    }
    std::sort(rho.begin(), rho.end());
    CHECK(band.quantile_radius[0] == doctest::Approx(rho[8]).epsilon(1e-12));
    // Dense scan: the p-value sublevel set matches the interval.
    const double c = band.center[0];
    const double range = rho[8] * 1.5 + 1e-3;
    for (double y = c - range; y <= c + range; y += range / 500.0) {
        const bool in_band = y >= band.lower[0] - 1e-12 && y <= band.upper[0] + 1e-12;
        const bool accepted = conformal_pvalue(y, 0, panel, w, 9) >= 0.2;
        CHECK(in_band == accepted);
    }
}

TEST_CASE("conformal_band: residual translation grows the radius by c") {
    Rng rng(7);
    Panel panel = random_panel(rng, 4, 6, 5, 1);
    for (int t = 0; t < panel.T0; ++t) panel.outcomes[0][t] = panel.outcomes[1][t];
    WeightVector unit{Eigen::VectorXd::Zero(3), WeightKind::simplex};
    unit.weights[0] = 1.0;
    Panel shifted = panel;
    const double c = 0.85;
    for (int t = 0; t < panel.T0; ++t) {
        shifted.outcomes[0][t] = shifted.outcomes[0][t] + Eigen::VectorXd::Constant(1, c);
    }
    PredictionBand band = conformal_band(shifted, unit, 5, 0.3);
    CHECK(band.quantile_radius[0] == doctest::Approx(c).epsilon(1e-12));
}

TEST_CASE("conformal alpha feasibility checks") {
    Rng rng(9);
    Panel panel = random_panel(rng, 4, 5, 4, 1); // T0 = 4: alpha must exceed 0.2
    WeightVector w = fit_scm(panel);
    CHECK_THROWS_AS(conformal_band(panel, w, 4, 0.19), DomainError);
    CHECK_THROWS_AS(conformal_band(panel, w, 4, 1.0), DomainError);
    CHECK_NOTHROW(conformal_band(panel, w, 4, 0.25));
}

TEST_CASE("conformal_pvalue: center has p=1, far points have the floor p") {
    Rng rng(11);
    Panel panel = random_panel(rng, 5, 7, 6, 2);
    WeightVector w = fit_scm(panel);
    PredictionBand band = conformal_band(panel, w, 6, 0.3);
    CHECK(conformal_pvalue(band.center[0], 0, panel, w, 6) == 1.0);
    CHECK(conformal_pvalue(band.center[1] + 1e9, 1, panel, w, 6) ==
          doctest::Approx(1.0 / 7.0).epsilon(1e-12));
}

TEST_CASE("conformal identity on randomized instances, with band nesting") {
    Rng rng(13);
    for (int rep = 0; rep < 25; ++rep) {
        const int T0 = 3 + static_cast<int>(rng.uniform01() * 9);
        Panel panel = random_panel(rng, 3 + static_cast<int>(rng.uniform01() * 3), T0 + 2,
                                   T0, 2);
        WeightVector w = fit_scm(panel);
        const double lo = 1.0 / (T0 + 1);
        const double alpha = lo + (0.95 - lo) * rng.uniform01();
        PredictionBand band = conformal_band(panel, w, T0, alpha);
        const int x = static_cast<int>(rng.uniform01() * 2);
        const double span = band.quantile_radius[x] * 2 + 0.3;
        for (double y = band.center[x] - span; y <= band.center[x] + span;
             y += span / 250.0) {
            const bool in_band =
                y >= band.lower[x] - 1e-12 && y <= band.upper[x] + 1e-12;
            const bool accepted = conformal_pvalue(y, x, panel, w, T0) >= alpha;
            CHECK(in_band == accepted);
        }
        // Monotone nesting in alpha.
        const double alpha2 = alpha + (0.99 - alpha) * 0.5;
        PredictionBand narrow = conformal_band(panel, w, T0, alpha2);
        for (int j = 0; j < band.center.size(); ++j) {
            CHECK(narrow.quantile_radius[j] <= band.quantile_radius[j] + 1e-12);
        }
    }
}

TEST_CASE("conformal coverage under exchangeable residuals") {
    Rng rng(17);
    const int T0 = 19, T = 20, dim = 2, reps = 800;
    for (double alpha : {0.1, 0.2}) {
        Eigen::VectorXi covered = Eigen::VectorXi::Zero(dim);
        for (int rep = 0; rep < reps; ++rep) {
            Panel panel = exchangeable_panel(rng, 5, T, T0, dim, 0.4);
            // Use the data-generating mix as fixed weights: residuals are the
            // i.i.d. noise, exchangeable across periods.
            WeightVector w = fit_scm(panel);
            PredictionBand band = conformal_band(panel, w, T0, alpha);
            for (int j = 0; j < dim; ++j) {
                const double truth = panel.outcomes[0][T0][j];
                if (truth >= band.lower[j] - 1e-12 && truth <= band.upper[j] + 1e-12) {
                    covered[j] += 1;
                }
            }
        }
        const double stderr_bound = std::sqrt(alpha * (1 - alpha) / reps);
        for (int j = 0; j < dim; ++j) {
            CHECK(covered[j] / double(reps) >= 1.0 - alpha - 3.0 * stderr_bound);
        }
    }
}

TEST_CASE("placebo_test: rank extremes and hand enumeration") {
    Rng rng(19);
    Panel panel = random_panel(rng, 3, 4, 3, 1);
    FitConfig cfg;
    cfg.estimator = EstimatorKind::fsc;
    PlaceboResult res = placebo_test(panel, cfg, 3);
    CHECK(res.residual_norms.size() == 3);
    // Hand enumeration of the two comparisons.
    int count = 0;
    for (int i = 1; i < 3; ++i) {
        if (res.residual_norms[0] <= res.residual_norms[i]) ++count;
    }
    CHECK(res.p_value == doctest::Approx((count + 1.0) / 3.0).epsilon(1e-14));

    // Treated residual strictly largest -> p = 1/N; strictly smallest -> 1.
    Panel extreme = random_panel(rng, 4, 5, 4, 1);
    extreme.outcomes[0][4] = Eigen::VectorXd::Constant(1, 1e6);
    PlaceboResult worst = placebo_test(extreme, cfg, 4);
    CHECK(worst.p_value == doctest::Approx(0.25).epsilon(1e-14));
    Panel copycat = extreme;
    // Make the treated's post outcome equal its own fitted combination.
    WeightVector w = fit_scm(copycat);
    Eigen::VectorXd fitted = Eigen::VectorXd::Zero(1);
    for (int i = 0; i < 3; ++i) fitted += w.weights[i] * copycat.outcomes[i + 1][4];
    copycat.outcomes[0][4] = fitted;
    PlaceboResult best = placebo_test(copycat, cfg, 4);
    CHECK(best.p_value == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("placebo_test: afsc refits run per placebo unit") {
    Rng rng(23);
    Panel panel = random_panel(rng, 5, 6, 5, 2);
    FitConfig cfg;
    cfg.estimator = EstimatorKind::afsc;
    cfg.basis_kind = BasisKind::standard;
    cfg.K = 2;
    cfg.lambda.kind = LambdaPolicy::Kind::fixed;
    cfg.lambda.fixed_value = 0.5;
    PlaceboResult res = placebo_test(panel, cfg, 5);
    CHECK(res.residual_norms.minCoeff() >= 0.0);
    CHECK(res.p_value >= 1.0 / 5.0);
    CHECK(res.p_value <= 1.0);

    // cv policy with frozen lambda across placebo refits also runs.
    FitConfig frozen = cfg;
    frozen.lambda.kind = LambdaPolicy::Kind::cv;
    frozen.lambda.grid = {0.1, 1.0, 10.0};
    frozen.reselect_lambda_in_placebo = false;
    PlaceboResult res2 = placebo_test(panel, frozen, 5);
    CHECK(res2.p_value >= 1.0 / 5.0);
}

TEST_CASE("placebo p-values are super-uniform under an i.i.d. null") {
    Rng rng(29);
    const int N = 5, reps = 300;
    FitConfig cfg;
    cfg.estimator = EstimatorKind::fsc;
    std::vector<int> counts(N, 0); // counts of p <= k/N
    for (int rep = 0; rep < reps; ++rep) {
        Panel panel = random_panel(rng, N, 5, 4, 2);
        PlaceboResult res = placebo_test(panel, cfg, 4);
        for (int k = 1; k <= N; ++k) {
            if (res.p_value <= double(k) / N + 1e-12) counts[k - 1] += 1;
        }
    }
    for (int k = 1; k <= N; ++k) {
        const double level = double(k) / N;
        const double se = std::sqrt(level * (1 - level) / reps);
        CHECK(counts[k - 1] / double(reps) <= level + 3.0 * se + 1e-12);
    }
}
