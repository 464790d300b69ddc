#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "fsc/weights.hpp"
#include "test_helpers.hpp"

using namespace fsc;
using fsc_test::random_panel;

namespace {

// Scalar-outcome panel from explicit per-period values; rows are units.
Panel scalar_panel(const Eigen::MatrixXd& values, int T0) {
    auto grid = Grid::standard(1);
    std::vector<std::vector<Eigen::VectorXd>> outcomes(values.rows());
    for (int i = 0; i < values.rows(); ++i) {
        for (int t = 0; t < values.cols(); ++t) {
            outcomes[i].push_back(Eigen::VectorXd::Constant(1, values(i, t)));
        }
    }
    return make_panel(grid, std::move(outcomes), T0);
}

double scm_objective(const Panel& panel, const Eigen::VectorXd& g) {
    double total = 0.0;
    const Eigen::VectorXd& w = panel.grid->quad_weights();
    for (int t = 0; t < panel.T0; ++t) {
        Eigen::VectorXd resid = panel.outcomes[0][t];
        for (int i = 0; i + 1 < panel.n_units(); ++i) {
            resid -= g[i] * panel.outcomes[i + 1][t];
        }
        total += (w.array() * resid.array().square()).sum();
    }
    return total;
}

} // namespace

TEST_CASE("simplex projection") {
    Eigen::Vector3d v(0.2, 0.4, 0.4);
    CHECK(project_to_simplex(v).isApprox(v, 1e-14)); // already feasible
    Eigen::Vector3d big(5.0, 0.0, 0.0);
    CHECK(project_to_simplex(big).isApprox(Eigen::Vector3d(1.0, 0.0, 0.0), 1e-14));
    Rng rng(5);
    for (int rep = 0; rep < 200; ++rep) {
        Eigen::VectorXd x(6);
        for (int i = 0; i < 6; ++i) x[i] = rng.normal(0.0, 2.0);
        Eigen::VectorXd p = project_to_simplex(x);
        CHECK(p.minCoeff() >= 0.0);
        CHECK(p.sum() == doctest::Approx(1.0).epsilon(1e-12));
        // Optimality: no feasible point is closer (check random candidates).
        for (int k = 0; k < 20; ++k) {
            Eigen::VectorXd q = fsc_test::random_simplex_point(rng, 6);
            CHECK((p - x).squaredNorm() <= (q - x).squaredNorm() + 1e-12);
        }
    }
}

TEST_CASE("fit_scm: N=2 is the point simplex") {
    Eigen::MatrixXd values(2, 3);
    values << 1.0, 2.0, 3.0, 0.5, 0.5, 0.5;
    Panel panel = scalar_panel(values, 2);
    WeightVector w = fit_scm(panel);
    CHECK(w.kind == WeightKind::simplex);
    CHECK(w.weights.size() == 1);
    CHECK(w.weights[0] == 1.0);
}

TEST_CASE("fit_scm: perfect-fit vertex gets unit weight") {
    // Treated equals control 3 in all pre periods; controls affinely independent.
    Eigen::MatrixXd values(5, 4);
    values << 1.0, 2.0, 1.5, 0.0, //
        4.0, -1.0, 2.0, 0.0,      //
        0.0, 3.0, 1.0, 0.0,       //
        1.0, 2.0, 1.5, 0.0,       // control 3 == treated
        -2.0, 0.5, 4.0, 0.0;
    Panel panel = scalar_panel(values, 3);
    ScmSolveInfo info;
    WeightVector w = fit_scm(panel, &info);
    CHECK(info.objective <= 1e-14);
    CHECK(w.weights[2] == doctest::Approx(1.0).epsilon(1e-5));
}

TEST_CASE("fit_scm: matches brute-force simplex grid on the 3-control example") {
    Eigen::MatrixXd values(4, 4);
    values << 1.0, 2.0, 3.0, 0.0, //
        0.0, 0.0, 0.0, 0.0,       //
        2.0, 4.0, 6.0, 0.0,       //
        1.0, 1.0, 1.0, 0.0;
    Panel panel = scalar_panel(values, 3);
    WeightVector w = fit_scm(panel);
    Eigen::VectorXd oracle = fsc_test::brute_force_simplex(
        3, 1000, [&](const Eigen::VectorXd& g) { return scm_objective(panel, g); });
    CHECK((w.weights - oracle).cwiseAbs().maxCoeff() < 2e-3);
    CHECK(w.weights[1] == doctest::Approx(0.5).epsilon(1e-6));
    CHECK(w.weights[2] == doctest::Approx(0.0).epsilon(1e-6));
}

TEST_CASE("fit_scm: solution beats vertices and satisfies convexity certificate") {
    Rng rng(101);
    for (int rep = 0; rep < 20; ++rep) {
        Panel panel = random_panel(rng, 5, 4, 3, 2);
        ScmSolveInfo info;
        WeightVector w = fit_scm(panel, &info);
        CHECK(info.pg_norm <= 1e-7);
        CHECK(w.weights.minCoeff() >= -1e-10);
        CHECK(w.weights.sum() == doctest::Approx(1.0).epsilon(1e-8));
        const double fstar = scm_objective(panel, w.weights);
        for (int i = 0; i < 4; ++i) {
            Eigen::VectorXd vertex = Eigen::VectorXd::Zero(4);
            vertex[i] = 1.0;
            CHECK(fstar <= scm_objective(panel, vertex) + 1e-10);
        }
        for (int k = 0; k < 10; ++k) {
            Eigen::VectorXd p = fsc_test::random_simplex_point(rng, 4);
            CHECK(fstar <= scm_objective(panel, 0.5 * (w.weights + p)) + 1e-10);
        }
    }
}

TEST_CASE("center_and_expand: centering and identity-basis behavior") {
    Rng rng(7);
    // All control outcomes equal: r0 must vanish.
    auto grid = Grid::standard(3);
    Eigen::VectorXd common(3);
    common << 1.0, -2.0, 0.5;
    std::vector<std::vector<Eigen::VectorXd>> outcomes(4);
    for (int i = 0; i < 4; ++i) {
        for (int t = 0; t < 3; ++t) {
            outcomes[i].push_back(i == 0 ? Eigen::VectorXd::Random(3).eval() : common);
        }
    }
    Panel equal_controls = make_panel(grid, outcomes, 2);
    BasisSystem basis = build_basis(BasisKind::standard, 3, grid);
    CoefficientBlock block = center_and_expand(equal_controls, basis);
    CHECK(block.r0.cwiseAbs().maxCoeff() == 0.0);

    // Standard basis with K = d: coefficients are the centered raw values.
    Panel panel = random_panel(rng, 5, 4, 2, 3);
    CoefficientBlock b2 = center_and_expand(panel, basis);
    for (int t = 0; t < 2; ++t) {
        Eigen::VectorXd mean = Eigen::VectorXd::Zero(3);
        for (int i = 1; i < 5; ++i) mean += panel.outcomes[i][t];
        mean /= 4.0;
        for (int i = 1; i < 5; ++i) {
            Eigen::VectorXd expect = panel.outcomes[i][t] - mean;
            CHECK((b2.r0.row(i - 1).segment(t * 3, 3).transpose() - expect)
                      .cwiseAbs()
                      .maxCoeff() < 1e-12);
        }
        // Column sums of r0 vanish by centering.
        CHECK(b2.r0.middleCols(t * 3, 3).colwise().sum().cwiseAbs().maxCoeff() < 1e-10);
    }
}

TEST_CASE("fit_ridge_augmented: perfect pre-treatment fit keeps the weights") {
    // Treated is an exact convex combination of controls in every pre period.
    Rng rng(13);
    auto grid = Grid::standard(2);
    std::vector<std::vector<Eigen::VectorXd>> outcomes(4);
    Eigen::Vector3d mix(0.2, 0.5, 0.3);
    for (int t = 0; t < 4; ++t) {
        std::vector<Eigen::VectorXd> controls;
        for (int i = 0; i < 3; ++i) {
            Eigen::VectorXd v(2);
            v << rng.normal(), rng.normal();
            controls.push_back(v);
        }
        Eigen::VectorXd treated = Eigen::VectorXd::Zero(2);
        for (int i = 0; i < 3; ++i) treated += mix[i] * controls[i];
        outcomes[0].push_back(treated);
        for (int i = 0; i < 3; ++i) outcomes[i + 1].push_back(controls[i]);
    }
    Panel panel = make_panel(grid, outcomes, 3);
    BasisSystem basis = build_basis(BasisKind::standard, 2, grid);
    WeightVector gs = fit_scm(panel);
    CHECK(prefit(panel, gs) < 1e-6);
    WeightVector ga = fit_ridge_augmented(panel, basis, 0.5);
    CHECK((ga.weights - gs.weights).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("fit_ridge_augmented: huge lambda recovers the balance weights") {
    Rng rng(17);
    Panel panel = random_panel(rng, 6, 5, 4, 3);
    BasisSystem basis = build_basis(BasisKind::standard, 3, panel.grid);
    WeightVector gs = fit_scm(panel);
    WeightVector ga = fit_ridge_augmented(panel, basis, 1e12);
    CHECK((ga.weights - gs.weights).cwiseAbs().maxCoeff() < 1e-6);
    CHECK(ga.kind == WeightKind::sum_to_one);
    CHECK(ga.weights.sum() == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("fit_ridge_augmented equals the penalized KKT oracle") {
    Rng rng(19);
    for (int rep = 0; rep < 30; ++rep) {
        Panel panel = random_panel(rng, 5, 5, 4, 3);
        BasisSystem basis = build_basis(BasisKind::standard, 3, panel.grid);
        CoefficientBlock block = center_and_expand(panel, basis);
        WeightVector gs = fit_scm(panel);
        for (double lambda : {1e-3, 1.0, 50.0}) {
            WeightVector closed = fit_ridge_augmented(block, gs, lambda);
            WeightVector oracle = penalized_qp_oracle(block, gs, lambda);
            CHECK((closed.weights - oracle.weights).cwiseAbs().maxCoeff() < 1e-7);
        }
    }
}

TEST_CASE("penalized_qp_oracle: limits and random-feasible-point optimality") {
    Rng rng(23);
    Panel panel = random_panel(rng, 5, 4, 3, 2);
    BasisSystem basis = build_basis(BasisKind::standard, 2, panel.grid);
    CoefficientBlock block = center_and_expand(panel, basis);
    WeightVector gs = fit_scm(panel);

    WeightVector huge = penalized_qp_oracle(block, gs, 1e14);
    CHECK((huge.weights - gs.weights).cwiseAbs().maxCoeff() < 1e-6);

    CoefficientBlock zero = block;
    zero.r0.setZero();
    zero.r1.setZero();
    WeightVector penalty_only = penalized_qp_oracle(zero, gs, 2.0);
    CHECK((penalty_only.weights - gs.weights).cwiseAbs().maxCoeff() < 1e-10);

    auto objective = [&](const Eigen::VectorXd& g) {
        return (block.r1 - block.r0.transpose() * g).squaredNorm() +
               0.7 * (g - gs.weights).squaredNorm();
    };
    WeightVector sol = penalized_qp_oracle(block, gs, 0.7);
    const double fstar = objective(sol.weights);
    for (int k = 0; k < 1000; ++k) {
        Eigen::VectorXd g(4);
        for (int i = 0; i < 4; ++i) g[i] = rng.normal(0.0, 2.0);
        g.array() += (1.0 - g.sum()) / 4.0; // feasible: sums to one
        CHECK(fstar <= objective(g) + 1e-9);
    }
}

TEST_CASE("fit_scm_cov: reduction at w=0 and covariate domination") {
    Rng rng(29);
    Panel panel = random_panel(rng, 5, 4, 3, 2, true, 2);
    WeightVector base = fit_scm(panel);
    WeightVector nocov = fit_scm_cov(panel, 0.0);
    CHECK((nocov.weights - base.weights).cwiseAbs().maxCoeff() < 1e-6);

    // Treated covariates exactly matchable: huge w forces balance.
    Panel matchable = panel;
    Eigen::MatrixXd Z = *matchable.covariates;
    Eigen::VectorXd mix = fsc_test::random_simplex_point(rng, 4);
    Z.row(0) = (Z.bottomRows(4).transpose() * mix).transpose();
    matchable.covariates = Z;
    WeightVector forced = fit_scm_cov(matchable, 1e12);
    Eigen::VectorXd imbalance =
        Z.row(0).transpose() - Z.bottomRows(4).transpose() * forced.weights;
    CHECK(imbalance.norm() <= 1e-4);
}

TEST_CASE("fit_scm_cov matches brute-force search on a small instance") {
    Rng rng(31);
    Panel panel = random_panel(rng, 4, 3, 2, 1, true, 1);
    const double w = 0.8;
    WeightVector fitted = fit_scm_cov(panel, w);
    auto objective = [&](const Eigen::VectorXd& g) {
        const Eigen::MatrixXd Z0 = panel.covariates->bottomRows(3);
        const Eigen::VectorXd z1 = panel.covariates->row(0);
        return scm_objective(panel, g) + w * (z1 - Z0.transpose() * g).squaredNorm();
    };
    Eigen::VectorXd oracle = fsc_test::brute_force_simplex(3, 1000, objective);
    CHECK((fitted.weights - oracle).cwiseAbs().maxCoeff() < 2e-3);
}

TEST_CASE("fit_ridge_augmented_cov: vanishing covariates reduce to plain ridge") {
    Rng rng(37);
    Panel panel = random_panel(rng, 6, 5, 4, 2);
    // Constant covariates (zero after centering) with matching treated row.
    Eigen::MatrixXd Z = Eigen::MatrixXd::Constant(6, 2, 3.0);
    panel.covariates = Z;
    BasisSystem basis = build_basis(BasisKind::standard, 2, panel.grid);
    WeightVector plain = fit_ridge_augmented(panel, basis, 0.3);
    WeightVector withz = fit_ridge_augmented_cov(panel, basis, 0.3);
    CHECK((plain.weights - withz.weights).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("fit_ridge_augmented_cov: exact covariate balance at every lambda") {
    Rng rng(41);
    for (int rep = 0; rep < 10; ++rep) {
        Panel panel = random_panel(rng, 7, 5, 4, 3, true, 2);
        BasisSystem basis = build_basis(BasisKind::standard, 3, panel.grid);
        for (double lambda : {1e-4, 1e-2, 1.0, 1e2, 1e4}) {
            WeightVector w = fit_ridge_augmented_cov(panel, basis, lambda);
            CHECK(w.weights.sum() == doctest::Approx(1.0).epsilon(1e-8));
            Eigen::VectorXd imbalance =
                panel.covariates->row(0).transpose() -
                panel.covariates->bottomRows(6).transpose() * w.weights;
            CHECK(imbalance.norm() <= 1e-8);
        }
    }
}

TEST_CASE("fit_ridge_augmented_cov matches a direct KKT solve") {
    // Oracle: minimize ||r1 - r0'g||^2 + lambda ||g - gs||^2 subject to
    // sum g = 1 and exact covariate balance Z0'g = z1.
    Rng rng(43);
    Panel panel = random_panel(rng, 6, 5, 4, 2, true, 2);
    BasisSystem basis = build_basis(BasisKind::standard, 2, panel.grid);
    const double lambda = 0.7;
    WeightVector fitted = fit_ridge_augmented_cov(panel, basis, lambda);

    const int n = 5, p = 2;
    Eigen::MatrixXd Z = *panel.covariates;
    Eigen::RowVectorXd zbar = Z.bottomRows(n).colwise().mean();
    Z.rowwise() -= zbar;
    Eigen::MatrixXd Z0 = Z.bottomRows(n);
    Eigen::VectorXd z1 = Z.row(0);
    CoefficientBlock block = center_and_expand(panel, basis);
    WeightVector gs = fit_scm(panel);

    // Residualized objective reproduces the estimator's regression target.
    Eigen::MatrixXd P = Z0 * (Z0.transpose() * Z0).ldlt().solve(Z0.transpose());
    Eigen::MatrixXd r0c = block.r0 - P * block.r0;
    Eigen::VectorXd r1c = block.r1 - (block.r0.transpose() * Z0) *
                                         (Z0.transpose() * Z0).ldlt().solve(z1);
    const int m = n + 1 + p;
    Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(m, m);
    kkt.topLeftCorner(n, n) = 2.0 * (r0c * r0c.transpose());
    kkt.topLeftCorner(n, n).diagonal().array() += 2.0 * lambda;
    kkt.block(0, n, n, 1).setOnes();
    kkt.block(n, 0, 1, n).setOnes();
    kkt.block(0, n + 1, n, p) = Z0;
    kkt.block(n + 1, 0, p, n) = Z0.transpose();
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m);
    rhs.head(n) = 2.0 * (r0c * r1c + lambda * gs.weights);
    rhs[n] = 1.0;
    rhs.tail(p) = z1;
    Eigen::VectorXd sol = kkt.fullPivLu().solve(rhs);
    CHECK((fitted.weights - sol.head(n)).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("fit_ridge_augmented_cov: collinear nonzero covariates are rejected") {
    Rng rng(47);
    Panel panel = random_panel(rng, 6, 4, 3, 2, true, 2);
    Eigen::MatrixXd Z = *panel.covariates;
    Z.col(1) = 2.0 * Z.col(0); // collinear
    panel.covariates = Z;
    BasisSystem basis = build_basis(BasisKind::standard, 2, panel.grid);
    CHECK_THROWS_AS(fit_ridge_augmented_cov(panel, basis, 1.0), NumericError);
}

TEST_CASE("cv_lambda: singleton and duplicate grids") {
    Rng rng(53);
    Panel panel = random_panel(rng, 5, 5, 4, 2);
    BasisSystem basis = build_basis(BasisKind::standard, 2, panel.grid);
    CvResult single = cv_lambda(panel, basis, {0.37});
    CHECK(single.best_lambda == 0.37);
    CvResult dup = cv_lambda(panel, basis, {0.37, 0.37});
    CHECK(dup.best_lambda == 0.37);
    CHECK(std::abs(dup.cv_values[0] - dup.cv_values[1]) < 1e-12);
    CHECK_THROWS_AS(cv_lambda(panel, basis, {}), DomainError);
    Panel tiny = random_panel(rng, 4, 3, 1, 2);
    CHECK_THROWS_AS(cv_lambda(tiny, basis, {1.0}), DomainError);
}

TEST_CASE("cv_lambda matches exhaustive fold recomputation") {
    Rng rng(59);
    Panel panel = random_panel(rng, 6, 6, 5, 2);
    BasisSystem basis = build_basis(BasisKind::standard, 2, panel.grid);
    std::vector<double> grid{1e-3, 1e-1, 1.0, 10.0};
    CvResult res = cv_lambda(panel, basis, grid);

    std::vector<double> expected(grid.size(), 0.0);
    for (int t = 0; t < panel.T0; ++t) {
        // Rebuild the fold as a fresh panel without period t.
        std::vector<std::vector<Eigen::VectorXd>> sub(panel.n_units());
        for (int i = 0; i < panel.n_units(); ++i) {
            for (int s = 0; s < panel.n_periods(); ++s) {
                if (s != t) sub[i].push_back(panel.outcomes[i][s]);
            }
        }
        Panel fold = make_panel(panel.grid, sub, panel.T0 - 1);
        WeightVector gs = fit_scm(fold);
        CoefficientBlock block = center_and_expand(fold, basis);
        for (size_t li = 0; li < grid.size(); ++li) {
            WeightVector g = fit_ridge_augmented(block, gs, grid[li]);
            Eigen::VectorXd resid = panel.outcomes[0][t];
            for (int i = 0; i + 1 < panel.n_units(); ++i) {
                resid -= g.weights[i] * panel.outcomes[i + 1][t];
            }
            expected[li] += resid.squaredNorm();
        }
    }
    for (size_t li = 0; li < grid.size(); ++li) {
        CHECK(res.cv_values[li] == doctest::Approx(expected[li]).epsilon(1e-9));
    }
    // The reported best is the grid minimizer.
    for (size_t li = 0; li < grid.size(); ++li) {
        CHECK(res.cv_values[li] >=
              *std::min_element(res.cv_values.begin(), res.cv_values.end()) - 1e-12);
    }
    double best_cv = 1e300;
    double best_l = 0.0;
    for (size_t li = 0; li < grid.size(); ++li) {
        if (res.cv_values[li] < best_cv ||
            (res.cv_values[li] == best_cv && grid[li] > best_l)) {
            best_cv = res.cv_values[li];
            best_l = grid[li];
        }
    }
    CHECK(res.best_lambda == best_l);
}

TEST_CASE("diagnostics: prefit oracle and norms") {
    Rng rng(61);
    Panel panel = random_panel(rng, 5, 4, 3, 2);
    BasisSystem basis = build_basis(BasisKind::standard, 2, panel.grid);
    WeightVector unit{Eigen::VectorXd::Zero(4), WeightKind::simplex};
    unit.weights[1] = 1.0;
    Diagnostics d = diagnostics(panel, unit, basis);
    CHECK(d.l2_norm == 1.0);
    CHECK(d.l1_norm == 1.0);
    // Direct double-loop prefit.
    double total = 0.0;
    for (int t = 0; t < panel.T0; ++t) {
        Eigen::VectorXd resid = panel.outcomes[0][t] - panel.outcomes[2][t];
        total += resid.squaredNorm();
    }
    CHECK(d.prefit == doctest::Approx(std::sqrt(total)).epsilon(1e-10));
    CHECK(d.singular_values.size() == std::min<int>(4, 2 * panel.T0));

    // Perfect fit panel.
    Panel copycat = panel;
    copycat.outcomes[0] = copycat.outcomes[2];
    WeightVector w2 = fit_scm(copycat);
    CHECK(diagnostics(copycat, w2, basis).prefit < 1e-7);
}

TEST_CASE("ridge fit/norm bounds hold at complete K") {
    Rng rng(67);
    int checked = 0;
    while (checked < 40) {
        const int N = 4 + static_cast<int>(rng.uniform01() * 4); // 4..7
        const int T0 = 2 + static_cast<int>(rng.uniform01() * 3);
        const int d = 2 + static_cast<int>(rng.uniform01() * 3);
        Panel panel = random_panel(rng, N, T0 + 1, T0, d);
        BasisSystem basis = build_basis(BasisKind::standard, d, panel.grid);
        CoefficientBlock block = center_and_expand(panel, basis);
        Eigen::BDCSVD<Eigen::MatrixXd> svd(block.r0);
        const Eigen::VectorXd sv = svd.singularValues();
        const double smax = sv[0];
        int rank = 0;
        double smin = smax;
        for (int i = 0; i < sv.size(); ++i) {
            if (sv[i] > 1e-10 * smax) {
                rank = i + 1;
                smin = sv[i];
            }
        }
        if (rank == 0) continue;
        WeightVector gs = fit_scm(panel);
        const double scm_prefit = prefit(panel, gs);
        for (double lambda : {1e-3, 1.0, 1e3}) {
            WeightVector ga = fit_ridge_augmented(block, gs, lambda);
            const double lhs_fit = prefit(panel, ga);
            const double bound_fit =
                std::sqrt(double(rank)) * lambda / (smin * smin + lambda) * scm_prefit;
            CHECK(lhs_fit <= bound_fit + 1e-6);
            const double bound_norm =
                gs.weights.norm() +
                std::sqrt(double(rank)) * smax / (smin * smin + lambda) * scm_prefit;
            CHECK(ga.weights.norm() <= bound_norm + 1e-6);
        }
        ++checked;
    }
}

TEST_CASE("monotone shrinkage toward the balance weights in lambda") {
    Rng rng(71);
    for (int rep = 0; rep < 10; ++rep) {
        Panel panel = random_panel(rng, 6, 5, 4, 3);
        BasisSystem basis = build_basis(BasisKind::standard, 3, panel.grid);
        CoefficientBlock block = center_and_expand(panel, basis);
        WeightVector gs = fit_scm(panel);
        double prev = std::numeric_limits<double>::infinity();
        for (double lambda : {1e-4, 1e-2, 1.0, 1e2, 1e4}) {
            const double dist =
                (fit_ridge_augmented(block, gs, lambda).weights - gs.weights).norm();
            CHECK(dist <= prev + 1e-10);
            prev = dist;
        }
    }
}

TEST_CASE("default lambda grid spans 1e-4..1e4 times the top squared singular value") {
    Rng rng(73);
    Panel panel = random_panel(rng, 5, 4, 3, 2);
    BasisSystem basis = build_basis(BasisKind::standard, 2, panel.grid);
    std::vector<double> grid = default_lambda_grid(panel, basis);
    CHECK(grid.size() == 20);
    CoefficientBlock block = center_and_expand(panel, basis);
    Eigen::BDCSVD<Eigen::MatrixXd> svd(block.r0);
    const double dmax2 = svd.singularValues()[0] * svd.singularValues()[0];
    CHECK(grid.front() == doctest::Approx(1e-4 * dmax2).epsilon(1e-10));
    CHECK(grid.back() == doctest::Approx(1e4 * dmax2).epsilon(1e-10));
    CHECK(std::is_sorted(grid.begin(), grid.end()));
}
