#include "fsc/weights.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace fsc {

namespace {

// Quadratic form f(g) = g'A g - 2 b'g + c of an SCM balance objective.
struct Quadratic {
    Eigen::MatrixXd A;
    Eigen::VectorXd b;
    double c = 0.0;

    double value(const Eigen::VectorXd& g) const {
        return g.dot(A * g) - 2.0 * b.dot(g) + c;
    }
    Eigen::VectorXd gradient(const Eigen::VectorXd& g) const {
        return 2.0 * (A * g - b);
    }
};

// Balance objective over the given pre-treatment periods, plus an optional
// covariate term with weight w.
Quadratic scm_quadratic(const Panel& panel, const std::vector<int>& periods,
                        double cov_weight) {
    const int n = panel.n_units() - 1;
    const Eigen::VectorXd& w = panel.grid->quad_weights();
    Quadratic q;
    q.A = Eigen::MatrixXd::Zero(n, n);
    q.b = Eigen::VectorXd::Zero(n);
    for (int t : periods) {
        Eigen::MatrixXd C(n, panel.grid->size());
        for (int i = 0; i < n; ++i) C.row(i) = panel.outcomes[i + 1][t];
        const Eigen::VectorXd& y1 = panel.outcomes[0][t];
        Eigen::MatrixXd Cw = C * w.asDiagonal();
        q.A += Cw * C.transpose();
        q.b += Cw * y1;
        q.c += y1.dot(w.asDiagonal() * y1);
    }
    if (cov_weight > 0.0) {
        if (!panel.covariates) {
            throw DomainError("fit_scm_cov: panel carries no covariates");
        }
        const Eigen::MatrixXd Z0 = panel.covariates->bottomRows(n);
        const Eigen::VectorXd z1 = panel.covariates->row(0);
        q.A += cov_weight * Z0 * Z0.transpose();
        q.b += cov_weight * Z0 * z1;
        q.c += cov_weight * z1.squaredNorm();
    }
    return q;
}

std::vector<int> all_pre_periods(const Panel& panel) {
    std::vector<int> p(panel.T0);
    std::iota(p.begin(), p.end(), 0);
    return p;
}

// Accelerated projected gradient onto the simplex with function restarts.
// Stops when the projected-gradient norm falls below 1e-9.
WeightVector solve_simplex_qp(const Quadratic& q, ScmSolveInfo* info) {
    const int n = static_cast<int>(q.b.size());
    const int max_iter = 50000;
    const double pg_tol = 1e-9;

    Eigen::VectorXd x = Eigen::VectorXd::Constant(n, 1.0 / n);
    if (n == 1) {
        x[0] = 1.0;
        if (info) *info = {q.value(x), 0.0, 0};
        return {x, WeightKind::simplex};
    }

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(q.A);
    const double lmax = es.eigenvalues().maxCoeff();
    if (!(lmax > 1e-300)) {
        // Objective is affine on the simplex: a maximizing vertex of b is
        // optimal, or any point when b vanishes.
        if (q.b.cwiseAbs().maxCoeff() > 0.0) {
            int k;
            q.b.maxCoeff(&k);
            x.setZero();
            x[k] = 1.0;
        }
        if (info) *info = {q.value(x), 0.0, 0};
        return {x, WeightKind::simplex};
    }
    const double L = 2.0 * lmax;

    auto pg_norm = [&](const Eigen::VectorXd& v) {
        return L * (v - project_to_simplex(v - q.gradient(v) / L)).norm();
    };

    Eigen::VectorXd y = x;
    double tk = 1.0;
    double fx = q.value(x);
    int it = 0;
    double pg = pg_norm(x);
    for (; it < max_iter && pg > pg_tol; ++it) {
        Eigen::VectorXd xn = project_to_simplex(y - q.gradient(y) / L);
        const double fn = q.value(xn);
        if (fn > fx) { // restart momentum
            y = x;
            tk = 1.0;
            xn = project_to_simplex(y - q.gradient(y) / L);
        }
        const double tn = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * tk * tk));
        y = xn + ((tk - 1.0) / tn) * (xn - x);
        tk = tn;
        fx = q.value(xn);
        x = std::move(xn);
        pg = pg_norm(x);
    }
    if (pg > 1e-7) {
        // Frank-Wolfe gap bounds the remaining suboptimality.
        Eigen::VectorXd g = q.gradient(x);
        const double gap = g.dot(x) - g.minCoeff();
        std::ostringstream os;
        os << "fit_scm: projected-gradient method did not converge in " << max_iter
           << " iterations (duality gap " << gap << ")";
        throw SolverError(os.str());
    }
    if (info) *info = {fx, pg, it};
    return {x, WeightKind::simplex};
}

// Solve (r0 r0' + lambda I) u = rhs by Cholesky, falling back to a spectral
// solve when the factorization breaks down.
Eigen::VectorXd ridge_solve(const Eigen::MatrixXd& S, double lambda,
                            const Eigen::VectorXd& rhs) {
    Eigen::MatrixXd M = S;
    M.diagonal().array() += lambda;
    Eigen::LLT<Eigen::MatrixXd> llt(M);
    if (llt.info() == Eigen::Success) {
        Eigen::VectorXd u = llt.solve(rhs);
        if (u.allFinite()) return u;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S);
    if (es.info() != Eigen::Success) {
        throw NumericError("fit_ridge_augmented: spectral fallback failed");
    }
    Eigen::VectorXd ev = es.eigenvalues().cwiseMax(0.0);
    Eigen::VectorXd u = es.eigenvectors() *
                        ((es.eigenvectors().transpose() * rhs).array() /
                         (ev.array() + lambda))
                            .matrix();
    if (!u.allFinite()) {
        std::ostringstream os;
        os << "fit_ridge_augmented: linear solve failed (condition estimate "
           << (ev.maxCoeff() + lambda) / lambda << ")";
        throw NumericError(os.str());
    }
    return u;
}

void require_positive_lambda(double lambda, const char* what) {
    if (!(lambda > 0.0) || !std::isfinite(lambda)) {
        throw DomainError(std::string(what) + ": lambda must be positive and finite");
    }
}

} // namespace

Eigen::VectorXd project_to_simplex(const Eigen::VectorXd& v) {
    const int n = static_cast<int>(v.size());
    std::vector<double> u(v.data(), v.data() + n);
    std::sort(u.begin(), u.end(), std::greater<double>());
    double css = 0.0, tau = 0.0;
    int rho = 0;
    for (int j = 0; j < n; ++j) {
        css += u[j];
        const double t = (css - 1.0) / (j + 1);
        if (u[j] - t > 0.0) {
            rho = j + 1;
            tau = t;
        }
    }
    (void)rho;
    return (v.array() - tau).max(0.0);
}

WeightVector fit_scm(const Panel& panel, ScmSolveInfo* info) {
    panel.validate();
    return solve_simplex_qp(scm_quadratic(panel, all_pre_periods(panel), 0.0), info);
}

WeightVector fit_scm_periods(const Panel& panel, const std::vector<int>& periods,
                             ScmSolveInfo* info) {
    panel.validate();
    if (periods.empty()) throw DomainError("fit_scm_periods: need at least one period");
    for (int t : periods) {
        if (t < 0 || t >= panel.T0) {
            throw DomainError("fit_scm_periods: period outside the pre-treatment window");
        }
    }
    return solve_simplex_qp(scm_quadratic(panel, periods, 0.0), info);
}

WeightVector fit_scm_cov(const Panel& panel, double w, ScmSolveInfo* info) {
    panel.validate();
    if (!(w >= 0.0)) throw DomainError("fit_scm_cov: covariate weight must be nonnegative");
    if (!panel.covariates) throw DomainError("fit_scm_cov: panel carries no covariates");
    return solve_simplex_qp(scm_quadratic(panel, all_pre_periods(panel), w), info);
}

CoefficientBlock center_and_expand(const Panel& panel, const BasisSystem& basis) {
    panel.validate();
    if (!basis.grid->same_as(*panel.grid)) {
        throw DimensionError("center_and_expand: basis and panel grids differ");
    }
    const int n = panel.n_units() - 1;
    const int K = basis.K, T0 = panel.T0;
    CoefficientBlock block;
    block.K = K;
    block.T0 = T0;
    block.r0.resize(n, K * T0);
    block.r1.resize(K * T0);
    block.centered_means.reserve(T0);
    const Eigen::VectorXd& w = panel.grid->quad_weights();
    for (int t = 0; t < T0; ++t) {
        Eigen::VectorXd mean = Eigen::VectorXd::Zero(panel.grid->size());
        for (int i = 1; i <= n; ++i) mean += panel.outcomes[i][t];
        mean /= n;
        block.centered_means.push_back(mean);
        // r_{i,t,k} = <phi_k, Y_it - mean_t>
        for (int i = 0; i <= n; ++i) {
            Eigen::VectorXd x = panel.outcomes[i][t] - mean;
            Eigen::VectorXd r = basis.basis_matrix * (w.array() * x.array()).matrix();
            if (i == 0) {
                block.r1.segment(t * K, K) = r;
            } else {
                block.r0.row(i - 1).segment(t * K, K) = r;
            }
        }
    }
    return block;
}

WeightVector fit_ridge_augmented(const CoefficientBlock& block,
                                 const WeightVector& gamma_scm, double lambda) {
    require_positive_lambda(lambda, "fit_ridge_augmented");
    const Eigen::VectorXd& g = gamma_scm.weights;
    if (g.size() != block.r0.rows()) {
        throw DimensionError("fit_ridge_augmented: weight length does not match block");
    }
    // gamma_aug = gamma_scm + (r0 r0' + lambda I)^{-1} r0 (r1 - r0' gamma_scm),
    // the push-through form of the closed-form correction.
    Eigen::VectorXd d = block.r1 - block.r0.transpose() * g;
    Eigen::MatrixXd S = block.r0 * block.r0.transpose();
    Eigen::VectorXd corr = ridge_solve(S, lambda, block.r0 * d);
    WeightVector out{g + corr, WeightKind::sum_to_one};
    if (std::abs(out.weights.sum() - 1.0) > 1e-8) {
        throw NumericError("fit_ridge_augmented: weights failed the sum-to-one "
                           "postcondition; the block appears uncentered or the "
                           "system is pathologically conditioned");
    }
    return out;
}

WeightVector fit_ridge_augmented(const Panel& panel, const BasisSystem& basis,
                                 double lambda) {
    CoefficientBlock block = center_and_expand(panel, basis);
    return fit_ridge_augmented(block, fit_scm(panel), lambda);
}

WeightVector penalized_qp_oracle(const CoefficientBlock& block,
                                 const WeightVector& gamma_scm, double lambda) {
    require_positive_lambda(lambda, "penalized_qp_oracle");
    const int n = static_cast<int>(block.r0.rows());
    Eigen::MatrixXd S = block.r0 * block.r0.transpose();
    Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(n + 1, n + 1);
    kkt.topLeftCorner(n, n) = 2.0 * S;
    kkt.topLeftCorner(n, n).diagonal().array() += 2.0 * lambda;
    kkt.block(0, n, n, 1).setOnes();
    kkt.block(n, 0, 1, n).setOnes();
    Eigen::VectorXd rhs(n + 1);
    rhs.head(n) = 2.0 * (block.r0 * block.r1 + lambda * gamma_scm.weights);
    rhs[n] = 1.0;
    Eigen::FullPivLU<Eigen::MatrixXd> lu(kkt);
    if (!lu.isInvertible()) {
        throw NumericError("penalized_qp_oracle: singular KKT system");
    }
    Eigen::VectorXd sol = lu.solve(rhs);
    return {sol.head(n), WeightKind::sum_to_one};
}

WeightVector fit_ridge_augmented_cov(const Panel& panel, const BasisSystem& basis,
                                     double lambda) {
    require_positive_lambda(lambda, "fit_ridge_augmented_cov");
    panel.validate();
    if (!panel.covariates) {
        throw DomainError("fit_ridge_augmented_cov: panel carries no covariates");
    }
    const int n = panel.n_units() - 1;
    const int p = static_cast<int>(panel.covariates->cols());

    // Center covariates at the control mean, shifting the treated row too.
    Eigen::MatrixXd Z = *panel.covariates;
    Eigen::RowVectorXd zbar = Z.bottomRows(n).colwise().mean();
    Z.rowwise() -= zbar;
    Eigen::MatrixXd Z0 = Z.bottomRows(n);
    Eigen::VectorXd z1 = Z.row(0);

    Eigen::MatrixXd G = Z0.transpose() * Z0;
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(G);
    qr.setThreshold(1e-10);
    if (qr.rank() < p) {
        std::ostringstream os;
        os << "fit_ridge_augmented_cov: Z0'Z0 is rank deficient; collinear columns:";
        for (int j = qr.rank(); j < p; ++j) {
            os << " " << (qr.colsPermutation().indices()[j] + 1);
        }
        throw NumericError(os.str());
    }

    CoefficientBlock block = center_and_expand(panel, basis);
    WeightVector gs = fit_scm(panel);

    // Residualize the coefficients against the covariates.
    Eigen::MatrixXd Ginv_Z0t_r0 = qr.solve(Z0.transpose() * block.r0); // p x KT0
    Eigen::MatrixXd r0_check = block.r0 - Z0 * Ginv_Z0t_r0;
    Eigen::VectorXd r1_check = block.r1 - Ginv_Z0t_r0.transpose() * z1;

    Eigen::VectorXd d = r1_check - r0_check.transpose() * gs.weights;
    Eigen::MatrixXd S = r0_check * r0_check.transpose();
    Eigen::VectorXd corr_r = ridge_solve(S, lambda, r0_check * d);
    Eigen::VectorXd corr_z = Z0 * qr.solve(z1 - Z0.transpose() * gs.weights);

    WeightVector out{gs.weights + corr_r + corr_z, WeightKind::sum_to_one};
    if (std::abs(out.weights.sum() - 1.0) > 1e-8) {
        throw NumericError("fit_ridge_augmented_cov: weights failed the sum-to-one "
                           "postcondition");
    }
    return out;
}

CvResult cv_lambda(const Panel& panel, const BasisSystem& basis,
                   const std::vector<double>& lambda_grid) {
    panel.validate();
    if (panel.T0 < 2) throw DomainError("cv_lambda: need T0 >= 2 pre-treatment periods");
    if (lambda_grid.empty()) throw DomainError("cv_lambda: empty lambda grid");
    for (double l : lambda_grid) require_positive_lambda(l, "cv_lambda");

    const int n = panel.n_units() - 1;
    const int K = basis.K, T0 = panel.T0;
    CoefficientBlock block = center_and_expand(panel, basis);

    // Held-out scores reuse the per-period quadratic pieces.
    std::vector<Quadratic> per_period;
    per_period.reserve(T0);
    for (int t = 0; t < T0; ++t) per_period.push_back(scm_quadratic(panel, {t}, 0.0));

    std::vector<double> cv(lambda_grid.size(), 0.0);
    for (int t = 0; t < T0; ++t) {
        std::vector<int> keep;
        for (int s = 0; s < T0; ++s)
            if (s != t) keep.push_back(s);

        WeightVector gs_fold;
        try {
            gs_fold = fit_scm_periods(panel, keep);
        } catch (const Error& e) {
            throw SolverError("cv_lambda: fold t=" + std::to_string(t + 1) +
                              " failed: " + e.what());
        }

        Eigen::MatrixXd r0f(n, K * (T0 - 1));
        Eigen::VectorXd r1f(K * (T0 - 1));
        for (size_t j = 0; j < keep.size(); ++j) {
            r0f.middleCols(static_cast<int>(j) * K, K) =
                block.r0.middleCols(keep[j] * K, K);
            r1f.segment(static_cast<int>(j) * K, K) = block.r1.segment(keep[j] * K, K);
        }
        Eigen::VectorXd d = r1f - r0f.transpose() * gs_fold.weights;
        Eigen::MatrixXd S = r0f * r0f.transpose();
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S);
        Eigen::VectorXd ev = es.eigenvalues().cwiseMax(0.0);
        Eigen::VectorXd rd = es.eigenvectors().transpose() * (r0f * d);

        for (size_t li = 0; li < lambda_grid.size(); ++li) {
            Eigen::VectorXd corr =
                es.eigenvectors() * (rd.array() / (ev.array() + lambda_grid[li])).matrix();
            Eigen::VectorXd g = gs_fold.weights + corr;
            if (!g.allFinite()) {
                throw NumericError("cv_lambda: non-finite weights at lambda=" +
                                   std::to_string(lambda_grid[li]) +
                                   ", fold t=" + std::to_string(t + 1));
            }
            cv[li] += per_period[t].value(g);
        }
    }

    CvResult out;
    out.lambdas = lambda_grid;
    out.cv_values = cv;
    size_t best = 0;
    for (size_t li = 1; li < lambda_grid.size(); ++li) {
        if (cv[li] < cv[best] ||
            (cv[li] == cv[best] && lambda_grid[li] > lambda_grid[best])) {
            best = li;
        }
    }
    out.best_lambda = lambda_grid[best];
    return out;
}

std::vector<double> default_lambda_grid(const Panel& panel, const BasisSystem& basis) {
    CoefficientBlock block = center_and_expand(panel, basis);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(block.r0 * block.r0.transpose());
    const double dmax2 = std::max(es.eigenvalues().maxCoeff(), 1e-30);
    const int n_points = 20;
    std::vector<double> grid(n_points);
    const double lo = std::log10(1e-4 * dmax2), hi = std::log10(1e4 * dmax2);
    for (int j = 0; j < n_points; ++j) {
        grid[j] = std::pow(10.0, lo + (hi - lo) * j / (n_points - 1));
    }
    return grid;
}

double prefit(const Panel& panel, const WeightVector& wv) {
    const int n = panel.n_units() - 1;
    if (wv.weights.size() != n) {
        throw DimensionError("prefit: weight length does not match panel");
    }
    const Eigen::VectorXd& w = panel.grid->quad_weights();
    double total = 0.0;
    for (int t = 0; t < panel.T0; ++t) {
        Eigen::VectorXd resid = panel.outcomes[0][t];
        for (int i = 0; i < n; ++i) resid -= wv.weights[i] * panel.outcomes[i + 1][t];
        total += (w.array() * resid.array().square()).sum();
    }
    return std::sqrt(total);
}

Diagnostics diagnostics(const Panel& panel, const WeightVector& wv,
                        const BasisSystem& basis) {
    Diagnostics d;
    d.prefit = prefit(panel, wv);
    d.l1_norm = wv.weights.lpNorm<1>();
    d.l2_norm = wv.weights.norm();
    if (panel.covariates) {
        const int n = panel.n_units() - 1;
        Eigen::VectorXd z1 = panel.covariates->row(0);
        d.covariate_imbalance =
            (z1 - panel.covariates->bottomRows(n).transpose() * wv.weights).norm();
    }
    CoefficientBlock block = center_and_expand(panel, basis);
    Eigen::BDCSVD<Eigen::MatrixXd> svd(block.r0);
    d.singular_values = svd.singularValues();
    return d;
}

} // namespace fsc
