#include "fsc/simulate.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <mutex>
#include <thread>

#include "fsc/rng.hpp"

namespace fsc {

namespace {

constexpr double kPi = 3.14159265358979323846;

// Stream ids for seed derivation.
enum : std::uint64_t { kStreamPre = 1, kStreamNoise = 2, kStreamLoadings = 3 };

double weighted_norm(const Eigen::VectorXd& w, const Eigen::VectorXd& v) {
    return std::sqrt((w.array() * v.array().square()).sum());
}

// Noise component shapes 1, x^{1/2}, x^{1/3}, x^{1/4} on the grid.
Eigen::MatrixXd noise_shapes(const Eigen::VectorXd& x) {
    Eigen::MatrixXd S(x.size(), 4);
    S.col(0).setOnes();
    S.col(1) = x.array().sqrt();
    S.col(2) = x.array().pow(1.0 / 3.0);
    S.col(3) = x.array().pow(1.0 / 4.0);
    return S;
}

Eigen::VectorXd draw_noise(const Eigen::MatrixXd& shapes, double C, Rng& rng) {
    Eigen::Vector4d e;
    for (int k = 0; k < 4; ++k) e[k] = rng.uniform(-C, C);
    return shapes * e;
}

// a.s. envelope bound on the error norm: every component at +/-C.
double noise_sigma(const Eigen::VectorXd& qw, const Eigen::MatrixXd& shapes, double C) {
    Eigen::VectorXd envelope = C * shapes.rowwise().sum();
    return weighted_norm(qw, envelope);
}

double normal_pdf(double y, double mean, double sd) {
    const double z = (y - mean) / sd;
    return std::exp(-0.5 * z * z) / (sd * std::sqrt(2.0 * kPi));
}

} // namespace

ArInstance gen_autoregressive(const ArConfig& config, std::uint64_t rep) {
    if (config.N < 2 || config.T0 < 1 || config.T != config.T0 + 1) {
        throw DomainError("gen_autoregressive: require N >= 2 and T = T0 + 1");
    }
    const int n_lags = static_cast<int>(config.lag_coeffs.size());
    if (config.T0 < n_lags) {
        throw DomainError("gen_autoregressive: T0 must cover the lag count");
    }
    GridPtr grid = Grid::uniform(config.grid_points, 0.0, 1.0);
    const int G = grid->size();
    const Eigen::VectorXd& x = grid->points();
    const Eigen::VectorXd& qw = grid->quad_weights();

    // Pre-treatment outcomes: frozen across replications (the stream depends
    // only on the master seed).
    const int n_terms = 10;
    Eigen::MatrixXd g_funcs(n_terms, G);
    for (int l = 1; l <= n_terms; ++l) {
        for (int j = 0; j < G; ++j) {
            g_funcs(l - 1, j) = (l == 1) ? 1.0 : std::sqrt(2.0) * std::cos((l - 1) * kPi * x[j]);
        }
    }
    const double u_bound = std::sqrt(3.0) / 100.0;
    Rng pre_rng(derive_seed(config.seed, kStreamPre));
    std::vector<std::vector<Eigen::VectorXd>> outcomes(
        config.N, std::vector<Eigen::VectorXd>(config.T));
    for (int i = 0; i < config.N; ++i) {
        for (int t = 0; t < config.T0; ++t) {
            Eigen::VectorXd y = Eigen::VectorXd::Zero(G);
            for (int l = 1; l <= n_terms; ++l) {
                const double u = pre_rng.uniform(-u_bound, u_bound);
                y += std::pow(l, -1.2) * u * g_funcs.row(l - 1).transpose();
            }
            outcomes[i][t] = std::move(y);
        }
    }

    // Lag kernels beta_k(x, y) = c_k * normal_pdf(y; x, sd).
    ArInternals internals;
    Eigen::MatrixXd kernel(G, G);
    for (int a = 0; a < G; ++a)
        for (int b = 0; b < G; ++b) kernel(a, b) = normal_pdf(x[b], x[a], config.kernel_sd);
    double kernel_norm2 = 0.0; // double integral of kernel^2
    for (int a = 0; a < G; ++a)
        for (int b = 0; b < G; ++b) kernel_norm2 += qw[a] * qw[b] * kernel(a, b) * kernel(a, b);
    for (int k = 0; k < n_lags; ++k) {
        internals.lag_kernels.push_back(config.lag_coeffs[k] * kernel);
        internals.beta_norm2_sum += config.lag_coeffs[k] * config.lag_coeffs[k] * kernel_norm2;
    }

    // Post-treatment outcomes: kernel regression on the newest lags plus
    // replication-specific bounded noise.
    const Eigen::MatrixXd shapes = noise_shapes(x);
    internals.sigma = noise_sigma(qw, shapes, config.noise_bound);
    Rng noise_rng(derive_seed(derive_seed(config.seed, kStreamNoise), rep));
    internals.noiseless_post.resize(config.N);
    for (int i = 0; i < config.N; ++i) {
        Eigen::VectorXd y = Eigen::VectorXd::Zero(G);
        for (int k = 0; k < n_lags; ++k) {
            const Eigen::VectorXd& lag = outcomes[i][config.T0 - 1 - k];
            y += internals.lag_kernels[k] * (qw.array() * lag.array()).matrix();
        }
        internals.noiseless_post[i] = y;
        outcomes[i][config.T0] = y + draw_noise(shapes, config.noise_bound, noise_rng);
    }

    ArInstance instance{make_panel(grid, std::move(outcomes), config.T0), {}, {}};
    instance.truth = instance.panel.outcomes[0][config.T0];
    instance.internals = std::move(internals);
    return instance;
}

FactorInstance gen_latent_factor(const FactorConfig& config, std::uint64_t rep) {
    if (config.N < 2 || config.T0 < 1 || config.T <= config.T0 || config.J < 1) {
        throw DomainError("gen_latent_factor: invalid panel dimensions");
    }
    GridPtr grid = Grid::uniform(config.grid_points, 0.0, 1.0);
    const int G = grid->size();
    const Eigen::VectorXd& x = grid->points();
    const Eigen::VectorXd& qw = grid->quad_weights();

    FactorInternals internals;
    internals.J = config.J;
    internals.factors.assign(config.J, std::vector<Eigen::VectorXd>(config.T));
    for (int j = 1; j <= config.J; ++j) {
        for (int t = 1; t <= config.T; ++t) {
            Eigen::VectorXd f(G);
            if (config.factor_kind == FactorConfig::Kind::paper) {
                if (j == 1 && t == 1) {
                    f.setOnes();
                } else {
                    for (int a = 0; a < G; ++a) {
                        f[a] = std::sqrt(2.0) * std::cos((j + t) * kPi * x[a]);
                    }
                }
            } else {
                // Orthonormal cosine columns over the pre-treatment periods,
                // modulated per factor so mu(x)'mu(x) stays well conditioned.
                const double c = (j == 1)
                                     ? std::sqrt(1.0 / config.T0)
                                     : std::sqrt(2.0 / config.T0) *
                                           std::cos(kPi * (j - 1) * (t - 0.5) / config.T0);
                for (int a = 0; a < G; ++a) {
                    f[a] = c * (1.0 + 0.5 * std::cos(j * kPi * x[a]));
                }
            }
            internals.factors[j - 1][t - 1] = std::move(f);
        }
    }

    internals.M1 = 0.0;
    for (int j = 0; j < config.J; ++j)
        for (int t = 0; t < config.T; ++t)
            internals.M1 = std::max(internals.M1,
                                    internals.factors[j][t].cwiseAbs().maxCoeff());
    internals.M2 = std::numeric_limits<double>::infinity();
    for (int a = 0; a < G; ++a) {
        Eigen::MatrixXd mu(config.T0, config.J);
        for (int t = 0; t < config.T0; ++t)
            for (int j = 0; j < config.J; ++j) mu(t, j) = internals.factors[j][t][a];
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(mu.transpose() * mu);
        internals.M2 = std::min(internals.M2, es.eigenvalues().minCoeff());
    }

    Rng load_rng(derive_seed(derive_seed(config.seed, kStreamLoadings), rep));
    internals.loadings.resize(config.N, config.J);
    for (int i = 0; i < config.N; ++i)
        for (int j = 0; j < config.J; ++j)
            internals.loadings(i, j) = load_rng.normal(0.0, config.loading_sd);

    const Eigen::MatrixXd shapes = noise_shapes(x);
    internals.sigma = noise_sigma(qw, shapes, config.noise_bound);
    Rng noise_rng(derive_seed(derive_seed(config.seed, kStreamNoise), rep));
    std::vector<std::vector<Eigen::VectorXd>> outcomes(
        config.N, std::vector<Eigen::VectorXd>(config.T));
    for (int i = 0; i < config.N; ++i) {
        for (int t = 0; t < config.T; ++t) {
            Eigen::VectorXd y = Eigen::VectorXd::Zero(G);
            for (int j = 0; j < config.J; ++j) {
                y += internals.loadings(i, j) * internals.factors[j][t];
            }
            outcomes[i][t] = y + draw_noise(shapes, config.noise_bound, noise_rng);
        }
    }

    FactorInstance instance{make_panel(grid, std::move(outcomes), config.T0), {}, {}};
    instance.truth = instance.panel.outcomes[0][config.T - 1];
    instance.internals = std::move(internals);
    return instance;
}

namespace {

Eigen::VectorXd weighting_estimate(const Panel& panel, const Eigen::VectorXd& g, int t) {
    Eigen::VectorXd v = Eigen::VectorXd::Zero(panel.grid->size());
    for (int i = 0; i + 1 < panel.n_units(); ++i) v += g[i] * panel.outcomes[i + 1][t];
    return v;
}

} // namespace

BoundReport evaluate_bound_auto(const ArInstance& instance, const WeightVector& weights,
                                double delta) {
    const Panel& panel = instance.panel;
    BoundReport report;
    const Eigen::VectorXd est = weighting_estimate(panel, weights.weights, panel.T0);
    report.realized_error =
        weighted_norm(panel.grid->quad_weights(), instance.truth - est);
    report.rhs = std::sqrt(instance.internals.beta_norm2_sum) * prefit(panel, weights) +
                 delta * instance.internals.sigma * (1.0 + weights.weights.norm());
    report.violated = report.realized_error > report.rhs;
    return report;
}

BoundReport evaluate_bound_factor(const FactorInstance& instance,
                                  const WeightVector& weights, double delta) {
    const Panel& panel = instance.panel;
    const FactorInternals& in = instance.internals;
    BoundReport report;
    const Eigen::VectorXd est =
        weighting_estimate(panel, weights.weights, panel.n_periods() - 1);
    report.realized_error =
        weighted_norm(panel.grid->quad_weights(), instance.truth - est);
    if (!(in.M2 > 1e-10 * in.M1 * in.M1 * panel.T0)) {
        report.assumption_ok = false;
        report.note = "factor matrix mu(x)'mu(x) is rank deficient (M2 = " +
                      std::to_string(in.M2) + "); bound skipped";
        report.rhs = std::numeric_limits<double>::quiet_NaN();
        return report;
    }
    const double j32 = std::pow(static_cast<double>(in.J), 1.5);
    const double lead = in.M1 * in.M1 * j32 / in.M2;
    report.rhs = lead / std::sqrt(static_cast<double>(panel.T0)) * prefit(panel, weights) +
                 2.0 * in.sigma * lead * weights.weights.lpNorm<1>() +
                 delta * in.sigma * (1.0 + weights.weights.norm());
    report.violated = report.realized_error > report.rhs;
    return report;
}

std::vector<McEstimatorSpec> default_mc_estimators() {
    using Kind = McEstimatorSpec::Kind;
    return {
        {Kind::fsc, 1.0, "fsc"},
        {Kind::afsc, 100.0, "afsc_100cv"},
        {Kind::afsc, 1.0, "afsc_cv"},
        {Kind::afsc, 0.01, "afsc_0.01cv"},
        {Kind::agsc, 1.0, "agsc"},
    };
}

double sample_quantile(std::vector<double> values, double p) {
    values.erase(std::remove_if(values.begin(), values.end(),
                                [](double v) { return std::isnan(v); }),
                 values.end());
    if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
    std::sort(values.begin(), values.end());
    const double h = (values.size() - 1) * p;
    const auto lo = static_cast<size_t>(std::floor(h));
    if (lo + 1 >= values.size()) return values.back();
    return values[lo] + (h - lo) * (values[lo + 1] - values[lo]);
}

namespace {

// Unpenalized linear-regression augmentation: regress the controls'
// post-treatment outcome on their pre-treatment outcomes and shift the
// balance estimate by the regression discrepancy.
Eigen::VectorXd agsc_estimate(const Panel& panel, const Eigen::VectorXd& gamma) {
    const int n = panel.n_units() - 1;
    const int T0 = panel.T0;
    const Eigen::VectorXd& qw = panel.grid->quad_weights();
    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(T0, T0);
    Eigen::VectorXd h = Eigen::VectorXd::Zero(T0);
    for (int i = 1; i <= n; ++i) {
        Eigen::MatrixXd Yi(T0, panel.grid->size());
        for (int t = 0; t < T0; ++t) Yi.row(t) = panel.outcomes[i][t];
        Eigen::MatrixXd Yw = Yi * qw.asDiagonal();
        H += Yw * Yi.transpose();
        h += Yw * panel.outcomes[i][T0];
    }
    Eigen::LDLT<Eigen::MatrixXd> ldlt(H);
    Eigen::VectorXd alpha;
    if (ldlt.info() == Eigen::Success) {
        alpha = ldlt.solve(h);
    }
    if (alpha.size() == 0 || !alpha.allFinite()) {
        alpha = H.bdcSvd(Eigen::ComputeThinU | Eigen::ComputeThinV).solve(h);
    }
    Eigen::VectorXd est = weighting_estimate(panel, gamma, T0);
    for (int t = 0; t < T0; ++t) {
        Eigen::VectorXd disc = panel.outcomes[0][t] - weighting_estimate(panel, gamma, t);
        est += alpha[t] * disc;
    }
    return est;
}

} // namespace

McTable run_monte_carlo(const McConfig& config,
                        const std::vector<McEstimatorSpec>& estimators) {
    if (config.reps < 1) throw DomainError("run_monte_carlo: reps must be >= 1");
    if (estimators.empty()) throw DomainError("run_monte_carlo: no estimators given");

    McTable table;
    for (const auto& e : estimators) table.estimator_names.push_back(e.name);
    table.errors.setConstant(config.reps, static_cast<int>(estimators.size()),
                             std::numeric_limits<double>::quiet_NaN());

    const bool needs_lambda = std::any_of(estimators.begin(), estimators.end(),
                                          [](const McEstimatorSpec& e) {
                                              return e.kind == McEstimatorSpec::Kind::afsc;
                                          });
    std::mutex failures_mutex;
    std::atomic<int> next_rep{0};

    auto worker = [&]() {
        for (;;) {
            const int rep = next_rep.fetch_add(1);
            if (rep >= config.reps) return;
            try {
                Panel panel;
                Eigen::VectorXd truth;
                if (config.dgp == DgpKind::autoregressive) {
                    ArInstance inst = gen_autoregressive(config.ar, rep);
                    panel = std::move(inst.panel);
                    truth = std::move(inst.truth);
                } else {
                    FactorInstance inst = gen_latent_factor(config.factor, rep);
                    panel = std::move(inst.panel);
                    truth = std::move(inst.truth);
                }
                const int post = panel.n_periods() - 1;
                const Eigen::VectorXd& qw = panel.grid->quad_weights();

                WeightVector gamma_scm = fit_scm(panel);
                BasisSystem basis;
                CoefficientBlock block;
                double lambda_cv = 0.0;
                if (needs_lambda) {
                    basis = build_basis(config.basis_kind, config.K, panel.grid);
                    block = center_and_expand(panel, basis);
                    lambda_cv =
                        cv_lambda(panel, basis, default_lambda_grid(panel, basis))
                            .best_lambda;
                }

                for (size_t e = 0; e < estimators.size(); ++e) {
                    try {
                        Eigen::VectorXd est;
                        switch (estimators[e].kind) {
                            case McEstimatorSpec::Kind::fsc:
                                est = weighting_estimate(panel, gamma_scm.weights, post);
                                break;
                            case McEstimatorSpec::Kind::afsc: {
                                WeightVector g = fit_ridge_augmented(
                                    block, gamma_scm,
                                    estimators[e].lambda_scale * lambda_cv);
                                est = weighting_estimate(panel, g.weights, post);
                                break;
                            }
                            case McEstimatorSpec::Kind::agsc:
                                est = agsc_estimate(panel, gamma_scm.weights);
                                break;
                        }
                        table.errors(rep, static_cast<int>(e)) =
                            weighted_norm(qw, truth - est);
                    } catch (const Error& err) {
                        std::lock_guard<std::mutex> lock(failures_mutex);
                        table.failures.push_back("rep " + std::to_string(rep + 1) + ", " +
                                                 estimators[e].name + ": " + err.what());
                    }
                }
            } catch (const Error& err) {
                std::lock_guard<std::mutex> lock(failures_mutex);
                table.failures.push_back("rep " + std::to_string(rep + 1) + ": " +
                                         err.what());
            }
        }
    };

    const int n_threads = std::max(1, config.threads);
    if (n_threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < n_threads; ++w) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }

    const int ne = static_cast<int>(estimators.size());
    table.median.resize(ne);
    table.q1.resize(ne);
    table.q3.resize(ne);
    for (int e = 0; e < ne; ++e) {
        std::vector<double> col(table.errors.col(e).data(),
                                table.errors.col(e).data() + config.reps);
        table.median[e] = sample_quantile(col, 0.5);
        table.q1[e] = sample_quantile(col, 0.25);
        table.q3[e] = sample_quantile(col, 0.75);
    }
    std::sort(table.failures.begin(), table.failures.end());
    return table;
}

} // namespace fsc
