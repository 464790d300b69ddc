#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

#include "fsc/basis.hpp"
#include "fsc/panel.hpp"
#include "fsc/weights.hpp"

namespace fsc {

// Autoregressive data-generating process: pre-treatment outcomes from a
// damped cosine expansion (drawn once per seed and therefore frozen across
// replications), post-treatment outcomes from a three-lag Gaussian-kernel
// regression plus bounded noise.
struct ArConfig {
    int N = 50;
    int T = 10;
    int T0 = 9;
    int grid_points = 100;
    std::vector<double> lag_coeffs{0.6, 0.3, 0.1}; // newest lag first
    double kernel_sd = 0.1;
    double noise_bound = 0.05; // C; components are uniform on [-C, C]
    std::uint64_t seed = 0;
};

struct ArInternals {
    std::vector<Eigen::MatrixXd> lag_kernels; // beta_k evaluated on the grid
    double beta_norm2_sum = 0.0;              // sum of squared kernel norms
    double sigma = 0.0;                       // a.s. bound on the error norm
    std::vector<Eigen::VectorXd> noiseless_post;
};

struct ArInstance {
    Panel panel;
    Eigen::VectorXd truth; // counterfactual outcome of the treated unit at T
    ArInternals internals;
};

ArInstance gen_autoregressive(const ArConfig& config, std::uint64_t rep = 0);

// Latent factor process with J factors; loadings and noise are redrawn each
// replication. The paper kind uses the cosine factors mu_jt(x) =
// sqrt(2) cos((j+t) pi x) (mu_11 = 1); those are rank-deficient across
// factors at every x, so the dct kind provides a full-rank alternative for
// bound checks.
struct FactorConfig {
    enum class Kind { paper, dct };
    int N = 50;
    int T = 10;
    int T0 = 9;
    int J = 5;
    int grid_points = 100;
    double loading_sd = 0.1;
    double noise_bound = 0.02;
    std::uint64_t seed = 0;
    Kind factor_kind = Kind::paper;
};

struct FactorInternals {
    std::vector<std::vector<Eigen::VectorXd>> factors; // [j][t] on the grid
    Eigen::MatrixXd loadings;                          // N x J
    double M1 = 0.0; // max |mu_jt(x)|
    double M2 = 0.0; // min over x of lambda_min(mu(x)' mu(x)), pre periods
    double sigma = 0.0;
    int J = 0;
};

struct FactorInstance {
    Panel panel;
    Eigen::VectorXd truth;
    FactorInternals internals;
};

FactorInstance gen_latent_factor(const FactorConfig& config, std::uint64_t rep = 0);

// One evaluation of a finite-sample error bound on a simulated instance.
struct BoundReport {
    double realized_error = 0.0;
    double rhs = 0.0;
    bool violated = false;
    bool assumption_ok = true;
    std::string note;
};

BoundReport evaluate_bound_auto(const ArInstance& instance, const WeightVector& weights,
                                double delta);
BoundReport evaluate_bound_factor(const FactorInstance& instance,
                                  const WeightVector& weights, double delta);

struct McEstimatorSpec {
    enum class Kind { fsc, afsc, agsc };
    Kind kind = Kind::fsc;
    double lambda_scale = 1.0; // multiplies the cross-validated lambda (afsc)
    std::string name;
};

// FSC, AFSC at {100, 1, 0.01} x lambda_cv, and the unpenalized
// linear-regression augmentation.
std::vector<McEstimatorSpec> default_mc_estimators();

enum class DgpKind { autoregressive, latent_factor };

struct McConfig {
    DgpKind dgp = DgpKind::autoregressive;
    ArConfig ar;
    FactorConfig factor;
    int reps = 500;
    int threads = 1;
    BasisKind basis_kind = BasisKind::bspline_cubic;
    int K = 50;
};

struct McTable {
    std::vector<std::string> estimator_names;
    Eigen::MatrixXd errors; // reps x estimators, NaN where a rep failed
    std::vector<std::string> failures;
    Eigen::VectorXd median, q1, q3; // per estimator, NaNs dropped
};

McTable run_monte_carlo(const McConfig& config,
                        const std::vector<McEstimatorSpec>& estimators);

// Type-7 (linear interpolation) sample quantile; NaNs are dropped.
double sample_quantile(std::vector<double> values, double p);

} // namespace fsc
