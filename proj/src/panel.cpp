#include "fsc/panel.hpp"

namespace fsc {

void Panel::validate() const {
    if (!grid) throw DimensionError("Panel: null grid");
    const int N = n_units();
    if (N < 2) throw DimensionError("Panel: need at least 2 units");
    const int T = n_periods();
    if (!(T0 >= 1 && T0 < T)) {
        throw DomainError("Panel: require 1 <= T0 < T");
    }
    for (int i = 0; i < N; ++i) {
        if (static_cast<int>(outcomes[i].size()) != T) {
            throw DimensionError("Panel: ragged outcome array at unit " +
                                 std::to_string(i + 1));
        }
        for (int t = 0; t < T; ++t) {
            if (outcomes[i][t].size() != grid->size()) {
                throw DimensionError("Panel: outcome length mismatch at unit " +
                                     std::to_string(i + 1) + ", period " +
                                     std::to_string(t + 1));
            }
            if (!outcomes[i][t].allFinite()) {
                throw DomainError("Panel: non-finite outcome at unit " +
                                  std::to_string(i + 1) + ", period " +
                                  std::to_string(t + 1));
            }
        }
    }
    if (covariates) {
        if (covariates->rows() != N || covariates->cols() < 1) {
            throw DimensionError("Panel: covariate matrix must be N x p with p >= 1");
        }
        if (!covariates->allFinite()) {
            throw DomainError("Panel: non-finite covariates");
        }
    }
}

Panel make_panel(GridPtr grid, std::vector<std::vector<Eigen::VectorXd>> outcomes, int T0,
                 std::optional<Eigen::MatrixXd> covariates) {
    Panel p;
    p.grid = std::move(grid);
    p.outcomes = std::move(outcomes);
    p.T0 = T0;
    p.covariates = std::move(covariates);
    p.unit_ids.resize(p.outcomes.size());
    for (size_t i = 0; i < p.unit_ids.size(); ++i) p.unit_ids[i] = std::to_string(i + 1);
    p.validate();
    return p;
}

} // namespace fsc
