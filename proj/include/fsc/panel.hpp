#pragma once

#include <Eigen/Core>
#include <optional>
#include <string>
#include <vector>

#include "fsc/grid.hpp"

namespace fsc {

// N units observed over T periods with outcomes already embedded in the
// Hilbert space. Unit 0 is the treated unit; periods 0..T0-1 are
// pre-treatment. Optional unit covariates sit in Z (N x p).
struct Panel {
    GridPtr grid;
    // outcomes[i][t], each a vector of grid-size values.
    std::vector<std::vector<Eigen::VectorXd>> outcomes;
    int T0 = 0;
    std::optional<Eigen::MatrixXd> covariates;
    std::vector<std::string> unit_ids; // optional labels, defaults to 1..N

    int n_units() const { return static_cast<int>(outcomes.size()); }
    int n_periods() const { return outcomes.empty() ? 0 : static_cast<int>(outcomes[0].size()); }

    HilbertElement element(int unit, int period) const {
        return HilbertElement(grid, outcomes.at(unit).at(period));
    }

    void validate() const;
};

Panel make_panel(GridPtr grid, std::vector<std::vector<Eigen::VectorXd>> outcomes, int T0,
                 std::optional<Eigen::MatrixXd> covariates = std::nullopt);

} // namespace fsc
