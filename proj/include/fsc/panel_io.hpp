#pragma once

#include <string>
#include <vector>

#include "fsc/panel.hpp"
#include "fsc/spaces.hpp"
#include "fsc/weights.hpp"

namespace fsc {

// Declarative description of a space adapter plus its grid, as found in
// panel file headers and CLI flags.
struct SpaceSpec {
    SpaceKind kind = SpaceKind::l2;
    double power = 1.0;     // spd_power
    double weight_cap = 1.0; // laplacian
    int matrix_dim = 0;     // spd/laplacian m, composition d
    int grid_n = 0;         // uniform grid size (l2, wasserstein)
    double grid_a = 0.0;
    double grid_b = 1.0;

    SpaceAdapter make_adapter() const;
    // e.g. "l2", "wasserstein", "spd-power:0.5", "laplacian:1.5"
    std::string kind_string() const;
    static SpaceKind parse_kind(const std::string& text, double* power_out,
                                double* cap_out);
};

// A panel together with the raw metric-space coordinates it was built from;
// saving writes the raw coordinates so load/save round-trips are exact.
struct LoadedPanel {
    Panel panel;
    SpaceSpec space;
    std::vector<std::vector<Eigen::VectorXd>> raw; // [unit][period]
};

LoadedPanel load_panel(const std::string& path, const std::string& format);
LoadedPanel load_panel_csv(const std::string& path);
LoadedPanel load_panel_json(const std::string& path);
void save_panel_csv(const LoadedPanel& lp, const std::string& path);
void save_panel_json(const LoadedPanel& lp, const std::string& path);

// Builds a LoadedPanel around embedded outcomes by inverting them back to
// raw coordinates (identity for l2).
LoadedPanel wrap_panel(Panel panel, const SpaceSpec& space);

// Canonical float formatting: 17 significant digits, round-trip exact.
std::string format_double(double v);

// Minimal canonical writers/readers used by the CLI result bundle.
void write_weights_json(const std::string& path, const std::vector<std::string>& unit_ids,
                        const WeightVector& weights, const std::string& estimator,
                        double lambda, bool has_lambda);
WeightVector read_weights_json(const std::string& path);

void write_csv_table(const std::string& path, const std::vector<std::string>& header,
                     const std::vector<std::vector<std::string>>& rows);

} // namespace fsc
