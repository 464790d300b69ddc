// Command-line front end: panel ingestion, weight fitting, augmentation,
// conformal bands, placebo tests, and the Monte Carlo harness. Results are
// emitted as plot-ready CSV/JSON with canonical formatting.

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

#include "fsc/estimator.hpp"
#include "fsc/inference.hpp"
#include "fsc/panel_io.hpp"
#include "fsc/simulate.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CommonOpts {
    std::string panel_path;
    std::string format = "csv";
    std::string config_path;
    std::string out_dir = ".";
    std::string space_override;
    std::string estimator = "fsc";
    std::string basis = "bspline";
    int K = 50;
    double alpha = 0.1;
    double lambda = -1.0; // <0: not set, use CV
    std::string lambda_grid_csv;
    std::uint64_t seed = 0; // fixed default; never the wall clock
    int threads = 1;
    bool json_errors = false;
    bool placebo_fixed_lambda = false;
};

fsc::BasisKind parse_basis(const std::string& s) {
    if (s == "bspline") return fsc::BasisKind::bspline_cubic;
    if (s == "fourier") return fsc::BasisKind::fourier;
    if (s == "standard") return fsc::BasisKind::standard;
    throw fsc::ValidationError("unknown basis '" + s + "' (expected bspline, fourier or standard)");
}

std::vector<double> parse_lambda_grid(const std::string& csv) {
    std::vector<double> grid;
    std::string cur;
    std::istringstream in(csv);
    while (std::getline(in, cur, ',')) {
        if (cur.empty()) continue;
        grid.push_back(std::stod(cur));
    }
    if (grid.empty()) throw fsc::ValidationError("--lambda-grid: no values parsed");
    return grid;
}

void apply_config_file(CommonOpts& opts) {
    if (opts.config_path.empty()) return;
    std::ifstream in(opts.config_path);
    if (!in) throw fsc::ValidationError("cannot open config '" + opts.config_path + "'");
    json j;
    try {
        in >> j;
        if (j.contains("estimator")) opts.estimator = j.at("estimator").get<std::string>();
        if (j.contains("basis")) opts.basis = j.at("basis").get<std::string>();
        if (j.contains("K")) opts.K = j.at("K").get<int>();
        if (j.contains("alpha")) opts.alpha = j.at("alpha").get<double>();
        if (j.contains("lambda") && !j.at("lambda").is_null()) {
            opts.lambda = j.at("lambda").get<double>();
        }
        if (j.contains("lambda_grid") && !j.at("lambda_grid").is_null()) {
            std::string csv;
            for (double v : j.at("lambda_grid").get<std::vector<double>>()) {
                csv += (csv.empty() ? "" : ",") + fsc::format_double(v);
            }
            opts.lambda_grid_csv = csv;
        }
        if (j.contains("seed")) opts.seed = j.at("seed").get<std::uint64_t>();
        if (j.contains("space")) opts.space_override = j.at("space").get<std::string>();
    } catch (const json::exception& e) {
        throw fsc::ValidationError("config '" + opts.config_path + "': " + e.what());
    }
}

fsc::LoadedPanel load_with_checks(const CommonOpts& opts) {
    if (opts.panel_path.empty()) throw fsc::ValidationError("--panel is required");
    fsc::LoadedPanel lp = fsc::load_panel(opts.panel_path, opts.format);
    if (!opts.space_override.empty()) {
        double p = 1.0, W = 1.0;
        const fsc::SpaceKind k =
            fsc::SpaceSpec::parse_kind(opts.space_override, &p, &W);
        if (k != lp.space.kind) {
            throw fsc::ValidationError("--space disagrees with the panel header (" +
                                       lp.space.kind_string() + ")");
        }
    }
    return lp;
}

fsc::FitConfig make_fit_config(const CommonOpts& opts) {
    fsc::FitConfig cfg;
    if (opts.estimator == "fsc") {
        cfg.estimator = fsc::EstimatorKind::fsc;
    } else if (opts.estimator == "afsc") {
        cfg.estimator = fsc::EstimatorKind::afsc;
    } else {
        throw fsc::ValidationError("unknown estimator '" + opts.estimator + "'");
    }
    cfg.basis_kind = parse_basis(opts.basis);
    cfg.K = opts.K;
    if (opts.lambda >= 0.0) {
        cfg.lambda.kind = fsc::LambdaPolicy::Kind::fixed;
        cfg.lambda.fixed_value = opts.lambda;
    } else {
        cfg.lambda.kind = fsc::LambdaPolicy::Kind::cv;
        if (!opts.lambda_grid_csv.empty()) {
            cfg.lambda.grid = parse_lambda_grid(opts.lambda_grid_csv);
        }
    }
    cfg.reselect_lambda_in_placebo = !opts.placebo_fixed_lambda;
    return cfg;
}

// Resolve the lambda actually used (for reporting); -1 when not applicable.
double resolve_lambda_for_report(const fsc::Panel& panel, const fsc::FitConfig& cfg,
                                 bool* used) {
    *used = cfg.estimator == fsc::EstimatorKind::afsc;
    if (!*used) return -1.0;
    if (cfg.lambda.kind == fsc::LambdaPolicy::Kind::fixed) return cfg.lambda.fixed_value;
    fsc::BasisSystem basis = fsc::build_basis(cfg.basis_kind, cfg.K, panel.grid);
    auto grid = cfg.lambda.grid.empty() ? fsc::default_lambda_grid(panel, basis)
                                        : cfg.lambda.grid;
    return cfg.lambda.scale * fsc::cv_lambda(panel, basis, grid).best_lambda;
}

void write_diagnostics_json(const std::string& path, const fsc::Diagnostics& d) {
    std::ofstream out(path);
    if (!out) throw fsc::ValidationError("cannot write '" + path + "'");
    out << "{\n";
    out << "  \"prefit\": " << fsc::format_double(d.prefit) << ",\n";
    out << "  \"l1_norm\": " << fsc::format_double(d.l1_norm) << ",\n";
    out << "  \"l2_norm\": " << fsc::format_double(d.l2_norm) << ",\n";
    out << "  \"covariate_imbalance\": " << fsc::format_double(d.covariate_imbalance)
        << ",\n";
    out << "  \"singular_values\": [";
    for (int i = 0; i < d.singular_values.size(); ++i) {
        out << (i ? ", " : "") << fsc::format_double(d.singular_values[i]);
    }
    out << "]\n}\n";
}

void write_estimates_csv(const std::string& path, const fsc::Panel& panel,
                         const std::vector<fsc::CounterfactualEstimate>& ests) {
    std::vector<std::vector<std::string>> rows;
    for (const auto& est : ests) {
        const Eigen::VectorXd& obs = panel.outcomes[0][est.period];
        for (int c = 0; c < est.raw.size(); ++c) {
            rows.push_back({std::to_string(est.period + 1), std::to_string(c + 1),
                            fsc::format_double(est.raw.values[c]),
                            fsc::format_double(est.projected.values[c]),
                            fsc::format_double(obs[c]),
                            fsc::format_double(obs[c] - est.projected.values[c])});
        }
    }
    fsc::write_csv_table(path, {"period", "coord_index", "raw", "projected", "observed",
                                "difference"},
                         rows);
}

int cmd_fit_like(const CommonOpts& opts) {
    fsc::LoadedPanel lp = load_with_checks(opts);
    fsc::FitConfig cfg = make_fit_config(opts);
    bool has_lambda = false;
    const double lambda = resolve_lambda_for_report(lp.panel, cfg, &has_lambda);
    fsc::WeightVector w;
    if (cfg.estimator == fsc::EstimatorKind::fsc) {
        w = fsc::fit_scm(lp.panel);
    } else {
        fsc::BasisSystem basis = fsc::build_basis(cfg.basis_kind, cfg.K, lp.panel.grid);
        w = fsc::fit_ridge_augmented(lp.panel, basis, lambda);
    }

    fs::create_directories(opts.out_dir);
    fsc::write_weights_json((fs::path(opts.out_dir) / "weights.json").string(),
                            lp.panel.unit_ids, w, opts.estimator, lambda, has_lambda);
    fsc::BasisSystem diag_basis =
        fsc::build_basis(cfg.basis_kind, std::min(cfg.K, lp.panel.grid->size()),
                         lp.panel.grid);
    write_diagnostics_json((fs::path(opts.out_dir) / "diagnostics.json").string(),
                           fsc::diagnostics(lp.panel, w, diag_basis));

    fsc::SpaceAdapter adapter = lp.space.make_adapter();
    std::vector<fsc::CounterfactualEstimate> ests;
    for (int t = lp.panel.T0; t < lp.panel.n_periods(); ++t) {
        ests.push_back(fsc::predict(lp.panel, w, adapter, t));
    }
    write_estimates_csv((fs::path(opts.out_dir) / "estimates.csv").string(), lp.panel,
                        ests);
    std::cout << "wrote weights.json, diagnostics.json, estimates.csv to " << opts.out_dir
              << "\n";
    return 0;
}

int cmd_band(const CommonOpts& opts) {
    fsc::LoadedPanel lp = load_with_checks(opts);
    fsc::FitConfig cfg = make_fit_config(opts);
    fsc::WeightVector w = fsc::fit_weights(lp.panel, cfg);
    fs::create_directories(opts.out_dir);
    std::vector<std::vector<std::string>> rows;
    for (int t = lp.panel.T0; t < lp.panel.n_periods(); ++t) {
        fsc::PredictionBand band = fsc::conformal_band(lp.panel, w, t, opts.alpha);
        for (int c = 0; c < band.center.size(); ++c) {
            rows.push_back({std::to_string(t + 1), std::to_string(c + 1),
                            fsc::format_double(band.center[c]),
                            fsc::format_double(band.lower[c]),
                            fsc::format_double(band.upper[c]),
                            fsc::format_double(band.quantile_radius[c])});
        }
    }
    fsc::write_csv_table((fs::path(opts.out_dir) / "bands.csv").string(),
                         {"period", "coord_index", "center", "lower", "upper", "q_alpha"},
                         rows);
    std::cout << "wrote bands.csv to " << opts.out_dir << "\n";
    return 0;
}

int cmd_placebo(const CommonOpts& opts) {
    fsc::LoadedPanel lp = load_with_checks(opts);
    fsc::FitConfig cfg = make_fit_config(opts);
    fs::create_directories(opts.out_dir);
    std::ofstream out(fs::path(opts.out_dir) / "placebo.json");
    if (!out) throw fsc::ValidationError("cannot write placebo.json");
    out << "{\n  \"units\": [";
    for (size_t i = 0; i < lp.panel.unit_ids.size(); ++i) {
        out << (i ? ", " : "") << "\"" << lp.panel.unit_ids[i] << "\"";
    }
    out << "],\n  \"periods\": [\n";
    for (int t = lp.panel.T0; t < lp.panel.n_periods(); ++t) {
        fsc::PlaceboResult res = fsc::placebo_test(lp.panel, cfg, t);
        out << "    {\"period\": " << (t + 1)
            << ", \"p_value\": " << fsc::format_double(res.p_value)
            << ", \"residual_norms\": [";
        for (int i = 0; i < res.residual_norms.size(); ++i) {
            out << (i ? ", " : "") << fsc::format_double(res.residual_norms[i]);
        }
        out << "]}" << (t + 1 < lp.panel.n_periods() ? "," : "") << "\n";
    }
    out << "  ]\n}\n";
    std::cout << "wrote placebo.json to " << opts.out_dir << "\n";
    return 0;
}

int cmd_cv(const CommonOpts& opts) {
    fsc::LoadedPanel lp = load_with_checks(opts);
    fsc::BasisSystem basis =
        fsc::build_basis(parse_basis(opts.basis), opts.K, lp.panel.grid);
    std::vector<double> grid = opts.lambda_grid_csv.empty()
                                   ? fsc::default_lambda_grid(lp.panel, basis)
                                   : parse_lambda_grid(opts.lambda_grid_csv);
    fsc::CvResult res = fsc::cv_lambda(lp.panel, basis, grid);
    fs::create_directories(opts.out_dir);
    std::ofstream out(fs::path(opts.out_dir) / "cv.json");
    if (!out) throw fsc::ValidationError("cannot write cv.json");
    out << "{\n  \"best_lambda\": " << fsc::format_double(res.best_lambda)
        << ",\n  \"lambdas\": [";
    for (size_t i = 0; i < res.lambdas.size(); ++i) {
        out << (i ? ", " : "") << fsc::format_double(res.lambdas[i]);
    }
    out << "],\n  \"cv\": [";
    for (size_t i = 0; i < res.cv_values.size(); ++i) {
        out << (i ? ", " : "") << fsc::format_double(res.cv_values[i]);
    }
    out << "]\n}\n";
    std::cout << "wrote cv.json to " << opts.out_dir << "\n";
    return 0;
}

int cmd_simulate(const CommonOpts& opts, const std::string& dgp, double noise, int reps) {
    fsc::McConfig mc;
    mc.reps = reps;
    mc.threads = opts.threads;
    mc.basis_kind = parse_basis(opts.basis);
    mc.K = opts.K;
    if (dgp == "ar") {
        mc.dgp = fsc::DgpKind::autoregressive;
        mc.ar.seed = opts.seed;
        if (noise > 0) mc.ar.noise_bound = noise;
    } else if (dgp == "factor") {
        mc.dgp = fsc::DgpKind::latent_factor;
        mc.factor.seed = opts.seed;
        if (noise > 0) mc.factor.noise_bound = noise;
    } else {
        throw fsc::ValidationError("--dgp must be 'ar' or 'factor'");
    }

    fsc::McTable table = fsc::run_monte_carlo(mc, fsc::default_mc_estimators());

    fs::create_directories(opts.out_dir);
    std::vector<std::string> header{"rep"};
    for (const auto& n : table.estimator_names) header.push_back(n);
    std::vector<std::vector<std::string>> rows;
    for (int r = 0; r < table.errors.rows(); ++r) {
        std::vector<std::string> row{std::to_string(r + 1)};
        for (int e = 0; e < table.errors.cols(); ++e) {
            row.push_back(fsc::format_double(table.errors(r, e)));
        }
        rows.push_back(std::move(row));
    }
    fsc::write_csv_table((fs::path(opts.out_dir) / "mc_table.csv").string(), header, rows);

    std::ofstream out(fs::path(opts.out_dir) / "mc_summary.json");
    if (!out) throw fsc::ValidationError("cannot write mc_summary.json");
    out << "{\n  \"estimators\": [";
    for (size_t e = 0; e < table.estimator_names.size(); ++e) {
        out << (e ? ", " : "") << "\"" << table.estimator_names[e] << "\"";
    }
    auto emit_vec = [&](const char* name, const Eigen::VectorXd& v) {
        out << ",\n  \"" << name << "\": [";
        for (int i = 0; i < v.size(); ++i) out << (i ? ", " : "") << fsc::format_double(v[i]);
        out << "]";
    };
    out << "]";
    emit_vec("median", table.median);
    emit_vec("q1", table.q1);
    emit_vec("q3", table.q3);
    out << ",\n  \"failures\": [";
    for (size_t i = 0; i < table.failures.size(); ++i) {
        out << (i ? ", " : "") << json(table.failures[i]).dump();
    }
    out << "]\n}\n";
    std::cout << "wrote mc_table.csv, mc_summary.json to " << opts.out_dir << "\n";
    return 0;
}

int dispatch_error(const CommonOpts& opts, const fsc::Error& e, int code) {
    if (opts.json_errors) {
        json j{{"error", code == 2 ? "validation" : "numerical"}, {"message", e.what()}};
        std::cerr << j.dump() << "\n";
    } else {
        std::cerr << "error: " << e.what() << "\n";
    }
    return code;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Functional synthetic control for metric-space valued panel outcomes"};
    app.require_subcommand(1);

    CommonOpts opts;
    std::string dgp = "ar";
    double noise = -1.0;
    int reps = 500;

    auto add_common = [&](CLI::App* sub, bool needs_panel) {
        if (needs_panel) {
            sub->add_option("--panel", opts.panel_path, "panel file");
            sub->add_option("--format", opts.format, "panel format: csv or json");
            sub->add_option("--space", opts.space_override, "expected space kind (checked)");
        }
        sub->add_option("--config", opts.config_path, "run configuration JSON");
        sub->add_option("--out-dir", opts.out_dir, "output directory");
        sub->add_option("--seed", opts.seed, "master seed (fixed default 0)");
        sub->add_option("--threads", opts.threads, "worker threads");
        sub->add_option("--basis", opts.basis, "basis kind: bspline, fourier, standard");
        sub->add_option("--K", opts.K, "number of basis elements");
        sub->add_option("--lambda", opts.lambda, "fixed ridge penalty (overrides CV)");
        sub->add_option("--lambda-grid", opts.lambda_grid_csv,
                        "comma-separated CV grid for lambda");
        sub->add_option("--alpha", opts.alpha, "band level alpha");
        sub->add_flag("--json-errors", opts.json_errors, "structured errors on stderr");
    };

    CLI::App* fit = app.add_subcommand("fit", "balance weights and estimates");
    add_common(fit, true);
    CLI::App* augment =
        app.add_subcommand("augment", "ridge-augmented weights and estimates");
    add_common(augment, true);
    CLI::App* band = app.add_subcommand("band", "conformal prediction bands");
    add_common(band, true);
    band->add_option("--estimator", opts.estimator, "fsc or afsc");
    CLI::App* placebo = app.add_subcommand("placebo", "placebo permutation test");
    add_common(placebo, true);
    placebo->add_option("--estimator", opts.estimator, "fsc or afsc");
    placebo->add_flag("--fixed-lambda-placebo", opts.placebo_fixed_lambda,
                      "reuse one cross-validated lambda in every placebo refit");
    CLI::App* cv = app.add_subcommand("cv", "cross-validate the ridge penalty");
    add_common(cv, true);
    CLI::App* simulate = app.add_subcommand("simulate", "Monte Carlo comparison");
    add_common(simulate, false);
    simulate->add_option("--dgp", dgp, "ar or factor");
    simulate->add_option("--noise", noise, "noise bound C");
    simulate->add_option("--reps", reps, "Monte Carlo repetitions");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }

    try {
        apply_config_file(opts);
        if (fit->parsed()) {
            opts.estimator = "fsc";
            return cmd_fit_like(opts);
        }
        if (augment->parsed()) {
            opts.estimator = "afsc";
            return cmd_fit_like(opts);
        }
        if (band->parsed()) return cmd_band(opts);
        if (placebo->parsed()) return cmd_placebo(opts);
        if (cv->parsed()) return cmd_cv(opts);
        if (simulate->parsed()) return cmd_simulate(opts, dgp, noise, reps);
    } catch (const fsc::SolverError& e) {
        return dispatch_error(opts, e, 3);
    } catch (const fsc::NumericError& e) {
        return dispatch_error(opts, e, 3);
    } catch (const fsc::Error& e) {
        return dispatch_error(opts, e, 2);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
